#pragma once

// The server S: CA root key holder and Custodian responder. Issues ID-based
// authentication keys, answers mutual-authentication requests, relays
// inter-device key proposals, and keeps the revocation list.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "caaas/crypto.hpp"
#include "caaas/curve.hpp"
#include "caaas/integrity.hpp"
#include "caaas/wire.hpp"

namespace caaas {

struct AuthorityConfig {
  std::uint64_t freshness_window_ms = kDefaultFreshnessWindowMs;
  CountermeasurePolicy policy = CountermeasurePolicy::Quarantine;
};

struct RegistrationRecord {
  std::string id;
  CurvePoint auth_key;  // A_ID = K_S^R x H1(ID)
  CurvePoint id_point;  // Q_ID = H1(ID)
  TimestampMs issued_at;
  std::optional<std::uint64_t> lifetime_ms;
};

enum class RevocationReason : std::uint8_t { Compromise, Expiry, Policy };
std::string_view to_string(RevocationReason r) noexcept;

struct CrlEntry {
  std::string id;
  TimestampMs revoked_at;
  RevocationReason reason = RevocationReason::Policy;
};

class Authority {
 public:
  // Draws K_S^R in [1, n-1] and publishes {curve, P, K_S^U, hash ids}.
  static std::pair<Authority, wire::Announcement> setup(const CurveParams& params, Rng rng, ClockFn clock,
                                                        AuthorityConfig config = {});

  Authority(Authority&&) noexcept = default;
  Authority& operator=(Authority&&) noexcept = default;

  const CurveParams& params() const { return params_; }
  const wire::Announcement& announcement() const { return announcement_; }
  const CurvePoint& public_key() const { return public_key_; }
  const AuthorityConfig& config() const { return config_; }
  TimestampMs now() const { return clock_(); }

  AffinityStore& affinity() { return affinity_; }
  const AffinityStore& affinity() const { return affinity_; }
  // Parent affinity: records the manufacturer baseline and the pre-shared
  // registration channel key for a device.
  void provision_device(DeviceProfile baseline, SymmetricKey registration_key);

  // Integrity check, then A_ID = K_S^R x H1(ID) sealed under the registration
  // channel key. Errors: UnknownDevice, IntegrityMismatch (device quarantined
  // or reset), DeviceUntrusted, DuplicateRegistration.
  wire::RegistrationResponse register_child(const wire::RegistrationRequest& req, const DeviceProfile& reported,
                                            std::optional<std::uint64_t> lifetime_ms = std::nullopt);

  // Errors: NotRegistered, Revoked, Expired, DeviceUntrusted, StaleTimestamp,
  // ReplayDetected, BadProof.
  wire::AuthResponse handle_auth_request(const wire::AuthRequest& req);

  struct Relay {
    std::string target;
    wire::PeerRelay message;
  };
  // Errors: NoSession, AuthFailure, TargetRevoked.
  Relay relay_peer_request(const std::string& from_id, const wire::PeerInit& msg);

  // Error{UnknownId} for an id that was never registered.
  CrlEntry revoke(const std::string& id, RevocationReason reason);
  bool is_revoked(const std::string& id) const;
  // Drops short-lived records whose issued_at + lifetime < now and lists them
  // on the CRL with reason Expiry. Returns the number purged.
  std::size_t purge_expired(TimestampMs now);
  std::size_t purge_replay_cache(TimestampMs now);

  const std::map<std::string, RegistrationRecord>& registry() const { return registry_; }
  const std::vector<CrlEntry>& crl() const { return crl_; }
  std::optional<SessionKey> session(const std::string& id) const;
  void drop_session(const std::string& id) { sessions_.erase(id); }
  std::size_t replay_cache_size() const { return replay_cache_.size(); }
  // K_S^U == K_S^R x P.
  bool key_pair_consistent() const;

  // Countermeasure notices produced since the last call.
  std::vector<TrustNotice> take_notices();

  // Registry and CRL as text, one record per line:
  //   R hex(id) hex(A) issued_ms lifetime_ms|-
  //   C hex(id) revoked_ms reason
  // Loading replaces the registry and CRL and checks every A against this
  // authority's key (Error{DecodeError}).
  std::string dump_state() const;
  void load_state(std::string_view text);

 private:
  Authority(CurveParams params, Rng rng, ClockFn clock, AuthorityConfig config);

  const CrlEntry* crl_entry(const std::string& id) const;
  void check_admissible(const std::string& id) const;

  CurveParams params_;
  Rng rng_;
  ClockFn clock_;
  AuthorityConfig config_;
  Scalar private_key_;
  CurvePoint public_key_;
  wire::Announcement announcement_;
  AffinityStore affinity_;
  std::map<std::string, RegistrationRecord> registry_;
  std::set<std::pair<std::string, std::uint64_t>> replay_cache_;
  std::map<std::string, SessionKey> sessions_;
  std::vector<CrlEntry> crl_;
  std::vector<TrustNotice> notices_;
};

}  // namespace caaas
