#pragma once

// Device integrity: canonical device profiles, the integrity verification
// value (IVV) computed over them, the per-device trust state machine, and the
// affinity store holding each device's manufacturer baseline.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "caaas/crypto.hpp"

namespace caaas {

struct DeviceProfile {
  std::string id;
  std::array<std::uint8_t, 32> firmware_digest{};
  std::array<std::uint8_t, 32> os_digest{};
  std::vector<std::pair<std::string, std::string>> software_list;  // (name, version)
  std::vector<std::uint32_t> used_slots;
  std::vector<std::uint32_t> unused_slots;
  std::vector<std::string> blacklist_services;

  // Sorts every list and drops duplicates.
  void canonicalize();
  bool is_canonical() const;

  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

struct IvvValue {
  std::array<std::uint8_t, 32> digest{};
  friend bool operator==(const IvvValue&, const IvvValue&) = default;
};

// Digest over the length-prefixed, fixed-field-order serialisation of a
// canonical profile. Throws Error{NonCanonicalProfile}.
IvvValue compute_ivv(const DeviceProfile& profile);

struct IvvVerdict {
  bool match = false;
  // Names of the profile fields that differ, in declaration order.
  std::vector<std::string> differing_fields;
};

// Compares the IVVs of a baseline and a reported profile; on mismatch the
// verdict names every differing field.
IvvVerdict compare_profiles(const DeviceProfile& baseline, const DeviceProfile& reported);

enum class TrustState : std::uint8_t {
  Untrusted = 0,
  Trusted = 1,
  Quarantined = 2,
  ResetPending = 3,
  Blacklisted = 4,
};

std::string_view to_string(TrustState s) noexcept;

// Whether a device in this state may register or authenticate.
inline bool admits_protocol(TrustState s) {
  return s != TrustState::Quarantined && s != TrustState::Blacklisted;
}

enum class CountermeasurePolicy : std::uint8_t { Quarantine, Reset, Blacklist };

// Broadcast to neighbouring nodes whenever a countermeasure fires.
struct TrustNotice {
  std::string id;
  TrustState state = TrustState::Untrusted;
  TimestampMs at;
  friend bool operator==(const TrustNotice&, const TrustNotice&) = default;
};

struct CountermeasureOutcome {
  TrustState state = TrustState::Untrusted;
  std::optional<TrustNotice> notice;
};

// The countermeasure state machine. Match: Quarantined and Blacklisted are
// sticky, anything else becomes Trusted. Mismatch: Blacklisted stays,
// ResetPending escalates to Blacklisted, otherwise the policy decides
// (Quarantine -> Quarantined, Reset -> ResetPending, Blacklist -> Blacklisted).
// A Quarantined device seeing another mismatch under the Reset policy stays
// Quarantined.
CountermeasureOutcome apply_countermeasure(const std::string& id, TrustState current, const IvvVerdict& verdict,
                                           CountermeasurePolicy policy, TimestampMs now);

enum class Provenance : std::uint8_t { Parent, Child, Unknown };

struct AffinityRecord {
  DeviceProfile baseline;
  SymmetricKey registration_key;
  TrustState state = TrustState::Untrusted;
  TimestampMs since;
};

// Manufacturer ground truth (the Parent's view) for every device a Custodian
// may admit.
class AffinityStore {
 public:
  // Adds or replaces a device's record. The baseline is canonicalised.
  void provision(DeviceProfile baseline, SymmetricKey registration_key);

  bool contains(const std::string& id) const { return records_.count(id) != 0; }
  // Throws Error{UnknownDevice}.
  const AffinityRecord& record(const std::string& id) const;
  TrustState state(const std::string& id) const { return record(id).state; }

  // Compares the reported profile against the baseline and moves the trust
  // state through apply_countermeasure. Throws Error{UnknownDevice}.
  std::pair<IvvVerdict, CountermeasureOutcome> verify(const DeviceProfile& reported, CountermeasurePolicy policy,
                                                      TimestampMs now);

  // Replaces the baseline; only Parent provenance is accepted
  // (Error{UntrustedProvenance}).
  void update_profile(const std::string& id, DeviceProfile new_profile, Provenance provenance);

  void set_state(const std::string& id, TrustState state, TimestampMs now);

  // One device per line: hex(id) fw os software used unused blacklist key state
  // since. Lists are comma-separated hex items, "-" when empty; software items
  // are hex(name):hex(version).
  std::string dump() const;
  static AffinityStore load(std::string_view text);

  const std::map<std::string, AffinityRecord>& records() const { return records_; }

 private:
  AffinityRecord& mutable_record(const std::string& id);
  std::map<std::string, AffinityRecord> records_;
};

// Editable text form, one `key = value` per line: id; firmware and os as 64
// hex digits; software as comma-separated name:version items; used_slots,
// unused_slots and blacklist as comma-separated lists ("-" when empty).
// Parsing canonicalises. Errors: ConfigError, DecodeError.
DeviceProfile parse_profile(std::string_view text);
std::string format_profile(const DeviceProfile& profile);

// Free-function form of the store check, for callers holding both profiles.
IvvVerdict verify_ivv(const AffinityStore& store, const DeviceProfile& reported);

}  // namespace caaas
