#pragma once

// Runs the protocol roles over a simulated network. Server nodes share one
// logical authority; thing nodes each run a child for their current identity.
// Every exchange travels as encoded wire bytes, so an attached adversary sees
// exactly what a network observer would.

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caaas/authority.hpp"
#include "caaas/child.hpp"
#include "caaas/simnet.hpp"

namespace caaas {

struct DeploymentConfig {
  AuthorityConfig authority;
  ChildConfig child;
  // Children resend the identical bytes of an unanswered server request after
  // this long; 0 disables retransmission.
  std::uint64_t retransmit_timeout_ms = 0;
  unsigned max_retransmits = 3;
  // After the last copy: keep waiting (false), or fail the transaction with
  // Timeout one more timeout later (true).
  bool abandon_after_retransmits = false;
};

enum class TxnKind : std::uint8_t { Registration, Authentication, PeerExchange };
std::string_view to_string(TxnKind k) noexcept;

struct Transaction {
  std::uint64_t id = 0;
  TxnKind kind = TxnKind::Authentication;
  std::string node;
  std::string identity;  // set when the transaction starts
  std::string server;
  std::string peer;  // responder identity for PeerExchange
  std::optional<std::string> new_identity;  // Registration under a fresh identity
  std::optional<std::uint64_t> lifetime_ms;
  std::uint64_t requested_us = 0;
  std::optional<std::uint64_t> started_us;
  std::optional<std::uint64_t> finished_us;
  bool ok = false;
  std::optional<Errc> error;
  unsigned retransmits = 0;

  bool done() const { return finished_us.has_value(); }
  // Completion minus request time; requires done().
  double delay_ms() const { return static_cast<double>(*finished_us - requested_us) / 1000.0; }
};

// An error raised at a node outside any transaction it owns, or a refusal a
// server sent.
struct NodeEvent {
  std::uint64_t at_us = 0;
  std::string node;
  std::string subject;
  Errc code = Errc::InvalidArgument;
  std::string detail;
};

struct ServerLoad {
  double capacity_per_s = 0;  // 0: requests are handled on arrival
  std::uint64_t tasks = 0;
  std::uint64_t busy_us = 0;
  std::uint64_t busy_until_us = 0;
};

// Deterministic device profile for an identity.
DeviceProfile sample_profile(const std::string& id, Rng& rng);

class Deployment {
 public:
  Deployment(const CurveParams& params, std::uint64_t seed, DeploymentConfig config = {});
  Deployment(const Deployment&) = delete;
  Deployment& operator=(const Deployment&) = delete;

  sim::Simulator& net() { return net_; }
  const sim::Simulator& net() const { return net_; }
  Authority& authority() { return authority_; }
  const Authority& authority() const { return authority_; }
  const wire::Announcement& announcement() const { return announcement_; }
  const CurveParams& params() const { return authority_.params(); }

  void add_server(const std::string& node_id, sim::Tier tier, double capacity_per_s = 0);
  void add_proxy(const std::string& node_id, sim::Tier tier);
  // A thing node whose first identity is its node id, provisioned with the
  // authority (baseline profile and registration channel key).
  Child& add_thing(const std::string& node_id, sim::Tier tier = sim::Tier::Thing);
  void connect(const sim::LinkSpec& link) { net_.connect(link); }

  // Current identity of a thing node and the child running it.
  const std::string& identity_of(const std::string& node_id) const;
  const std::string& node_of(const std::string& identity) const;
  Child& child(const std::string& node_id);
  // The profile the device actually runs and reports when it registers.
  DeviceProfile& device_profile(const std::string& node_id);

  // Queue a transaction on a thing node; each node runs its transactions one
  // at a time in request order. Returns the transaction id.
  std::uint64_t request_registration(const std::string& node, const std::string& server,
                                     std::optional<std::uint64_t> lifetime_ms = std::nullopt,
                                     std::optional<std::string> new_identity = std::nullopt);
  std::uint64_t request_authentication(const std::string& node, const std::string& server);
  std::uint64_t request_peer_exchange(const std::string& node, const std::string& peer_node,
                                      const std::string& server);
  // Same, requested at a future simulated time.
  void request_at(std::uint64_t at_us, TxnKind kind, const std::string& node, const std::string& server,
                  std::optional<std::string> new_identity = std::nullopt);

  std::vector<sim::Delivery> run() { return net_.run(); }
  std::vector<sim::Delivery> run_until(TimestampMs t) { return net_.run_until(t); }

  const Transaction& transaction(std::uint64_t id) const;
  const std::vector<Transaction>& transactions() const { return txns_; }
  const std::vector<NodeEvent>& refusals() const { return refusals_; }
  const std::vector<NodeEvent>& node_errors() const { return node_errors_; }
  const std::vector<TrustNotice>& notices(const std::string& node_id) const;
  const ServerLoad& server_load(const std::string& node_id) const;
  // Requests the authority accepted (sessions established), across servers.
  std::uint64_t accepted_auth_requests() const { return accepted_auth_; }

  // Scalar fields of every key the run produced, for transcript scans:
  // session keys, peer keys, A_ID encodings and the authority's private key.
  std::vector<Bytes> secret_material() const;

 private:
  enum class Step : std::uint8_t { Idle, AwaitRegistration, AwaitConfirm, AwaitAuth, AwaitPeer };
  struct Thing {
    std::string identity;
    std::deque<std::uint64_t> queue;
    std::optional<std::uint64_t> active;
    Step step = Step::Idle;
    std::string last_dest;
    Bytes last_sent;
    std::uint64_t generation = 0;
    unsigned unanswered_copies = 0;
    std::vector<TrustNotice> notices;
  };

  void provision_identity(const std::string& node_id, const std::string& identity);
  std::uint64_t enqueue(Transaction txn);
  void maybe_start(const std::string& node_id);
  void send_step(const std::string& node_id, const std::string& dest, Bytes bytes, Step step);
  void arm_retransmit(const std::string& node_id);
  void finish(const std::string& node_id, bool ok, std::optional<Errc> error);
  void fail_peer_txn(const std::string& initiator_node, const std::string& responder, Errc code);

  void on_server(const std::string& server, const sim::Delivery& d);
  void serve(const std::string& server, const std::string& from, const Bytes& payload);
  void on_thing(const std::string& node_id, const sim::Delivery& d);
  void log_error(const std::string& node_id, const std::string& subject, Errc code, const std::string& detail);
  void broadcast_notices(const std::string& server);

  sim::Simulator net_;
  Rng rng_;
  DeploymentConfig config_;
  Authority authority_;
  wire::Announcement announcement_;
  std::map<std::string, ServerLoad> servers_;
  std::map<std::string, Thing> things_;
  std::map<std::string, Child> children_;  // by identity
  std::map<std::string, std::string> identity_node_;
  std::map<std::string, DeviceProfile> actual_profiles_;  // by identity
  std::map<std::string, std::optional<std::uint64_t>> lifetimes_;
  std::vector<Transaction> txns_;
  std::vector<NodeEvent> refusals_;
  std::vector<NodeEvent> node_errors_;
  std::uint64_t accepted_auth_ = 0;
};

// Star layout used by the command-line drivers and tests: every thing one
// 5 ms hop from a gateway, the gateway 2 ms from the custodian.
inline constexpr const char* kCustodian = "custodian";
inline constexpr const char* kGateway = "gateway";
void build_star(Deployment& dep, const std::vector<std::string>& things);

struct KeyAgreement {
  std::string id;
  bool registered = false;
  bool keys_match = false;  // child and authority hold the same session key
  std::optional<Errc> error;
};
// Registration (with its confirmation round) for every thing, then, when
// `authenticate`, one more authentication round each.
std::vector<KeyAgreement> run_handshakes(Deployment& dep, const std::vector<std::string>& things,
                                         bool authenticate = true);

struct PeerOutcome {
  bool ok = false;
  bool keys_equal = false;
  std::optional<Errc> error;
};
// Key exchange between two authenticated things through the custodian.
PeerOutcome run_peer_exchange(Deployment& dep, const std::string& from, const std::string& to);

}  // namespace caaas
