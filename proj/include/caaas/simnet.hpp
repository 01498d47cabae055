#pragma once

// Deterministic discrete-event network over the cloud-fog-things tiers.
// Messages travel hop by hop along shortest paths through proxy nodes; an
// adversary attached to a link sees every traversal of it and may act on the
// raw bytes according to its granted capabilities. It holds no keys.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "caaas/crypto.hpp"
#include "caaas/wire.hpp"

namespace caaas::sim {

enum class Tier : std::uint8_t { Cloud, Regional, Community, Street, Home, Thing };
enum class Role : std::uint8_t { Authority, Child, Proxy };

std::string_view to_string(Tier t) noexcept;
std::string_view to_string(Role r) noexcept;

struct SimNode {
  std::string id;
  Tier tier = Tier::Thing;
  Role role = Role::Child;
  // Added to simulated time when the node reads its clock.
  std::int64_t clock_skew_ms = 0;
};

struct LinkSpec {
  std::string from;
  std::string to;
  double base_latency_ms = 0;
  double jitter_ms = 0;  // uniform extra delay in [0, jitter_ms]
  double drop_probability = 0;
};

struct SimEvent {
  TimestampMs at;
  std::string from;
  std::string to;
  Bytes payload;
  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

enum class Capability : std::uint8_t { Eavesdrop, Replay, Inject, Modify, Delay, Drop, Duplicate };
std::string_view to_string(Capability c) noexcept;

// What the adversary sees when a message crosses its link.
struct Observation {
  std::uint64_t message_id = 0;
  std::uint64_t at_us = 0;
  std::string origin;
  std::string destination;
  std::string hop_from;
  std::string hop_to;
  Bytes payload;
  std::optional<wire::ProtocolMessage> decoded;  // when the bytes parse
};

struct AdversaryAction {
  enum class Kind : std::uint8_t { Drop, Modify, Delay, Duplicate, Replay, Inject };
  Kind kind = Kind::Drop;
  // Modify: replacement bytes for the observed payload. Inject: the forged
  // payload, sent towards the observed destination under the observed origin.
  std::function<Bytes(const Observation&)> craft;
  // Delay: extra hold time. Duplicate/Replay/Inject: when the copy enters the
  // link, relative to the observation.
  std::uint64_t delay_ms = 0;
  unsigned copies = 1;
};

Capability required_capability(AdversaryAction::Kind kind) noexcept;

struct AdversaryRule {
  std::string name;
  std::function<bool(const Observation&)> match;
  AdversaryAction action;
  // Number of times the rule may fire; 0 means unlimited.
  unsigned max_fires = 0;
};

struct AdversaryPolicy {
  std::set<Capability> capabilities;
  std::vector<AdversaryRule> script;
};

struct TranscriptEntry {
  SimEvent event;  // hop endpoints and the bytes as observed
  std::uint64_t message_id = 0;
  std::string action;  // observe, drop, modify, delay, duplicate, replay, inject
  std::string rule;
  Bytes result;  // bytes after a modify, or the forged/copied bytes
};

struct Delivery {
  std::uint64_t message_id = 0;
  SimEvent event;
  bool adversarial = false;  // a copy or forgery introduced by the adversary
};

enum class Disposition : std::uint8_t { InFlight, Delivered, LinkDropped, AdversaryDropped };

struct Accounting {
  std::uint64_t sent = 0;  // by nodes
  std::uint64_t injected = 0;  // by the adversary
  std::uint64_t delivered = 0;
  std::uint64_t link_dropped = 0;
  std::uint64_t adversary_dropped = 0;
  std::uint64_t in_flight = 0;
  // Disposition of every message ever created, by id.
  std::map<std::uint64_t, Disposition> messages;
};

class Simulator {
 public:
  using Handler = std::function<void(Simulator&, const Delivery&)>;
  using Timer = std::function<void(Simulator&)>;

  explicit Simulator(std::uint64_t seed);

  // Error{InvalidArgument} on duplicate ids.
  void add_node(SimNode node);
  // Links are bidirectional; connecting an existing pair replaces its spec.
  // Errors: UnknownNode, InvalidArgument (negative latency, bad probability).
  void connect(const LinkSpec& link);
  void set_handler(const std::string& node, Handler handler);

  bool has_node(const std::string& id) const { return nodes_.count(id) != 0; }
  const SimNode& node(const std::string& id) const;
  const std::map<std::string, SimNode>& nodes() const { return nodes_; }
  void set_clock_skew(const std::string& node, std::int64_t skew_ms);
  // The node's view of time: simulated time plus its skew.
  ClockFn clock_for(const std::string& node) const;

  // Route through proxy-role intermediates, fewest hops, ties broken by id.
  // Error{NoRoute}.
  std::vector<std::string> route(const std::string& from, const std::string& to) const;
  // Sum of base latencies along the route.
  double path_latency_ms(const std::string& from, const std::string& to) const;

  // Schedules a message leaving `from` now (or at `at`, not before now).
  // Returns the event as it will be delivered, ignoring jitter and
  // adversary interference. Errors: UnknownNode, NoRoute.
  SimEvent send(const std::string& from, const std::string& to, Bytes payload);
  SimEvent send(const std::string& from, const std::string& to, Bytes payload, TimestampMs at);
  // Same, with microsecond departure time.
  void send_at_us(const std::string& from, const std::string& to, Bytes payload, std::uint64_t at_us);

  void schedule(TimestampMs at, Timer timer);
  void schedule_us(std::uint64_t at_us, Timer timer);

  // Processes every event up to and including `until`, returning the
  // deliveries made during this call.
  std::vector<Delivery> run_until(TimestampMs until);
  // Runs until no events remain (bounded by `limit_ms` of simulated time).
  std::vector<Delivery> run(std::uint64_t limit_ms = 24ull * 3600 * 1000);

  TimestampMs now() const { return TimestampMs{now_us_ / 1000}; }
  std::uint64_t now_us() const { return now_us_; }

  // Public parameters the adversary uses to decode what it sees.
  void set_wire_params(const CurveParams& params) { wire_params_ = params; }
  // Errors: UnknownLink, CapabilityNotGranted (a scripted action needs a
  // capability the policy lacks).
  void attach_adversary(const std::string& a, const std::string& b, AdversaryPolicy policy);
  // Adversary-originated message entering link (a, b) at `at`; requires the
  // Inject capability on that link.
  void adversary_inject(const std::string& a, const std::string& b, const std::string& claimed_origin,
                        const std::string& destination, Bytes payload, TimestampMs at);

  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  Accounting accounting() const;
  const std::vector<Delivery>& delivery_log() const { return delivery_log_; }

  // One payload per line in the wire transcript format.
  std::string export_transcript_hex() const;
  // One JSON object per line with hop, action, rule, message name and hex
  // payload.
  std::string export_transcript_jsonl() const;

 private:
  struct Packet {
    std::uint64_t id = 0;
    std::string origin;
    std::string destination;
    std::vector<std::string> path;
    std::size_t hop = 0;  // index of the node the packet is at
    Bytes payload;
    bool adversarial = false;
    // Link (as sorted pair) whose adversary already acted on this packet.
    std::optional<std::pair<std::string, std::string>> touched;
  };
  struct Link {
    LinkSpec spec;
    std::optional<AdversaryPolicy> adversary;
    std::vector<unsigned> fires;  // per script rule
  };
  using QueueItem = std::variant<Packet, Timer>;

  static std::pair<std::string, std::string> key(const std::string& a, const std::string& b);
  Link* find_link(const std::string& a, const std::string& b);
  void enqueue(std::uint64_t at_us, QueueItem item);
  // Puts the packet on the link leaving path[hop] at `at_us`.
  void depart(Packet packet, std::uint64_t at_us);
  void arrive(Packet packet, std::vector<Delivery>& out);
  std::uint64_t link_delay_us(const LinkSpec& spec);
  std::uint64_t new_message(bool adversarial);
  void record(const Observation& obs, std::string action, const std::string& rule, Bytes result = {});

  Rng rng_;
  std::uint64_t now_us_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t next_message_ = 1;
  std::map<std::string, SimNode> nodes_;
  std::map<std::pair<std::string, std::string>, Link> links_;
  std::map<std::string, std::vector<std::string>> adjacency_;
  std::map<std::string, Handler> handlers_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, QueueItem> queue_;
  std::optional<CurveParams> wire_params_;
  std::vector<TranscriptEntry> transcript_;
  std::vector<Delivery> delivery_log_;
  std::map<std::uint64_t, Disposition> dispositions_;
  std::uint64_t sent_ = 0;
  std::uint64_t injected_ = 0;
};

}  // namespace caaas::sim
