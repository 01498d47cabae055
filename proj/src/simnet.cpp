#include "caaas/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <json.hpp>

#include "caaas/error.hpp"

namespace caaas::sim {

std::string_view to_string(Tier t) noexcept {
  switch (t) {
    case Tier::Cloud: return "Cloud";
    case Tier::Regional: return "Regional";
    case Tier::Community: return "Community";
    case Tier::Street: return "Street";
    case Tier::Home: return "Home";
    case Tier::Thing: return "Thing";
  }
  return "Unknown";
}

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::Authority: return "authority";
    case Role::Child: return "child";
    case Role::Proxy: return "proxy";
  }
  return "unknown";
}

std::string_view to_string(Capability c) noexcept {
  switch (c) {
    case Capability::Eavesdrop: return "eavesdrop";
    case Capability::Replay: return "replay";
    case Capability::Inject: return "inject";
    case Capability::Modify: return "modify";
    case Capability::Delay: return "delay";
    case Capability::Drop: return "drop";
    case Capability::Duplicate: return "duplicate";
  }
  return "unknown";
}

Capability required_capability(AdversaryAction::Kind kind) noexcept {
  switch (kind) {
    case AdversaryAction::Kind::Drop: return Capability::Drop;
    case AdversaryAction::Kind::Modify: return Capability::Modify;
    case AdversaryAction::Kind::Delay: return Capability::Delay;
    case AdversaryAction::Kind::Duplicate: return Capability::Duplicate;
    case AdversaryAction::Kind::Replay: return Capability::Replay;
    case AdversaryAction::Kind::Inject: return Capability::Inject;
  }
  return Capability::Inject;
}

namespace {

std::string_view action_name(AdversaryAction::Kind kind) {
  switch (kind) {
    case AdversaryAction::Kind::Drop: return "drop";
    case AdversaryAction::Kind::Modify: return "modify";
    case AdversaryAction::Kind::Delay: return "delay";
    case AdversaryAction::Kind::Duplicate: return "duplicate";
    case AdversaryAction::Kind::Replay: return "replay";
    case AdversaryAction::Kind::Inject: return "inject";
  }
  return "unknown";
}

constexpr std::uint64_t kUsPerMs = 1000;

}  // namespace

Simulator::Simulator(std::uint64_t seed) : rng_(Rng(seed).fork("simnet")) {}

std::pair<std::string, std::string> Simulator::key(const std::string& a, const std::string& b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

void Simulator::add_node(SimNode node) {
  if (node.id.empty() || nodes_.count(node.id) != 0) throw Error(Errc::InvalidArgument, "duplicate node " + node.id);
  adjacency_[node.id];
  std::string id = node.id;
  nodes_.emplace(std::move(id), std::move(node));
}

const SimNode& Simulator::node(const std::string& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::UnknownNode, id);
  return it->second;
}

void Simulator::connect(const LinkSpec& link) {
  if (!has_node(link.from)) throw Error(Errc::UnknownNode, link.from);
  if (!has_node(link.to)) throw Error(Errc::UnknownNode, link.to);
  if (link.from == link.to) throw Error(Errc::InvalidArgument, "self link");
  if (!(link.base_latency_ms >= 0) || !(link.jitter_ms >= 0)) throw Error(Errc::InvalidArgument, "negative latency");
  if (!(link.drop_probability >= 0 && link.drop_probability <= 1)) {
    throw Error(Errc::InvalidArgument, "drop probability outside [0, 1]");
  }
  auto k = key(link.from, link.to);
  auto it = links_.find(k);
  if (it != links_.end()) {
    it->second.spec = link;
    return;
  }
  links_.emplace(k, Link{link, std::nullopt, {}});
  for (auto [a, b] : {std::pair{link.from, link.to}, std::pair{link.to, link.from}}) {
    auto& adj = adjacency_[a];
    adj.insert(std::upper_bound(adj.begin(), adj.end(), b), b);
  }
}

void Simulator::set_handler(const std::string& node_id, Handler handler) {
  node(node_id);
  handlers_[node_id] = std::move(handler);
}

void Simulator::set_clock_skew(const std::string& node_id, std::int64_t skew_ms) {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw Error(Errc::UnknownNode, node_id);
  it->second.clock_skew_ms = skew_ms;
}

ClockFn Simulator::clock_for(const std::string& node_id) const {
  node(node_id);
  return [this, node_id] {
    std::int64_t t = static_cast<std::int64_t>(now_us_ / kUsPerMs) + nodes_.at(node_id).clock_skew_ms;
    return TimestampMs{static_cast<std::uint64_t>(std::max<std::int64_t>(t, 0))};
  };
}

Simulator::Link* Simulator::find_link(const std::string& a, const std::string& b) {
  auto it = links_.find(key(a, b));
  return it == links_.end() ? nullptr : &it->second;
}

std::vector<std::string> Simulator::route(const std::string& from, const std::string& to) const {
  node(from);
  node(to);
  if (from == to) throw Error(Errc::NoRoute, "source equals destination");
  std::map<std::string, std::string> parent;
  std::deque<std::string> frontier{from};
  parent[from] = from;
  while (!frontier.empty()) {
    std::string cur = frontier.front();
    frontier.pop_front();
    for (const auto& next : adjacency_.at(cur)) {
      if (parent.count(next)) continue;
      if (next == to) {
        std::vector<std::string> path{to};
        for (std::string p = cur; p != from; p = parent[p]) path.push_back(p);
        path.push_back(from);
        std::reverse(path.begin(), path.end());
        return path;
      }
      if (nodes_.at(next).role != Role::Proxy) continue;
      parent[next] = cur;
      frontier.push_back(next);
    }
  }
  throw Error(Errc::NoRoute, from + " -> " + to);
}

double Simulator::path_latency_ms(const std::string& from, const std::string& to) const {
  auto path = route(from, to);
  double total = 0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) total += links_.at(key(path[i], path[i + 1])).spec.base_latency_ms;
  return total;
}

std::uint64_t Simulator::new_message(bool adversarial) {
  std::uint64_t id = next_message_++;
  dispositions_[id] = Disposition::InFlight;
  if (adversarial) {
    ++injected_;
  } else {
    ++sent_;
  }
  return id;
}

SimEvent Simulator::send(const std::string& from, const std::string& to, Bytes payload) {
  return send(from, to, std::move(payload), now());
}

SimEvent Simulator::send(const std::string& from, const std::string& to, Bytes payload, TimestampMs at) {
  std::uint64_t at_us = std::max(at.ms * kUsPerMs, now_us_);
  double latency = path_latency_ms(from, to);
  SimEvent ev{TimestampMs{static_cast<std::uint64_t>((static_cast<double>(at_us) + latency * kUsPerMs) / kUsPerMs)},
              from, to, payload};
  send_at_us(from, to, std::move(payload), at_us);
  return ev;
}

void Simulator::send_at_us(const std::string& from, const std::string& to, Bytes payload, std::uint64_t at_us) {
  Packet p;
  p.path = route(from, to);
  p.origin = from;
  p.destination = to;
  p.payload = std::move(payload);
  p.id = new_message(false);
  depart(std::move(p), std::max(at_us, now_us_));
}

void Simulator::schedule(TimestampMs at, Timer timer) { schedule_us(at.ms * kUsPerMs, std::move(timer)); }

void Simulator::schedule_us(std::uint64_t at_us, Timer timer) { enqueue(std::max(at_us, now_us_), std::move(timer)); }

void Simulator::enqueue(std::uint64_t at_us, QueueItem item) { queue_.emplace(std::make_pair(at_us, seq_++), std::move(item)); }

std::uint64_t Simulator::link_delay_us(const LinkSpec& spec) {
  double ms = spec.base_latency_ms;
  if (spec.jitter_ms > 0) ms += rng_.uniform01() * spec.jitter_ms;
  return static_cast<std::uint64_t>(std::llround(ms * kUsPerMs));
}

void Simulator::record(const Observation& obs, std::string action, const std::string& rule, Bytes result) {
  TranscriptEntry e;
  e.event = SimEvent{TimestampMs{obs.at_us / kUsPerMs}, obs.hop_from, obs.hop_to, obs.payload};
  e.message_id = obs.message_id;
  e.action = std::move(action);
  e.rule = rule;
  e.result = std::move(result);
  transcript_.push_back(std::move(e));
}

void Simulator::depart(Packet packet, std::uint64_t at_us) {
  const std::string& here = packet.path[packet.hop];
  const std::string& next = packet.path[packet.hop + 1];
  Link* link = find_link(here, next);
  if (link == nullptr) throw Error(Errc::NoRoute, here + " -> " + next);

  if (link->spec.drop_probability > 0 && rng_.uniform01() < link->spec.drop_probability) {
    dispositions_[packet.id] = Disposition::LinkDropped;
    return;
  }
  std::uint64_t arrival = at_us + link_delay_us(link->spec);

  auto lkey = key(here, next);
  if (link->adversary && packet.touched != lkey) {
    AdversaryPolicy& policy = *link->adversary;
    Observation obs;
    obs.message_id = packet.id;
    obs.at_us = at_us;
    obs.origin = packet.origin;
    obs.destination = packet.destination;
    obs.hop_from = here;
    obs.hop_to = next;
    obs.payload = packet.payload;
    if (wire_params_) {
      try {
        obs.decoded = wire::decode(*wire_params_, packet.payload);
      } catch (const Error&) {
      }
    }
    if (policy.capabilities.count(Capability::Eavesdrop)) record(obs, "observe", "");

    for (std::size_t i = 0; i < policy.script.size(); ++i) {
      auto& rule = policy.script[i];
      if (rule.max_fires != 0 && link->fires[i] >= rule.max_fires) continue;
      if (!rule.match || !rule.match(obs)) continue;
      ++link->fires[i];
      const auto& act = rule.action;
      std::string name(action_name(act.kind));
      switch (act.kind) {
        case AdversaryAction::Kind::Drop:
          record(obs, name, rule.name);
          dispositions_[packet.id] = Disposition::AdversaryDropped;
          return;
        case AdversaryAction::Kind::Modify:
          packet.payload = act.craft ? act.craft(obs) : packet.payload;
          record(obs, name, rule.name, packet.payload);
          break;
        case AdversaryAction::Kind::Delay:
          arrival += act.delay_ms * kUsPerMs;
          record(obs, name, rule.name);
          break;
        case AdversaryAction::Kind::Duplicate:
        case AdversaryAction::Kind::Replay:
        case AdversaryAction::Kind::Inject: {
          Bytes copy_bytes = act.kind == AdversaryAction::Kind::Inject && act.craft ? act.craft(obs) : packet.payload;
          record(obs, name, rule.name, copy_bytes);
          for (unsigned c = 0; c < std::max(1u, act.copies); ++c) {
            Packet copy = packet;
            copy.payload = copy_bytes;
            copy.adversarial = true;
            copy.touched = lkey;
            copy.id = new_message(true);
            enqueue(at_us + act.delay_ms * kUsPerMs, std::move(copy));
          }
          break;
        }
      }
      break;
    }
  }
  packet.hop += 1;
  packet.touched.reset();
  enqueue(arrival, std::move(packet));
}

void Simulator::arrive(Packet packet, std::vector<Delivery>& out) {
  if (packet.hop + 1 < packet.path.size()) {
    depart(std::move(packet), now_us_);
    return;
  }
  dispositions_[packet.id] = Disposition::Delivered;
  Delivery d{packet.id, SimEvent{now(), packet.origin, packet.destination, std::move(packet.payload)},
             packet.adversarial};
  delivery_log_.push_back(d);
  out.push_back(d);
  auto h = handlers_.find(d.event.to);
  if (h != handlers_.end()) h->second(*this, d);
}

std::vector<Delivery> Simulator::run_until(TimestampMs until) {
  std::vector<Delivery> out;
  const std::uint64_t limit = until.ms * kUsPerMs;
  while (!queue_.empty() && queue_.begin()->first.first <= limit) {
    auto node = queue_.extract(queue_.begin());
    now_us_ = std::max(now_us_, node.key().first);
    QueueItem item = std::move(node.mapped());
    if (auto* packet = std::get_if<Packet>(&item)) {
      if (packet->hop == 0 || packet->touched) {
        // Adversary copies re-enter the link they were captured on.
        depart(std::move(*packet), now_us_);
      } else {
        arrive(std::move(*packet), out);
      }
    } else {
      std::get<Timer>(item)(*this);
    }
  }
  now_us_ = std::max(now_us_, limit);
  return out;
}

std::vector<Delivery> Simulator::run(std::uint64_t limit_ms) {
  std::vector<Delivery> out;
  while (!queue_.empty()) {
    std::uint64_t next_ms = (queue_.begin()->first.first + kUsPerMs - 1) / kUsPerMs;
    if (next_ms > limit_ms) break;
    auto batch = run_until(TimestampMs{next_ms});
    out.insert(out.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
  }
  return out;
}

void Simulator::attach_adversary(const std::string& a, const std::string& b, AdversaryPolicy policy) {
  Link* link = find_link(a, b);
  if (link == nullptr) throw Error(Errc::UnknownLink, a + " <-> " + b);
  for (const auto& rule : policy.script) {
    Capability need = required_capability(rule.action.kind);
    if (!policy.capabilities.count(need)) {
      throw Error(Errc::CapabilityNotGranted, rule.name + " needs " + std::string(to_string(need)));
    }
  }
  link->fires.assign(policy.script.size(), 0);
  link->adversary = std::move(policy);
}

void Simulator::adversary_inject(const std::string& a, const std::string& b, const std::string& claimed_origin,
                                 const std::string& destination, Bytes payload, TimestampMs at) {
  Link* link = find_link(a, b);
  if (link == nullptr) throw Error(Errc::UnknownLink, a + " <-> " + b);
  if (!link->adversary || !link->adversary->capabilities.count(Capability::Inject)) {
    throw Error(Errc::CapabilityNotGranted, "inject");
  }
  // Enter at whichever endpoint leads towards the destination.
  std::vector<std::string> tail;
  std::string entry = a;
  std::string exit = b;
  if (b == destination) {
    tail = {b};
  } else if (a == destination) {
    entry = b;
    exit = a;
    tail = {a};
  } else {
    try {
      tail = route(b, destination);
    } catch (const Error&) {
      entry = b;
      exit = a;
      tail = route(a, destination);
    }
  }
  Packet p;
  p.origin = claimed_origin;
  p.destination = destination;
  p.path.push_back(entry);
  p.path.insert(p.path.end(), tail.begin(), tail.end());
  p.payload = payload;
  p.adversarial = true;
  p.touched = key(entry, exit);
  p.id = new_message(true);

  Observation obs;
  obs.message_id = p.id;
  obs.at_us = at.ms * kUsPerMs;
  obs.origin = claimed_origin;
  obs.destination = destination;
  obs.hop_from = entry;
  obs.hop_to = exit;
  obs.payload = payload;
  record(obs, "inject", "manual", payload);
  enqueue(std::max(at.ms * kUsPerMs, now_us_), std::move(p));
}

Accounting Simulator::accounting() const {
  Accounting acc;
  acc.sent = sent_;
  acc.injected = injected_;
  acc.messages = dispositions_;
  for (const auto& [id, d] : dispositions_) {
    switch (d) {
      case Disposition::InFlight: ++acc.in_flight; break;
      case Disposition::Delivered: ++acc.delivered; break;
      case Disposition::LinkDropped: ++acc.link_dropped; break;
      case Disposition::AdversaryDropped: ++acc.adversary_dropped; break;
    }
  }
  return acc;
}

std::string Simulator::export_transcript_hex() const {
  std::vector<Bytes> payloads;
  payloads.reserve(transcript_.size());
  for (const auto& e : transcript_) payloads.push_back(e.event.payload);
  return wire::to_transcript(payloads);
}

std::string Simulator::export_transcript_jsonl() const {
  std::string out;
  for (const auto& e : transcript_) {
    nlohmann::json j;
    j["at_ms"] = e.event.at.ms;
    j["from"] = e.event.from;
    j["to"] = e.event.to;
    j["message_id"] = e.message_id;
    j["action"] = e.action;
    j["rule"] = e.rule;
    std::string name = "raw";
    if (wire_params_) {
      try {
        name = std::string(wire::message_name(wire::decode(*wire_params_, e.event.payload)));
      } catch (const Error&) {
      }
    }
    j["message"] = name;
    j["payload"] = to_hex(e.event.payload);
    if (!e.result.empty()) j["result"] = to_hex(e.result);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace caaas::sim
