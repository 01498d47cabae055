#include "caaas/deployment.hpp"

#include <algorithm>

#include "caaas/error.hpp"

namespace caaas {

std::string_view to_string(TxnKind k) noexcept {
  switch (k) {
    case TxnKind::Registration: return "registration";
    case TxnKind::Authentication: return "authentication";
    case TxnKind::PeerExchange: return "peer";
  }
  return "unknown";
}

DeviceProfile sample_profile(const std::string& id, Rng& rng) {
  DeviceProfile p;
  p.id = id;
  rng.fill(p.firmware_digest);
  rng.fill(p.os_digest);
  p.software_list = {{"busybox", "1.36." + std::to_string(rng.uniform_below(10))},
                     {"mqtt-client", "2." + std::to_string(rng.uniform_below(5))}};
  p.used_slots = {0, 1};
  p.unused_slots = {2, 3};
  p.blacklist_services = {"telnetd"};
  p.canonicalize();
  return p;
}

Deployment::Deployment(const CurveParams& params, std::uint64_t seed, DeploymentConfig config)
    : net_(seed),
      rng_(Rng(seed).fork("deployment")),
      config_(config),
      authority_(Authority::setup(params, rng_.fork("authority"), [this] { return net_.now(); }, config.authority)
                     .first),
      announcement_(authority_.announcement()) {
  net_.set_wire_params(params);
}

void Deployment::add_server(const std::string& node_id, sim::Tier tier, double capacity_per_s) {
  if (capacity_per_s < 0) throw Error(Errc::InvalidArgument, "negative capacity");
  net_.add_node(sim::SimNode{node_id, tier, sim::Role::Authority, 0});
  servers_[node_id].capacity_per_s = capacity_per_s;
  net_.set_handler(node_id, [this, node_id](sim::Simulator&, const sim::Delivery& d) { on_server(node_id, d); });
}

void Deployment::add_proxy(const std::string& node_id, sim::Tier tier) {
  net_.add_node(sim::SimNode{node_id, tier, sim::Role::Proxy, 0});
}

Child& Deployment::add_thing(const std::string& node_id, sim::Tier tier) {
  net_.add_node(sim::SimNode{node_id, tier, sim::Role::Child, 0});
  things_[node_id];
  net_.set_handler(node_id, [this, node_id](sim::Simulator&, const sim::Delivery& d) { on_thing(node_id, d); });
  provision_identity(node_id, node_id);
  return children_.at(node_id);
}

void Deployment::provision_identity(const std::string& node_id, const std::string& identity) {
  if (identity_node_.count(identity)) throw Error(Errc::InvalidArgument, "identity in use: " + identity);
  Rng dev = rng_.fork("device/" + identity);
  DeviceProfile baseline = sample_profile(identity, dev);
  SymmetricKey reg_key = SymmetricKey::random(dev);
  authority_.provision_device(baseline, reg_key);
  actual_profiles_[identity] = baseline;
  children_.emplace(identity, Child(identity, announcement_, reg_key, dev.fork("child"), net_.clock_for(node_id),
                                    config_.child));
  Thing& t = things_.at(node_id);
  if (!t.identity.empty()) identity_node_.erase(t.identity);
  t.identity = identity;
  identity_node_[identity] = node_id;
}

const std::string& Deployment::identity_of(const std::string& node_id) const {
  auto it = things_.find(node_id);
  if (it == things_.end()) throw Error(Errc::UnknownNode, node_id);
  return it->second.identity;
}

const std::string& Deployment::node_of(const std::string& identity) const {
  auto it = identity_node_.find(identity);
  if (it == identity_node_.end()) throw Error(Errc::UnknownId, identity);
  return it->second;
}

Child& Deployment::child(const std::string& node_id) { return children_.at(identity_of(node_id)); }

DeviceProfile& Deployment::device_profile(const std::string& node_id) {
  return actual_profiles_.at(identity_of(node_id));
}

const std::vector<TrustNotice>& Deployment::notices(const std::string& node_id) const {
  auto it = things_.find(node_id);
  if (it == things_.end()) throw Error(Errc::UnknownNode, node_id);
  return it->second.notices;
}

const ServerLoad& Deployment::server_load(const std::string& node_id) const {
  auto it = servers_.find(node_id);
  if (it == servers_.end()) throw Error(Errc::UnknownNode, node_id);
  return it->second;
}

const Transaction& Deployment::transaction(std::uint64_t id) const {
  if (id == 0 || id > txns_.size()) throw Error(Errc::InvalidArgument, "unknown transaction");
  return txns_[id - 1];
}

std::uint64_t Deployment::enqueue(Transaction txn) {
  if (!things_.count(txn.node)) throw Error(Errc::UnknownNode, txn.node);
  if (!servers_.count(txn.server)) throw Error(Errc::UnknownNode, txn.server);
  txn.id = txns_.size() + 1;
  txn.requested_us = net_.now_us();
  txns_.push_back(std::move(txn));
  const auto& t = txns_.back();
  things_.at(t.node).queue.push_back(t.id);
  maybe_start(t.node);
  return t.id;
}

std::uint64_t Deployment::request_registration(const std::string& node, const std::string& server,
                                               std::optional<std::uint64_t> lifetime_ms,
                                               std::optional<std::string> new_identity) {
  Transaction t;
  t.kind = TxnKind::Registration;
  t.node = node;
  t.server = server;
  t.lifetime_ms = lifetime_ms;
  t.new_identity = std::move(new_identity);
  return enqueue(std::move(t));
}

std::uint64_t Deployment::request_authentication(const std::string& node, const std::string& server) {
  Transaction t;
  t.kind = TxnKind::Authentication;
  t.node = node;
  t.server = server;
  return enqueue(std::move(t));
}

std::uint64_t Deployment::request_peer_exchange(const std::string& node, const std::string& peer_node,
                                                const std::string& server) {
  Transaction t;
  t.kind = TxnKind::PeerExchange;
  t.node = node;
  t.server = server;
  t.peer = peer_node;
  return enqueue(std::move(t));
}

void Deployment::request_at(std::uint64_t at_us, TxnKind kind, const std::string& node, const std::string& server,
                            std::optional<std::string> new_identity) {
  net_.schedule_us(at_us, [=, this](sim::Simulator&) {
    switch (kind) {
      case TxnKind::Registration: request_registration(node, server, std::nullopt, new_identity); break;
      case TxnKind::Authentication: request_authentication(node, server); break;
      case TxnKind::PeerExchange: throw Error(Errc::InvalidArgument, "peer exchanges are requested directly");
    }
  });
}

void Deployment::maybe_start(const std::string& node_id) {
  Thing& t = things_.at(node_id);
  while (!t.active && !t.queue.empty()) {
    const std::uint64_t id = t.queue.front();
    t.queue.pop_front();
    Transaction& txn = txns_[id - 1];
    t.active = id;
    txn.started_us = net_.now_us();
    try {
      if (txn.kind == TxnKind::Registration && txn.new_identity) provision_identity(node_id, *txn.new_identity);
      txn.identity = t.identity;
      Child& c = children_.at(t.identity);
      const CurveParams& params = authority_.params();
      switch (txn.kind) {
        case TxnKind::Registration:
          lifetimes_[t.identity] = txn.lifetime_ms;
          send_step(node_id, txn.server, wire::encode(params, c.request_registration()), Step::AwaitRegistration);
          break;
        case TxnKind::Authentication:
          send_step(node_id, txn.server, wire::encode(params, c.auth_init()), Step::AwaitAuth);
          break;
        case TxnKind::PeerExchange: {
          const std::string peer_identity = identity_of(txn.peer);
          txn.peer = peer_identity;
          t.step = Step::AwaitPeer;
          net_.send(node_id, txn.server, wire::encode(params, c.peer_init(peer_identity)));
          break;
        }
      }
    } catch (const Error& e) {
      finish(node_id, false, e.code());
    }
  }
}

void Deployment::send_step(const std::string& node_id, const std::string& dest, Bytes bytes, Step step) {
  Thing& t = things_.at(node_id);
  t.step = step;
  t.last_dest = dest;
  t.last_sent = bytes;
  ++t.generation;
  net_.send(node_id, dest, std::move(bytes));
  arm_retransmit(node_id);
}

void Deployment::arm_retransmit(const std::string& node_id) {
  if (config_.retransmit_timeout_ms == 0) return;
  const std::uint64_t gen = things_.at(node_id).generation;
  net_.schedule_us(net_.now_us() + config_.retransmit_timeout_ms * 1000, [this, node_id, gen](sim::Simulator&) {
    Thing& t = things_.at(node_id);
    if (t.generation != gen || !t.active || t.step == Step::Idle || t.step == Step::AwaitPeer) return;
    Transaction& txn = txns_[*t.active - 1];
    if (txn.retransmits >= config_.max_retransmits) {
      if (config_.abandon_after_retransmits) finish(node_id, false, Errc::Timeout);
      return;
    }
    ++txn.retransmits;
    ++t.unanswered_copies;
    net_.send(node_id, t.last_dest, t.last_sent);
    arm_retransmit(node_id);
  });
}

void Deployment::finish(const std::string& node_id, bool ok, std::optional<Errc> error) {
  Thing& t = things_.at(node_id);
  if (!t.active) return;
  Transaction& txn = txns_[*t.active - 1];
  txn.finished_us = net_.now_us();
  txn.ok = ok;
  txn.error = error;
  t.active.reset();
  t.step = Step::Idle;
  ++t.generation;
  maybe_start(node_id);
}

void Deployment::log_error(const std::string& node_id, const std::string& subject, Errc code,
                           const std::string& detail) {
  node_errors_.push_back(NodeEvent{net_.now_us(), node_id, subject, code, detail});
}

void Deployment::broadcast_notices(const std::string& server) {
  for (const auto& notice : authority_.take_notices()) {
    Bytes bytes = wire::encode(authority_.params(), notice);
    for (const auto& [node_id, thing] : things_) {
      try {
        net_.send(server, node_id, bytes);
      } catch (const Error&) {
        // Unreachable things miss the notice.
      }
    }
  }
}

std::vector<Bytes> Deployment::secret_material() const {
  std::vector<Bytes> out;
  const CurveParams& params = authority_.params();
  for (const auto& [identity, c] : children_) {
    if (c.auth_key()) {
      out.push_back(encode_point(params, *c.auth_key()));
      out.push_back(to_fixed(c.auth_key()->x(), params.field_bytes()));
    }
    if (c.ca_session()) {
      auto v = c.ca_session()->key.view();
      out.emplace_back(v.begin(), v.end());
      out.push_back(encode_scalar(params, c.ca_session()->k));
    }
    for (const auto& [other, unused] : children_) {
      if (auto k = c.peer_key(other)) {
        auto v = k->view();
        out.emplace_back(v.begin(), v.end());
      }
    }
  }
  for (const auto& [id, rec] : authority_.registry()) {
    out.push_back(encode_point(params, rec.auth_key));
    if (auto s = authority_.session(id)) {
      auto v = s->key.view();
      out.emplace_back(v.begin(), v.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Server side.

void Deployment::on_server(const std::string& server, const sim::Delivery& d) {
  ServerLoad& load = servers_.at(server);
  ++load.tasks;
  if (load.capacity_per_s <= 0) {
    serve(server, d.event.from, d.event.payload);
    return;
  }
  // FIFO single server with deterministic service time.
  const auto service_us = static_cast<std::uint64_t>(1e6 / load.capacity_per_s);
  const std::uint64_t start = std::max(net_.now_us(), load.busy_until_us);
  load.busy_until_us = start + service_us;
  load.busy_us += service_us;
  net_.schedule_us(load.busy_until_us, [this, server, from = d.event.from, payload = d.event.payload](
                                           sim::Simulator&) { serve(server, from, payload); });
}

void Deployment::serve(const std::string& server, const std::string& from, const Bytes& payload) {
  const CurveParams& params = authority_.params();
  std::string subject;
  auto refuse = [&](Errc code, const std::string& detail) {
    refusals_.push_back(NodeEvent{net_.now_us(), server, subject, code, detail});
    wire::Refusal r{code, subject, TrustState::Untrusted};
    if (!subject.empty() && authority_.affinity().contains(subject)) r.state = authority_.affinity().state(subject);
    try {
      net_.send(server, from, wire::encode(params, r));
    } catch (const Error&) {
      // Forged origin with no route back.
    }
  };

  std::optional<wire::ProtocolMessage> msg;
  try {
    msg = wire::decode(params, payload);
  } catch (const Error& e) {
    refuse(e.code(), e.what());
    return;
  }
  try {
    if (auto* req = std::get_if<wire::RegistrationRequest>(&*msg)) {
      subject = req->id;
      auto prof = actual_profiles_.find(req->id);
      DeviceProfile reported;
      reported.id = req->id;
      if (prof != actual_profiles_.end()) reported = prof->second;
      auto lt = lifetimes_.find(req->id);
      std::optional<std::uint64_t> lifetime = lt != lifetimes_.end() ? lt->second : std::nullopt;
      try {
        auto resp = authority_.register_child(*req, reported, lifetime);
        net_.send(server, from, wire::encode(params, resp));
      } catch (const Error&) {
        broadcast_notices(server);
        throw;
      }
      broadcast_notices(server);
    } else if (auto* ar = std::get_if<wire::AuthRequest>(&*msg)) {
      subject = ar->id;
      auto resp = authority_.handle_auth_request(*ar);
      ++accepted_auth_;
      net_.send(server, from, wire::encode(params, resp));
    } else if (auto* pi = std::get_if<wire::PeerInit>(&*msg)) {
      auto it = things_.find(from);
      if (it == things_.end()) throw Error(Errc::NoSession, from);
      subject = it->second.identity;
      auto relay = authority_.relay_peer_request(subject, *pi);
      net_.send(server, node_of(relay.target), wire::encode(params, relay.message));
    } else {
      throw Error(Errc::InvalidArgument, std::string("unexpected ") + std::string(wire::message_name(*msg)));
    }
  } catch (const Error& e) {
    refuse(e.code(), e.what());
  }
}

// Thing side.

void Deployment::fail_peer_txn(const std::string& initiator_node, const std::string& responder, Errc code) {
  Thing& t = things_.at(initiator_node);
  if (t.active && t.step == Step::AwaitPeer && txns_[*t.active - 1].peer == responder) {
    finish(initiator_node, false, code);
  }
}

void Deployment::on_thing(const std::string& node_id, const sim::Delivery& d) {
  Thing& t = things_.at(node_id);
  Child& c = children_.at(t.identity);
  const CurveParams& params = authority_.params();
  std::optional<wire::ProtocolMessage> msg;
  try {
    msg = wire::decode(params, d.event.payload);
  } catch (const Error& e) {
    if (t.step == Step::AwaitRegistration || t.step == Step::AwaitConfirm || t.step == Step::AwaitAuth) {
      if (t.step == Step::AwaitConfirm) {
        c.handle_refusal(wire::Refusal{e.code(), t.identity, TrustState::Untrusted});
        finish(node_id, false, Errc::ConfirmationFailure);
      } else {
        finish(node_id, false, e.code());
      }
    } else {
      log_error(node_id, d.event.from, e.code(), e.what());
    }
    return;
  }

  const Transaction* txn = t.active ? &txns_[*t.active - 1] : nullptr;
  try {
    if (auto* rr = std::get_if<wire::RegistrationResponse>(&*msg)) {
      if (t.step != Step::AwaitRegistration) throw Error(Errc::InvalidArgument, "unsolicited registration response");
      try {
        c.accept_registration(*rr);
      } catch (const Error& e) {
        finish(node_id, false, e.code());
        return;
      }
      send_step(node_id, txn->server, wire::encode(params, c.auth_init()), Step::AwaitConfirm);
    } else if (auto* resp = std::get_if<wire::AuthResponse>(&*msg)) {
      if (t.step != Step::AwaitConfirm && t.step != Step::AwaitAuth) {
        throw Error(Errc::NoPendingAuth, "unsolicited authentication response");
      }
      try {
        c.auth_finish(*resp);
      } catch (const Error& e) {
        finish(node_id, false, e.code());
        return;
      }
      finish(node_id, true, std::nullopt);
    } else if (auto* refusal = std::get_if<wire::Refusal>(&*msg)) {
      const bool duplicate_reply = refusal->code == Errc::ReplayDetected || refusal->code == Errc::DuplicateRegistration;
      if (duplicate_reply && t.unanswered_copies > 0) {
        --t.unanswered_copies;
        return;
      }
      if (t.step == Step::Idle) {
        log_error(node_id, refusal->subject, refusal->code, "refusal outside a transaction");
        return;
      }
      finish(node_id, false, c.handle_refusal(*refusal));
    } else if (auto* notice = std::get_if<TrustNotice>(&*msg)) {
      t.notices.push_back(*notice);
    } else if (auto* relay = std::get_if<wire::PeerRelay>(&*msg)) {
      auto ch = c.peer_respond(*relay);
      net_.send(node_id, node_of(ch.initiator), wire::encode(params, ch.message));
    } else if (auto* challenge = std::get_if<wire::PeerChallenge>(&*msg)) {
      if (t.step != Step::AwaitPeer) throw Error(Errc::InvalidArgument, "unsolicited challenge");
      try {
        auto proof = c.peer_accept(*challenge);
        net_.send(node_id, node_of(proof.responder), wire::encode(params, proof.message));
      } catch (const Error& e) {
        finish(node_id, false, e.code());
      }
    } else if (auto* proof = std::get_if<wire::PeerProof>(&*msg)) {
      auto from = things_.find(d.event.from);
      const std::string initiator = from != things_.end() ? from->second.identity : d.event.from;
      try {
        c.peer_verify(*proof, initiator);
      } catch (const Error& e) {
        log_error(node_id, initiator, e.code(), e.what());
        if (from != things_.end()) fail_peer_txn(d.event.from, t.identity, e.code());
        return;
      }
      Thing& it = things_.at(d.event.from);
      if (it.active && it.step == Step::AwaitPeer && txns_[*it.active - 1].peer == t.identity) {
        finish(d.event.from, true, std::nullopt);
      }
    } else {
      throw Error(Errc::InvalidArgument, std::string("unexpected ") + std::string(wire::message_name(*msg)));
    }
  } catch (const Error& e) {
    log_error(node_id, d.event.from, e.code(), e.what());
  }
}

void build_star(Deployment& dep, const std::vector<std::string>& things) {
  dep.add_server(kCustodian, sim::Tier::Street);
  dep.add_proxy(kGateway, sim::Tier::Home);
  dep.connect({kGateway, kCustodian, 2, 0.2, 0});
  for (const auto& t : things) {
    dep.add_thing(t);
    dep.connect({t, kGateway, 5, 0.5, 0});
  }
}

std::vector<KeyAgreement> run_handshakes(Deployment& dep, const std::vector<std::string>& things, bool authenticate) {
  std::vector<std::uint64_t> regs;
  for (const auto& t : things) regs.push_back(dep.request_registration(t, kCustodian));
  dep.run();
  std::vector<KeyAgreement> out;
  std::vector<std::optional<std::uint64_t>> auths;
  for (std::size_t i = 0; i < things.size(); ++i) {
    const auto& txn = dep.transaction(regs[i]);
    out.push_back(KeyAgreement{things[i], txn.ok, false, txn.error});
    auths.push_back(txn.ok && authenticate ? std::optional(dep.request_authentication(things[i], kCustodian))
                                           : std::nullopt);
  }
  dep.run();
  for (std::size_t i = 0; i < things.size(); ++i) {
    if (auths[i]) {
      const auto& txn = dep.transaction(*auths[i]);
      if (!txn.ok) out[i].error = txn.error;
    }
    if (out[i].error) continue;
    const auto& child_session = dep.child(things[i]).ca_session();
    const auto server_session = dep.authority().session(dep.identity_of(things[i]));
    out[i].keys_match = child_session && server_session && child_session->key == server_session->key &&
                        child_session->k == server_session->k;
  }
  return out;
}

PeerOutcome run_peer_exchange(Deployment& dep, const std::string& from, const std::string& to) {
  auto id = dep.request_peer_exchange(from, to, kCustodian);
  dep.run();
  const auto& txn = dep.transaction(id);
  PeerOutcome out{txn.ok, false, txn.error};
  auto a = dep.child(from).peer_key(dep.identity_of(to));
  auto b = dep.child(to).peer_key(dep.identity_of(from));
  out.keys_equal = a && b && *a == *b && dep.child(to).peer_established(dep.identity_of(from)) &&
                   dep.child(from).peer_established(dep.identity_of(to));
  return out;
}

}  // namespace caaas
