#include "caaas/scenarios.hpp"

#include <algorithm>

#include "caaas/deployment.hpp"
#include "caaas/error.hpp"

namespace caaas::attack {

namespace {

constexpr const char* kServer = kCustodian;
constexpr const char* kThingA = "thing-a";
constexpr const char* kThingB = "thing-b";

struct Bench {
  explicit Bench(const CurveParams& params, std::uint64_t seed) : dep(params, seed) {
    build_star(dep, {kThingA, kThingB});
  }

  // Registers both things and runs the network dry; false if either failed.
  bool register_all() {
    auto a = dep.request_registration(kThingA, kServer);
    auto b = dep.request_registration(kThingB, kServer);
    dep.run();
    return dep.transaction(a).ok && dep.transaction(b).ok;
  }

  const NodeEvent* refusal_since(std::size_t from, const std::string& subject) const {
    const auto& r = dep.refusals();
    for (std::size_t i = from; i < r.size(); ++i) {
      if (r[i].subject == subject) return &r[i];
    }
    return nullptr;
  }

  Deployment dep;
};

template <class T>
bool is(const sim::Observation& obs) {
  return obs.decoded && std::holds_alternative<T>(*obs.decoded);
}

ScenarioResult finish(ScenarioResult r, const Bench& bench) {
  r.transcript_hex = bench.dep.net().export_transcript_hex();
  r.transcript_jsonl = bench.dep.net().export_transcript_jsonl();
  return r;
}

CurvePoint random_point(const CurveParams& params, Rng& rng) {
  return scalar_mul_base(params, random_nonzero_scalar(params, rng));
}

ScenarioResult replay(Scenario s, const CurveParams& params, std::uint64_t seed) {
  ScenarioResult r{s, seed, false, "", "", "", ""};
  Bench bench(params, seed);
  if (!bench.register_all()) {
    r.verdict = "setup-failed";
    return finish(r, bench);
  }
  Rng rng = Rng(seed).fork("attack/replay");
  const std::uint64_t window = bench.dep.authority().config().freshness_window_ms;
  // Inside the window the copy must beat neither the original's response nor
  // the cache purge; outside it must clear the window plus any link delay.
  const std::uint64_t delay = s == Scenario::ReplayFresh ? 50 + rng.uniform_below(window - 500)
                                                         : window + 100 + rng.uniform_below(3000);
  sim::AdversaryPolicy policy;
  policy.capabilities = {sim::Capability::Eavesdrop, sim::Capability::Replay};
  sim::AdversaryAction act;
  act.kind = sim::AdversaryAction::Kind::Replay;
  act.delay_ms = delay;
  policy.script.push_back({"replay-auth-request", is<wire::AuthRequest>, act, 1});
  bench.dep.net().attach_adversary(kThingA, kGateway, std::move(policy));

  const std::size_t mark = bench.dep.refusals().size();
  const std::uint64_t accepted_before = bench.dep.accepted_auth_requests();
  auto txn = bench.dep.request_authentication(kThingA, kServer);
  bench.dep.run();

  const auto* refusal = bench.refusal_since(mark, kThingA);
  const bool honest_ok = bench.dep.transaction(txn).ok;
  const bool single_accept = bench.dep.accepted_auth_requests() - accepted_before == 1;
  const Errc expected = s == Scenario::ReplayFresh ? Errc::ReplayDetected : Errc::StaleTimestamp;
  r.verdict = refusal ? std::string(to_string(refusal->code)) : "accepted";
  r.blocked = refusal && refusal->code == expected && honest_ok && single_accept;
  r.detail = "replay delay " + std::to_string(delay) + " ms; honest round " + (honest_ok ? "ok" : "failed");
  return finish(r, bench);
}

Bytes forged_client_request(const CurveParams& params, const std::string& id, TimestampMs now, Rng& rng) {
  // Attacker's own R'' and A'': M'' = R'' + t1 x A'', R*'' = (x'' mod n) x P.
  CurvePoint r2 = random_point(params, rng);
  CurvePoint a2 = random_point(params, rng);
  Scalar t1 = hash_timestamp(params, now.ms);
  wire::AuthRequest req{id, point_add(params, r2, scalar_mul(params, t1, a2)),
                        scalar_mul_base(params, Scalar::reduce(params, r2.x())), now};
  return wire::encode(params, req);
}

Bytes forged_server_response(const CurveParams& params, const std::string& id, const wire::AuthRequest& seen,
                             TimestampMs now, Rng& rng) {
  // Without K_S^R the attacker substitutes a guessed key K'' for A_ID.
  Scalar k2 = random_nonzero_scalar(params, rng);
  CurvePoint a2 = scalar_mul(params, k2, hash_to_point(params, to_bytes(id)));
  Scalar rs = random_nonzero_scalar(params, rng);
  CurvePoint r_s = scalar_mul_base(params, rs);
  Scalar t2 = hash_timestamp(params, now.ms);
  const std::size_t w = params.field_bytes();
  Bytes x_q = to_fixed(hash_to_point(params, to_bytes(id)).x(), w);
  SessionKey guess = derive_session_key(params, x_q, to_fixed(seen.m_c.x(), w), to_fixed(r_s.x(), w));
  wire::AuthResponse resp{point_add(params, r_s, scalar_mul(params, t2, a2)),
                          scalar_mul_base(params, Scalar::reduce(params, guess.k.value() + r_s.x())), now};
  return wire::encode(params, resp);
}

ScenarioResult impersonate(const CurveParams& params, std::uint64_t seed) {
  ScenarioResult r{Scenario::Impersonate, seed, false, "", "", "", ""};
  Bench bench(params, seed);
  if (!bench.register_all()) {
    r.verdict = "setup-failed";
    return finish(r, bench);
  }
  Rng rng = Rng(seed).fork("attack/impersonate");
  const std::uint64_t accepted_before = bench.dep.accepted_auth_requests();
  const std::size_t mark = bench.dep.refusals().size();

  if (seed % 2 == 0) {
    // Forged client: the attacker claims thing-a's identity.
    sim::AdversaryPolicy policy;
    policy.capabilities = {sim::Capability::Eavesdrop, sim::Capability::Inject};
    bench.dep.net().attach_adversary(kThingA, kGateway, std::move(policy));
    bench.dep.run_until(TimestampMs{bench.dep.net().now().ms + 1 + rng.uniform_below(500)});
    const TimestampMs now = bench.dep.net().now();
    bench.dep.net().adversary_inject(kThingA, kGateway, kThingA, kServer,
                                     forged_client_request(params, kThingA, now, rng), now);
    bench.dep.run();
    const auto* refusal = bench.refusal_since(mark, kThingA);
    const bool no_session = bench.dep.accepted_auth_requests() == accepted_before;
    r.verdict = refusal ? std::string(to_string(refusal->code)) : "accepted";
    r.blocked = refusal && refusal->code == Errc::BadProof && no_session;
    r.detail = "forged client request";
  } else {
    // Forged server: the AuthResponse is replaced by one built without K_S^R.
    sim::AdversaryPolicy policy;
    policy.capabilities = {sim::Capability::Eavesdrop, sim::Capability::Modify};
    auto state = std::make_shared<std::optional<wire::AuthRequest>>();
    auto craft_rng = std::make_shared<Rng>(rng.fork("craft"));
    sim::AdversaryAction replace;
    replace.kind = sim::AdversaryAction::Kind::Modify;
    replace.craft = [state, craft_rng, &params](const sim::Observation& obs) {
      if (!*state) return obs.payload;
      return forged_server_response(params, (*state)->id, **state, TimestampMs{obs.at_us / 1000}, *craft_rng);
    };
    // The request is only remembered; its predicate never fires.
    auto remember = [state](const sim::Observation& obs) {
      if (is<wire::AuthRequest>(obs)) *state = std::get<wire::AuthRequest>(*obs.decoded);
      return false;
    };
    policy.script.push_back({"note-request", remember, replace, 0});
    policy.script.push_back({"forge-response", is<wire::AuthResponse>, replace, 1});
    bench.dep.net().attach_adversary(kThingA, kGateway, std::move(policy));
    auto txn = bench.dep.request_authentication(kThingA, kServer);
    bench.dep.run();
    const auto& t = bench.dep.transaction(txn);
    r.verdict = t.ok ? "accepted" : std::string(to_string(t.error.value_or(Errc::InvalidArgument)));
    r.blocked = !t.ok && t.error == Errc::KeyMismatch;
    r.detail = "forged server response";
  }
  return finish(r, bench);
}

Bytes tamper_request(const CurveParams& params, wire::AuthRequest req, unsigned variant) {
  if (variant == 3) req.m_c = point_add(params, req.m_c, params.base());
  if (variant == 4) req.r_c_star = point_add(params, req.r_c_star, params.base());
  return wire::encode(params, req);
}

Bytes tamper_response(const CurveParams& params, wire::AuthResponse resp, unsigned variant) {
  if (variant == 0) resp.m_k = point_add(params, resp.m_k, params.base());
  if (variant == 1) resp.m_s = point_add(params, resp.m_s, params.base());
  if (variant == 2) resp.t2.ms += 1;
  return wire::encode(params, resp);
}

ScenarioResult tamper(const CurveParams& params, std::uint64_t seed) {
  ScenarioResult r{Scenario::Tamper, seed, false, "", "", "", ""};
  Bench bench(params, seed);
  if (!bench.register_all()) {
    r.verdict = "setup-failed";
    return finish(r, bench);
  }
  Rng rng = Rng(seed).fork("attack/tamper");
  const auto variant = static_cast<unsigned>(seed % 6);
  const bool on_request = variant == 3 || variant == 4 || (variant == 5 && rng.uniform_below(2) == 0);
  const std::uint64_t flip_seed = rng.next_u64();

  sim::AdversaryPolicy policy;
  policy.capabilities = {sim::Capability::Eavesdrop, sim::Capability::Modify};
  sim::AdversaryAction act;
  act.kind = sim::AdversaryAction::Kind::Modify;
  act.craft = [&params, variant, flip_seed](const sim::Observation& obs) {
    if (variant == 5) {
      Bytes b = obs.payload;
      Rng flip(flip_seed);
      const std::size_t pos = 1 + flip.uniform_below(b.size() - 1);
      b[pos] ^= static_cast<std::uint8_t>(1u << flip.uniform_below(8));
      return b;
    }
    if (auto* req = std::get_if<wire::AuthRequest>(&*obs.decoded)) return tamper_request(params, *req, variant);
    return tamper_response(params, std::get<wire::AuthResponse>(*obs.decoded), variant);
  };
  if (on_request) {
    policy.script.push_back({"tamper-request", is<wire::AuthRequest>, act, 1});
  } else {
    policy.script.push_back({"tamper-response", is<wire::AuthResponse>, act, 1});
  }
  bench.dep.net().attach_adversary(kThingA, kGateway, std::move(policy));

  const std::uint64_t accepted_before = bench.dep.accepted_auth_requests();
  auto txn = bench.dep.request_authentication(kThingA, kServer);
  bench.dep.run();
  const auto& t = bench.dep.transaction(txn);
  // A tampered request must not open a server session either.
  const bool server_clean = !on_request || bench.dep.accepted_auth_requests() == accepted_before;
  r.verdict = t.ok ? "accepted" : std::string(to_string(t.error.value_or(Errc::InvalidArgument)));
  r.blocked = !t.ok && server_clean;
  static const char* kNames[] = {"M_k", "M_S", "T_2", "M_C", "R_C*", "raw bit"};
  r.detail = std::string("tampered ") + kNames[variant] + (on_request ? " in AuthRequest" : " in AuthResponse");
  return finish(r, bench);
}

ScenarioResult passive(const CurveParams& params, std::uint64_t seed) {
  ScenarioResult r{Scenario::Passive, seed, false, "", "", "", ""};
  Bench bench(params, seed);
  sim::AdversaryPolicy policy;
  policy.capabilities = {sim::Capability::Eavesdrop};
  bench.dep.net().attach_adversary(kThingA, kGateway, std::move(policy));
  bool ok = bench.register_all();
  auto a = bench.dep.request_authentication(kThingA, kServer);
  auto b = bench.dep.request_authentication(kThingB, kServer);
  bench.dep.run();
  auto p = bench.dep.request_peer_exchange(kThingA, kThingB, kServer);
  bench.dep.run();
  ok = ok && bench.dep.transaction(a).ok && bench.dep.transaction(b).ok && bench.dep.transaction(p).ok;

  std::vector<Bytes> seen;
  for (const auto& e : bench.dep.net().transcript()) {
    seen.push_back(e.event.payload);
    if (!e.result.empty()) seen.push_back(e.result);
  }
  std::vector<Bytes> secrets;
  for (auto& s : bench.dep.secret_material()) {
    if (s.size() >= kMinScanBytes) secrets.push_back(std::move(s));
  }
  const bool leak = contains_any(seen, secrets);
  r.blocked = ok && !seen.empty() && !leak;
  r.verdict = !ok ? "incomplete" : leak ? "leak" : "clean";
  r.detail = std::to_string(seen.size()) + " observations scanned for " + std::to_string(secrets.size()) + " secrets";
  return finish(r, bench);
}

ScenarioResult proof_replay(const CurveParams& params, std::uint64_t seed) {
  ScenarioResult r{Scenario::ProofReplay, seed, false, "", "", "", ""};
  Bench bench(params, seed);
  bool ok = bench.register_all();
  bench.dep.request_authentication(kThingA, kServer);
  bench.dep.request_authentication(kThingB, kServer);
  bench.dep.run();

  Rng rng = Rng(seed).fork("attack/proof-replay");
  sim::AdversaryPolicy policy;
  policy.capabilities = {sim::Capability::Eavesdrop, sim::Capability::Duplicate};
  sim::AdversaryAction act;
  act.kind = sim::AdversaryAction::Kind::Duplicate;
  act.delay_ms = 20 + rng.uniform_below(1000);
  policy.script.push_back({"duplicate-proof", is<wire::PeerProof>, act, 1});
  bench.dep.net().attach_adversary(kThingA, kGateway, std::move(policy));

  const std::size_t mark = bench.dep.node_errors().size();
  auto p = bench.dep.request_peer_exchange(kThingA, kThingB, kServer);
  bench.dep.run();
  ok = ok && bench.dep.transaction(p).ok;
  const NodeEvent* err = nullptr;
  for (std::size_t i = mark; i < bench.dep.node_errors().size(); ++i) {
    if (bench.dep.node_errors()[i].node == kThingB) err = &bench.dep.node_errors()[i];
  }
  auto ka = bench.dep.child(kThingA).peer_key(kThingB);
  auto kb = bench.dep.child(kThingB).peer_key(kThingA);
  const bool keys_equal = ka && kb && *ka == *kb && bench.dep.child(kThingB).peer_established(kThingA);
  r.verdict = err ? std::string(to_string(err->code)) : "accepted";
  r.blocked = ok && keys_equal && err && err->code == Errc::NoPendingChallenge;
  r.detail = std::string("peer exchange ") + (ok ? "completed" : "failed") + ", session " +
             (keys_equal ? "intact" : "broken");
  return finish(r, bench);
}

}  // namespace

std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::ReplayFresh: return "replay";
    case Scenario::ReplayStale: return "replay-stale";
    case Scenario::Impersonate: return "impersonate";
    case Scenario::Tamper: return "tamper";
    case Scenario::Passive: return "passive";
    case Scenario::ProofReplay: return "proof-replay";
  }
  return "unknown";
}

const std::vector<Scenario>& all_scenarios() {
  static const std::vector<Scenario> kAll = {Scenario::ReplayFresh, Scenario::ReplayStale, Scenario::Impersonate,
                                             Scenario::Tamper,      Scenario::Passive,     Scenario::ProofReplay};
  return kAll;
}

Scenario parse_scenario(std::string_view name) {
  for (Scenario s : all_scenarios()) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::InvalidArgument, "unknown scenario " + std::string(name));
}

bool contains_any(const std::vector<Bytes>& payloads, const std::vector<Bytes>& secrets) {
  for (const auto& s : secrets) {
    if (s.empty()) continue;
    for (const auto& p : payloads) {
      if (std::search(p.begin(), p.end(), s.begin(), s.end()) != p.end()) return true;
    }
  }
  return false;
}

ScenarioResult run_scenario(Scenario scenario, const CurveParams& params, std::uint64_t seed) {
  switch (scenario) {
    case Scenario::ReplayFresh:
    case Scenario::ReplayStale: return replay(scenario, params, seed);
    case Scenario::Impersonate: return impersonate(params, seed);
    case Scenario::Tamper: return tamper(params, seed);
    case Scenario::Passive: return passive(params, seed);
    case Scenario::ProofReplay: return proof_replay(params, seed);
  }
  throw Error(Errc::InvalidArgument, "unknown scenario");
}

}  // namespace caaas::attack
