// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "caaas/child.hpp"
#include "caaas/curve_oracles.hpp"
#include "caaas/deployment.hpp"
#include "caaas/experiments.hpp"
#include "caaas/integrity.hpp"
#include "caaas/scenarios.hpp"
#include "toy_oracle.hpp"

using namespace caaas;

namespace {

// Run counts and limits.
constexpr int kHonestRuns = 1000;          // per curve
constexpr double kHonestLimitS = 60.0;
constexpr int kPeerRuns = 1000;
constexpr int kAttackSeeds = 200;          // per scenario
constexpr int kProfileBaselines = 20;
constexpr int kPlacementSeeds = 10;
constexpr std::size_t kPlacementNodes = 40;
constexpr double kFogCloudAuthRatioMax = 0.05;
constexpr double kMainlyCloudRegRatioMax = 0.65;
constexpr double kPlacementLimitS = 300.0;
constexpr double kFogUtilizationMaxPct = 20.0;
constexpr std::uint64_t kMaxChildScalarMults = 3;
constexpr int kOpCountSeeds = 50;
constexpr std::uint64_t kMasterSeed = 20240601;

int failures = 0;

void report(const std::string& label, bool ok, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", label.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Protocols 1, 2 and 3 over the simulated network.
void honest_suite() {
  auto t0 = std::chrono::steady_clock::now();
  int ok = 0, total = 0;
  for (const char* curve : {"toy17", "prod256"}) {
    const CurveParams params = curve_preset(curve);
    for (int seed = 1; seed <= kHonestRuns; ++seed) {
      ++total;
      Deployment dep(params, static_cast<std::uint64_t>(seed));
      build_star(dep, {"thing-1"});
      auto res = run_handshakes(dep, {"thing-1"});
      if (dep.authority().key_pair_consistent() && res.size() == 1 && res[0].keys_match) ++ok;
    }
  }
  double secs = seconds_since(t0);
  report("1 honest end-to-end", ok == total && secs < kHonestLimitS,
         std::to_string(ok) + "/" + std::to_string(total) + " runs with matching session keys, " +
             fmt("%.1f", secs) + " s (limit " + fmt("%.0f", kHonestLimitS) + " s)");
}

// 2. Protocol 4, with the proof replayed after the responder accepted it.
void peer_suite() {
  const CurveParams params = curve_preset("prod256");
  int established = 0, replay_refused = 0;
  for (int seed = 1; seed <= kPeerRuns; ++seed) {
    auto r = attack::run_scenario(attack::Scenario::ProofReplay, params, static_cast<std::uint64_t>(seed));
    // blocked means: keys equal on both sides after the nonce challenge, and
    // the replayed proof refused.
    if (r.blocked) ++established;
    if (r.verdict == "NoPendingChallenge") ++replay_refused;
  }
  report("2 peer key exchange", established == kPeerRuns && replay_refused == kPeerRuns,
         std::to_string(established) + "/" + std::to_string(kPeerRuns) + " equal peer keys, " +
             std::to_string(replay_refused) + "/" + std::to_string(kPeerRuns) + " proof replays NoPendingChallenge");
}

// 3. Replay, impersonation, tampering and passive scan.
void attack_suite() {
  const CurveParams params = curve_preset("prod256");
  std::string detail;
  bool all = true;
  for (auto s : attack::all_scenarios()) {
    if (s == attack::Scenario::ProofReplay) continue;
    int blocked = 0;
    std::string first_bad;
    for (int seed = 1; seed <= kAttackSeeds; ++seed) {
      auto r = attack::run_scenario(s, params, static_cast<std::uint64_t>(seed));
      if (r.blocked) {
        ++blocked;
      } else if (first_bad.empty()) {
        first_bad = " (seed " + std::to_string(seed) + ": " + r.verdict + ")";
      }
    }
    all = all && blocked == kAttackSeeds;
    if (!detail.empty()) detail += ", ";
    detail += std::string(attack::to_string(s)) + " " + std::to_string(blocked) + "/" +
              std::to_string(kAttackSeeds) + first_bad;
  }
  report("3 attack suite", all, detail);
}

// 4. Every single-field mutation of a profile is caught and quarantined.
void ivv_suite() {
  int mutations = 0, caught = 0, clean = 0;
  Rng key_rng(kMasterSeed);
  for (int b = 0; b < kProfileBaselines; ++b) {
    Rng rng(static_cast<std::uint64_t>(b) + 1);
    const DeviceProfile base = sample_profile("device-" + std::to_string(b), rng);
    const SymmetricKey key = SymmetricKey::random(key_rng);

    auto check = [&](DeviceProfile m, const std::string& field) {
      m.canonicalize();
      if (m == base) return;  // mutation collapsed under canonicalisation
      ++mutations;
      IvvVerdict v = compare_profiles(base, m);
      bool named = v.differing_fields.size() == 1 && v.differing_fields[0] == field;
      TrustState state;
      if (field == "id") {
        state = apply_countermeasure(base.id, TrustState::Trusted, v, CountermeasurePolicy::Quarantine, {0}).state;
      } else {
        AffinityStore store;
        store.provision(base, key);
        store.set_state(base.id, TrustState::Trusted, {0});
        state = store.verify(m, CountermeasurePolicy::Quarantine, {1}).second.state;
      }
      if (!v.match && named && state == TrustState::Quarantined) ++caught;
    };

    {
      AffinityStore store;
      store.provision(base, key);
      auto [v, out] = store.verify(base, CountermeasurePolicy::Quarantine, {1});
      if (v.match && out.state == TrustState::Trusted) ++clean;
    }

    DeviceProfile m = base;
    m.id += "x";
    check(m, "id");
    for (std::size_t bit = 0; bit < 256; ++bit) {
      m = base;
      m.firmware_digest[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      check(m, "firmware_digest");
      m = base;
      m.os_digest[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      check(m, "os_digest");
    }
    for (std::size_t i = 0; i < base.software_list.size(); ++i) {
      m = base;
      m.software_list.erase(m.software_list.begin() + static_cast<std::ptrdiff_t>(i));
      check(m, "software_list");
      m = base;
      m.software_list[i].second += ".1";
      check(m, "software_list");
      m = base;
      m.software_list[i].first += "-x";
      check(m, "software_list");
    }
    m = base;
    m.software_list.push_back({"implant", "0.1"});
    check(m, "software_list");

    using Slots = std::vector<std::uint32_t> DeviceProfile::*;
    for (auto [member, name] : {std::pair<Slots, const char*>{&DeviceProfile::used_slots, "used_slots"},
                                {&DeviceProfile::unused_slots, "unused_slots"}}) {
      for (std::size_t i = 0; i < (base.*member).size(); ++i) {
        m = base;
        (m.*member).erase((m.*member).begin() + static_cast<std::ptrdiff_t>(i));
        check(m, name);
        m = base;
        (m.*member)[i] += 100;
        check(m, name);
      }
      m = base;
      (m.*member).push_back(77);
      check(m, name);
    }
    for (std::size_t i = 0; i < base.blacklist_services.size(); ++i) {
      m = base;
      m.blacklist_services.erase(m.blacklist_services.begin() + static_cast<std::ptrdiff_t>(i));
      check(m, "blacklist_services");
      m = base;
      m.blacklist_services[i] += "2";
      check(m, "blacklist_services");
    }
    m = base;
    m.blacklist_services.push_back("sshd");
    check(m, "blacklist_services");
  }
  report("4 integrity verification", caught == mutations && clean == kProfileBaselines && mutations > 0,
         std::to_string(caught) + "/" + std::to_string(mutations) + " single-field mutations quarantined, " +
             std::to_string(clean) + "/" + std::to_string(kProfileBaselines) + " unmodified profiles match");
}

// 5. toy17 against the independent affine oracle.
void oracle_suite() {
  const CurveParams c = curve_preset("toy17");
  const long n = c.n().get_si();
  int agree = 0, checks = 0;
  auto pts = enumerate_points(c);
  for (const auto& q : pts) {
    toy::Pt tq = q.is_infinity() ? toy::Pt{} : toy::at(q.x().get_si(), q.y().get_si());
    CurvePoint naive = CurvePoint::infinity();
    for (long k = 0; k < n; ++k) {
      ++checks;
      CurvePoint fast = scalar_mul(c, Scalar::reduce(c, k), q);
      toy::Pt ref = toy::kToy17.mul(k, tq);
      bool same_ref = fast.is_infinity() ? ref.inf : (!ref.inf && fast.x() == ref.x && fast.y() == ref.y);
      if (fast == naive && same_ref) ++agree;
      naive = point_add(c, naive, q);
    }
  }
  long count = static_cast<long>(pts.size());
  long p = c.p().get_si();
  long dev = count - (p + 1);
  bool hasse = dev * dev <= 4 * p && count == static_cast<long>(toy::kToy17.points().size());

  int inverted = 0;
  for (long k = 0; k < n; ++k) {
    CurvePoint q = scalar_mul_base(c, Scalar::reduce(c, k));
    if (brute_force_dlp(c, q).value() == k) ++inverted;
  }
  report("5 curve oracle equivalence", agree == checks && hasse && inverted == n,
         std::to_string(agree) + "/" + std::to_string(checks) + " scalar_mul agree, #E = " + std::to_string(count) +
             " within Hasse bound " + (hasse ? "yes" : "no") + ", dlp " + std::to_string(inverted) + "/" +
             std::to_string(n));
}

double mean_of(const std::vector<exp::DelayStats>& runs, bool registration) {
  double sum = 0;
  for (const auto& r : runs) sum += registration ? r.registration.mean_ms : r.authentication.mean_ms;
  return runs.empty() ? 0 : sum / static_cast<double>(runs.size());
}

// 6. Placement study ratios and trend, plus the experiment invariants.
void placement_suite() {
  auto t0 = std::chrono::steady_clock::now();
  const auto links = exp::calibrate_links("default");
  const auto seeds = exp::derive_seeds(kMasterSeed, kPlacementSeeds);
  exp::WorkloadSpec w = exp::default_workload();
  w.node_count = kPlacementNodes;

  std::vector<std::vector<exp::DelayStats>> by_setting;
  for (auto s : exp::all_settings()) by_setting.push_back(exp::run_seeds(s, w, seeds, links));
  const auto& cloud = by_setting[0];
  const auto& mainly_cloud = by_setting[1];
  const auto& fog = by_setting[4];

  double auth_ratio = mean_of(fog, false) / mean_of(cloud, false);
  double reg_ratio = mean_of(mainly_cloud, true) / mean_of(cloud, true);

  std::vector<double> trend;
  for (std::size_t nodes : {10, 40, 80, 120}) {
    exp::WorkloadSpec wn = w;
    wn.node_count = nodes;
    trend.push_back(mean_of(exp::run_seeds(exp::Setting::CloudOnly, wn, seeds, links), true));
  }
  bool increasing = std::is_sorted(trend.begin(), trend.end(), std::less_equal<double>()) &&
                    std::adjacent_find(trend.begin(), trend.end()) == trend.end();
  double secs = seconds_since(t0);

  std::string detail = "FogOnly/CloudOnly auth " + fmt("%.4f", auth_ratio) + " (max " +
                       fmt("%.2f", kFogCloudAuthRatioMax) + "), MainlyCloud/CloudOnly registration " +
                       fmt("%.3f", reg_ratio) + " (max " + fmt("%.2f", kMainlyCloudRegRatioMax) +
                       "), CloudOnly registration ms at 10/40/80/120 nodes";
  for (double d : trend) detail += " " + fmt("%.0f", d);
  detail += ", " + fmt("%.1f", secs) + " s (limit " + fmt("%.0f", kPlacementLimitS) + " s)";
  report("6 placement study", auth_ratio <= kFogCloudAuthRatioMax && reg_ratio <= kMainlyCloudRegRatioMax &&
                                  increasing && secs < kPlacementLimitS,
         detail);

  // Invariants checked on the same runs.
  bool monotone = true;
  std::string means;
  for (bool reg : {true, false}) {
    for (std::size_t i = 0; i + 1 < by_setting.size(); ++i) {
      monotone = monotone && mean_of(by_setting[i + 1], reg) <= mean_of(by_setting[i], reg);
    }
  }
  for (const auto& runs : by_setting) means += " " + fmt("%.1f", mean_of(runs, false));
  report("6a delay non-increasing in fog fraction", monotone, "auth ms by setting" + means);

  double fog_util = 0;
  for (const auto& runs : by_setting)
    for (const auto& r : runs) fog_util = std::max(fog_util, r.fog_utilization);
  report("6b fog utilization bound", fog_util < kFogUtilizationMaxPct,
         "max " + fmt("%.1f", fog_util) + "% (limit " + fmt("%.0f", kFogUtilizationMaxPct) + "%)");

  // Only runs whose servers stay below capacity qualify.
  std::uint64_t light_retransmits = 0;
  int qualifying = 0;
  exp::WorkloadSpec light = w;
  light.node_count = 10;
  auto light_cloud = exp::run_seeds(exp::Setting::CloudOnly, light, seeds, links);
  const std::vector<const std::vector<exp::DelayStats>*> groups = {&fog, &light_cloud};
  for (const auto* runs : groups) {
    for (const auto& r : *runs) {
      if (r.cloud_utilization >= 100 || r.fog_utilization >= 100) continue;
      ++qualifying;
      light_retransmits += r.retransmits;
    }
  }
  report("6c no retransmission below capacity", light_retransmits == 0 && qualifying == 2 * kPlacementSeeds,
         std::to_string(light_retransmits) + " retransmissions over " + std::to_string(qualifying) +
             " FogOnly@40 and CloudOnly@10 runs below capacity");

  exp::WorkloadSpec heavy = w;
  heavy.node_count = 80;
  auto heavy_cloud = exp::run_experiment(exp::Setting::CloudOnly, heavy, seeds[0], links);
  auto heavy_fog = exp::run_experiment(exp::Setting::FogOnly, heavy, seeds[0], links);
  std::uint64_t cloud_total = heavy_cloud.cloud_tasks + heavy_cloud.fog_tasks;
  std::uint64_t fog_total = heavy_fog.cloud_tasks + heavy_fog.fog_tasks;
  report("6d retransmission inflation", cloud_total > fog_total,
         "80 nodes: CloudOnly " + std::to_string(cloud_total) + " server tasks vs FogOnly " +
             std::to_string(fog_total));
}

// 7. Child-side operation cost.
void cost_suite() {
  std::map<std::string, std::uint64_t> worst;
  std::uint64_t pairings = 0;
  auto measure = [&](const std::string& op, const std::function<void()>& f) {
    reset_op_counters();
    f();
    worst[op] = std::max(worst[op], op_counters().scalar_mults);
    pairings += op_counters().pairings;
  };
  for (const char* curve : {"toy17", "prod256"}) {
    const CurveParams params = curve_preset(curve);
    for (int seed = 1; seed <= kOpCountSeeds; ++seed) {
      ManualClock clock(1'000'000);
      Rng rng(static_cast<std::uint64_t>(seed));
      auto [authority, ann] = Authority::setup(params, rng.fork("authority"), clock.reader());
      std::map<std::string, Child> kids;
      for (const char* id : {"a", "b"}) {
        Rng dev = rng.fork(id);
        DeviceProfile prof = sample_profile(id, dev);
        SymmetricKey key = SymmetricKey::random(dev);
        authority.provision_device(prof, key);
        Child c(id, ann, key, dev.fork("child"), clock.reader());
        wire::RegistrationRequest req;
        measure("request_registration", [&] { req = c.request_registration(); });
        auto resp = authority.register_child(req, prof);
        measure("accept_registration", [&] { c.accept_registration(resp); });
        wire::AuthRequest ar;
        measure("auth_init", [&] { ar = c.auth_init(); });
        auto as = authority.handle_auth_request(ar);
        measure("auth_finish", [&] { c.auth_finish(as); });
        clock.advance(3);
        measure("auth_init", [&] { ar = c.auth_init(); });
        auto refusal = wire::Refusal{Errc::ReplayDetected, id, TrustState::Trusted};
        measure("handle_refusal", [&] { c.handle_refusal(refusal); });
        clock.advance(3);
        measure("auth_init", [&] { ar = c.auth_init(); });
        as = authority.handle_auth_request(ar);
        measure("auth_finish", [&] { c.auth_finish(as); });
        kids.emplace(id, std::move(c));
      }
      Child& a = kids.at("a");
      Child& b = kids.at("b");
      wire::PeerInit init;
      measure("peer_init", [&] { init = a.peer_init("b"); });
      auto relay = authority.relay_peer_request("a", init);
      Child::Challenge ch;
      measure("peer_respond", [&] { ch = b.peer_respond(relay.message); });
      Child::Proof pf;
      measure("peer_accept", [&] { pf = a.peer_accept(ch.message); });
      measure("peer_verify", [&] { b.peer_verify(pf.message, "a"); });
    }
  }
  std::uint64_t max_all = 0;
  std::string detail;
  for (const auto& [op, n] : worst) {
    max_all = std::max(max_all, n);
    detail += op + "=" + std::to_string(n) + " ";
  }
  detail += "pairings=" + std::to_string(pairings);
  report("7 lightweight client", max_all <= kMaxChildScalarMults && pairings == 0 && worst.size() == 9, detail);
}

// 8. Same master seed, same bytes.
void determinism_suite() {
  const CurveParams params = curve_preset("prod256");
  auto transcripts = [&] {
    std::string all;
    for (auto s : attack::all_scenarios()) {
      for (std::uint64_t seed : exp::derive_seeds(kMasterSeed, 3)) {
        auto r = attack::run_scenario(s, params, seed);
        all += r.transcript_hex + r.transcript_jsonl;
      }
    }
    return all;
  };
  auto csv = [&] {
    exp::WorkloadSpec w = exp::default_workload();
    w.node_count = 20;
    std::vector<exp::DelayStats> stats;
    for (auto s : exp::all_settings()) {
      auto runs = exp::run_seeds(s, w, exp::derive_seeds(kMasterSeed, 3));
      stats.insert(stats.end(), runs.begin(), runs.end());
    }
    return exp::to_csv(stats);
  };
  std::string t1 = transcripts(), t2 = transcripts();
  std::string c1 = csv(), c2 = csv();
  report("8 determinism", !t1.empty() && t1 == t2 && c1 == c2,
         std::string("adversary transcripts ") + (t1 == t2 ? "identical" : "DIFFER") + " (" +
             std::to_string(t1.size()) + " bytes), CSV " + (c1 == c2 ? "identical" : "DIFFER") + " (" +
             std::to_string(c1.size()) + " bytes)");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> suites = {
      {"1", honest_suite}, {"2", peer_suite},   {"3", attack_suite},      {"4", ivv_suite},
      {"5", oracle_suite}, {"6", placement_suite}, {"7", cost_suite}, {"8", determinism_suite},
  };
  for (const auto& [id, run] : suites) {
    try {
      run();
    } catch (const std::exception& e) {
      report(std::string(id) + " (aborted)", false, e.what());
    }
  }
  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
