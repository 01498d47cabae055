#include <gtest/gtest.h>

#include "bench.hpp"
#include "caaas/deployment.hpp"
#include "caaas/scenarios.hpp"

using namespace caaas;
using bench::code_of;

namespace {

std::vector<std::string> names(int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back("thing-" + std::to_string(i));
  return out;
}

}  // namespace

TEST(Deployment, HandshakesAgreeOverTheNetwork) {
  for (const char* curve : {"toy17", "prod256"}) {
    Deployment dep(curve_preset(curve), 3);
    auto things = names(5);
    build_star(dep, things);
    for (const auto& r : run_handshakes(dep, things)) {
      EXPECT_TRUE(r.registered) << curve << " " << r.id;
      EXPECT_TRUE(r.keys_match) << curve << " " << r.id;
      EXPECT_FALSE(r.error.has_value());
    }
    for (const auto& t : dep.transactions()) {
      EXPECT_TRUE(t.ok);
      EXPECT_TRUE(t.done());
      EXPECT_GT(t.delay_ms(), 0);
    }
    auto p = run_peer_exchange(dep, "thing-1", "thing-4");
    EXPECT_TRUE(p.ok);
    EXPECT_TRUE(p.keys_equal);
  }
}

TEST(Deployment, IntegrityMismatchRefusedAndAnnounced) {
  Deployment dep(curve_preset("toy17"), 4);
  auto things = names(3);
  build_star(dep, things);
  dep.device_profile("thing-2").software_list.push_back({"backdoor", "1"});
  dep.device_profile("thing-2").canonicalize();
  auto res = run_handshakes(dep, things);
  EXPECT_TRUE(res[0].keys_match);
  EXPECT_FALSE(res[1].registered);
  ASSERT_TRUE(res[1].error.has_value());
  EXPECT_EQ(*res[1].error, Errc::IntegrityMismatch);
  EXPECT_EQ(dep.authority().affinity().state("thing-2"), TrustState::Quarantined);
  bool announced = false;
  for (const auto& n : dep.notices("thing-3")) announced |= n.id == "thing-2" && n.state == TrustState::Quarantined;
  EXPECT_TRUE(announced);
  EXPECT_FALSE(dep.refusals().empty());
}

TEST(Deployment, RetransmitsAfterLoss) {
  DeploymentConfig cfg;
  cfg.retransmit_timeout_ms = 200;
  Deployment dep(curve_preset("toy17"), 5, cfg);
  build_star(dep, {"thing-1"});
  sim::AdversaryPolicy pol;
  pol.capabilities = {sim::Capability::Drop};
  pol.script.push_back({"drop-first",
                        [](const sim::Observation& o) {
                          return o.decoded && std::holds_alternative<wire::RegistrationRequest>(*o.decoded);
                        },
                        {sim::AdversaryAction::Kind::Drop},
                        1});
  dep.net().attach_adversary("thing-1", kGateway, pol);
  auto id = dep.request_registration("thing-1", kCustodian);
  dep.run();
  const auto& t = dep.transaction(id);
  EXPECT_TRUE(t.ok);
  EXPECT_EQ(t.retransmits, 1u);
  EXPECT_GE(t.delay_ms(), 200);
}

TEST(Deployment, GivesUpAfterMaxRetransmits) {
  DeploymentConfig cfg;
  cfg.retransmit_timeout_ms = 100;
  cfg.max_retransmits = 2;
  cfg.abandon_after_retransmits = true;
  Deployment dep(curve_preset("toy17"), 6, cfg);
  build_star(dep, {"thing-1"});
  dep.net().connect({"thing-1", kGateway, 5, 0, 1.0});
  auto id = dep.request_registration("thing-1", kCustodian);
  dep.run();
  const auto& t = dep.transaction(id);
  EXPECT_TRUE(t.done());
  EXPECT_FALSE(t.ok);
  EXPECT_EQ(t.retransmits, 2u);
  EXPECT_EQ(t.error, Errc::Timeout);
  EXPECT_NEAR(t.delay_ms(), 300, 1);
}

TEST(Deployment, ServerCapacityQueues) {
  auto delays = [](double capacity) {
    Deployment dep(curve_preset("toy17"), 7);
    dep.add_server("ca", sim::Tier::Cloud, capacity);
    dep.add_proxy("gw", sim::Tier::Street);
    dep.connect({"gw", "ca", 10, 0, 0});
    std::vector<std::uint64_t> ids;
    for (const auto& t : {"a", "b"}) {
      dep.add_thing(t);
      dep.connect({t, "gw", 5, 0, 0});
      ids.push_back(dep.request_registration(t, "ca"));
    }
    dep.run();
    EXPECT_EQ(dep.server_load("ca").tasks, 4u);
    std::vector<double> out;
    for (auto id : ids) {
      EXPECT_TRUE(dep.transaction(id).ok);
      out.push_back(dep.transaction(id).delay_ms());
    }
    return out;
  };
  auto fast = delays(0);
  auto slow = delays(10);  // 100 ms per task
  EXPECT_NEAR(fast[0], 60, 1);  // two round trips of 30 ms
  EXPECT_GE(slow[1], 400);
  EXPECT_GT(slow[1], slow[0]);
}

TEST(Deployment, SameSeedSameTranscript) {
  auto go = [](std::uint64_t seed) {
    Deployment dep(curve_preset("prod256"), seed);
    build_star(dep, {"thing-1", "thing-2"});
    dep.net().attach_adversary("thing-1", kGateway, {{sim::Capability::Eavesdrop}, {}});
    run_handshakes(dep, {"thing-1", "thing-2"});
    run_peer_exchange(dep, "thing-1", "thing-2");
    return dep.net().export_transcript_jsonl();
  };
  std::string a = go(11);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, go(11));
  EXPECT_NE(a, go(12));
}

TEST(Scenarios, NamesParse) {
  for (auto s : attack::all_scenarios()) EXPECT_EQ(attack::parse_scenario(attack::to_string(s)), s);
  EXPECT_EQ(attack::parse_scenario("replay"), attack::Scenario::ReplayFresh);
  EXPECT_EQ(code_of([] { attack::parse_scenario("ddos"); }), Errc::InvalidArgument);
}

TEST(Scenarios, EveryScenarioBlocked) {
  const CurveParams c = curve_preset("prod256");
  for (auto s : attack::all_scenarios()) {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
      auto r = attack::run_scenario(s, c, seed);
      EXPECT_TRUE(r.blocked) << attack::to_string(s) << " seed " << seed << ": " << r.verdict << " " << r.detail;
      EXPECT_FALSE(r.transcript_hex.empty());
    }
  }
}

TEST(Scenarios, Verdicts) {
  const CurveParams c = curve_preset("prod256");
  EXPECT_EQ(attack::run_scenario(attack::Scenario::ReplayStale, c, 1).verdict, "StaleTimestamp");
  EXPECT_EQ(attack::run_scenario(attack::Scenario::Passive, c, 1).verdict, "clean");
  EXPECT_EQ(attack::run_scenario(attack::Scenario::ProofReplay, c, 1).verdict, "NoPendingChallenge");
  EXPECT_EQ(attack::run_scenario(attack::Scenario::Impersonate, c, 2).verdict, "BadProof");
  EXPECT_EQ(attack::run_scenario(attack::Scenario::Impersonate, c, 3).verdict, "KeyMismatch");
  auto fresh = attack::run_scenario(attack::Scenario::ReplayFresh, c, 1).verdict;
  EXPECT_TRUE(fresh == "ReplayDetected" || fresh == "StaleTimestamp") << fresh;
}

TEST(Scenarios, Deterministic) {
  const CurveParams c = curve_preset("prod256");
  auto a = attack::run_scenario(attack::Scenario::Tamper, c, 5);
  auto b = attack::run_scenario(attack::Scenario::Tamper, c, 5);
  EXPECT_EQ(a.transcript_jsonl, b.transcript_jsonl);
  EXPECT_EQ(a.verdict, b.verdict);
}

TEST(Scenarios, ContainsAny) {
  std::vector<Bytes> payloads{from_hex("00112233445566778899aabbccddeeff0011")};
  EXPECT_TRUE(attack::contains_any(payloads, {from_hex("112233445566778899aabbccddeeff00")}));
  EXPECT_FALSE(attack::contains_any(payloads, {from_hex("ff112233445566778899aabbccddeeff")}));
}

TEST(Deployment, KeepsWaitingByDefault) {
  DeploymentConfig cfg;
  cfg.retransmit_timeout_ms = 100;
  cfg.max_retransmits = 2;
  Deployment dep(curve_preset("toy17"), 6, cfg);
  build_star(dep, {"thing-1"});
  dep.net().connect({"thing-1", kGateway, 5, 0, 1.0});
  auto id = dep.request_registration("thing-1", kCustodian);
  dep.run();
  EXPECT_FALSE(dep.transaction(id).done());
  EXPECT_EQ(dep.transaction(id).retransmits, 2u);
}
