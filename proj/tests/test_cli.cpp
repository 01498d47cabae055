#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "caaas/cli.hpp"
#include "caaas/deployment.hpp"
#include "caaas/integrity.hpp"
#include "caaas/scenarios.hpp"

using namespace caaas;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "caaas-cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

bool has(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

std::string temp(const std::string& name, const std::string& content) {
  std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"bogus"}).code, 2);
  EXPECT_EQ(cli({"attack", "--scenario", "replay"}).code, 2);  // --seed required
  EXPECT_EQ(cli({"attack", "--scenario", "nope", "--seed", "1"}).code, 2);
  EXPECT_EQ(cli({"setup", "--curve", "p999"}).code, 2);
  EXPECT_EQ(cli({"ivv", "--profile", "/nonexistent", "--report", "/nonexistent"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, Setup) {
  CliRun r = cli({"setup", "--seed", "1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "curve: toy17"));
  EXPECT_TRUE(has(r.out, "key-pair: consistent"));
  EXPECT_EQ(r.out, cli({"setup", "--seed", "1"}).out);
}

TEST(Cli, HandshakeAndPeer) {
  CliRun r = cli({"handshake", "--nodes", "3"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "thing-3 key-agreement: OK"));
  r = cli({"peer", "--from", "a", "--to", "b", "--curve", "prod256"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "peer-key: OK a <-> b"));
  EXPECT_EQ(cli({"peer", "--from", "a", "--to", "a"}).code, 2);
}

TEST(Cli, RegisterWithTamper) {
  CliRun r = cli({"register", "--nodes", "2", "--tamper", "thing-2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(has(r.out, "thing-1 registered"));
  EXPECT_TRUE(has(r.out, "thing-2 refused: IntegrityMismatch (Quarantined)"));
  r = cli({"register", "--nodes", "1", "--tamper", "thing-1", "--policy", "blacklist"});
  EXPECT_TRUE(has(r.out, "(Blacklisted)"));
}

TEST(Cli, Attack) {
  std::string tx = ::testing::TempDir() + "attack.hex";
  CliRun r = cli({"attack", "--scenario", "replay-stale", "--seed", "4", "--transcript", tx});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "StaleTimestamp");
  EXPECT_TRUE(has(r.out, "blocked"));
  std::ifstream in(tx);
  std::string line;
  EXPECT_TRUE(static_cast<bool>(std::getline(in, line)));
  std::remove(tx.c_str());
}

TEST(Cli, Ivv) {
  Rng rng(1);
  DeviceProfile p = sample_profile("dev", rng);
  std::string base = temp("base.profile", format_profile(p));
  CliRun r = cli({"ivv", "--profile", base, "--report", base});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "\nmatch\n"));
  p.blacklist_services.clear();
  std::string rep = temp("rep.profile", format_profile(p));
  r = cli({"ivv", "--profile", base, "--report", rep, "--policy", "reset"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(has(r.out, "mismatch: blacklist_services"));
  EXPECT_TRUE(has(r.out, "countermeasure: ResetPending"));
}

TEST(Cli, Experiment) {
  std::string csv = ::testing::TempDir() + "exp.csv";
  CliRun r = cli({"experiment", "--setting", "FogOnly", "--seed", "3", "--nodes", "4", "--out", csv});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(has(r.out, "nodes=4"));
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.substr(0, 13), "setting,nodes");
  std::remove(csv.c_str());
  EXPECT_EQ(cli({"experiment", "--setting", "FogOnly"}).code, 2);
}

TEST(Cli, DocumentedExamples) {
  CliRun r = cli({"attack", "--scenario", "replay", "--seed", "7"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "ReplayDetected");
  r = cli({"handshake", "--nodes", "3", "--curve", "toy17", "--seed", "1"});
  EXPECT_EQ(r.code, 0);
  std::size_t oks = 0;
  for (std::size_t at = r.out.find("key-agreement: OK"); at != std::string::npos;
       at = r.out.find("key-agreement: OK", at + 1))
    ++oks;
  EXPECT_EQ(oks, 3u);
}

// The CLI reports what the library computes directly.
TEST(Cli, MatchesLibrary) {
  CliRun r = cli({"attack", "--scenario", "tamper", "--seed", "9"});
  auto lib = attack::run_scenario(attack::Scenario::Tamper, curve_preset("prod256"), 9);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), lib.verdict);
}
