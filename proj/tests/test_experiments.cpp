#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "bench.hpp"
#include "caaas/experiments.hpp"

using namespace caaas;
using namespace caaas::exp;
using bench::code_of;

namespace {

WorkloadSpec small(std::size_t nodes) {
  WorkloadSpec w = default_workload();
  w.node_count = nodes;
  w.duration_ms = 4000;
  return w;
}

}  // namespace

TEST(Experiments, SettingsAndFractions) {
  EXPECT_EQ(all_settings().size(), 5u);
  for (auto s : all_settings()) EXPECT_EQ(parse_setting(to_string(s)), s);
  EXPECT_DOUBLE_EQ(fog_fraction(Setting::CloudOnly), 0.0);
  EXPECT_DOUBLE_EQ(fog_fraction(Setting::MainlyCloud), 0.1);
  EXPECT_DOUBLE_EQ(fog_fraction(Setting::FairlyShared), 0.5);
  EXPECT_DOUBLE_EQ(fog_fraction(Setting::MainlyFog), 0.9);
  EXPECT_DOUBLE_EQ(fog_fraction(Setting::FogOnly), 1.0);
  EXPECT_EQ(code_of([] { parse_setting("edge"); }), Errc::InvalidArgument);
}

TEST(Experiments, ProfilesLoad) {
  LinkProfile d = calibrate_links("default");
  EXPECT_GT(d.fog_cloud_ms, d.thing_fog_ms);
  EXPECT_GT(d.fog_capacity, d.cloud_capacity);
  EXPECT_NO_THROW(calibrate_links("lan"));
  EXPECT_EQ(code_of([] { calibrate_links("wan"); }), Errc::UnknownProfile);
  EXPECT_EQ(code_of([] { link_profile_from(KeyValueConfig::parse("name = x\n")); }), Errc::ConfigError);
  WorkloadSpec w = default_workload();
  EXPECT_NO_THROW(w.validate());
  w.auth_rate = 0;
  EXPECT_EQ(code_of([&] { w.validate(); }), Errc::InvalidArgument);
}

TEST(Experiments, FogBeatsCloudAtLightLoad) {
  auto cloud = run_experiment(Setting::CloudOnly, small(10), 1);
  auto fog = run_experiment(Setting::FogOnly, small(10), 1);
  EXPECT_EQ(cloud.failures, 0u);
  EXPECT_EQ(fog.failures, 0u);
  EXPECT_GT(cloud.authentication.count, 0u);
  EXPECT_LT(fog.authentication.mean_ms, cloud.authentication.mean_ms);
  EXPECT_LT(fog.registration.mean_ms, cloud.registration.mean_ms);
  EXPECT_EQ(cloud.fog_tasks, 0u);
  EXPECT_EQ(fog.cloud_tasks, 0u);
  // Lower bound: two access hops each way.
  const auto links = calibrate_links("default");
  EXPECT_GE(fog.authentication.mean_ms, 2 * links.thing_fog_ms);
  EXPECT_GE(cloud.authentication.mean_ms, 2 * (links.thing_fog_ms + links.fog_cloud_ms));
}

TEST(Experiments, StatsOrdered) {
  auto s = run_experiment(Setting::FairlyShared, small(10), 2);
  for (const auto* t : {&s.registration, &s.authentication}) {
    EXPECT_LE(t->p50_ms, t->p95_ms);
    EXPECT_LE(t->p95_ms, t->max_ms);
    EXPECT_LE(t->mean_ms, t->max_ms);
  }
  EXPECT_GT(s.cloud_tasks, 0u);
  EXPECT_GT(s.fog_tasks, 0u);
}

TEST(Experiments, DeterministicAndCsvRoundTrip) {
  auto a = run_seeds(Setting::MainlyFog, small(8), derive_seeds(5, 3));
  auto b = run_seeds(Setting::MainlyFog, small(8), derive_seeds(5, 3));
  std::string csv = to_csv(a);
  EXPECT_EQ(csv, to_csv(b));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "setting,nodes,txn_type,mean_ms,p50_ms,p95_ms,max_ms,retransmits,cloud_tasks,fog_tasks");
  auto rows = parse_csv(csv);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].txn_type, "registration");
  EXPECT_EQ(rows[1].txn_type, "authentication");
  EXPECT_EQ(rows[0].nodes, 8u);
  EXPECT_EQ(code_of([] { parse_csv("setting,nodes\nx,y\n"); }), Errc::DecodeError);

  std::string path = ::testing::TempDir() + "caaas_exp.csv";
  export_csv(a, path);
  std::ifstream in(path);
  std::string back((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(back, csv);
  std::remove(path.c_str());
  EXPECT_EQ(code_of([&] { export_csv(a, "/nonexistent/dir/x.csv"); }), Errc::IoError);
}

TEST(Experiments, SeedsDiffer) {
  auto seeds = derive_seeds(1, 4);
  ASSERT_EQ(seeds.size(), 4u);
  EXPECT_NE(seeds[0], seeds[1]);
  EXPECT_EQ(seeds, derive_seeds(1, 4));
}

TEST(Experiments, SweepRequiresAscendingCounts) {
  EXPECT_EQ(code_of([] { sweep_nodes(Setting::FogOnly, {10, 5}, small(5), 1); }), Errc::InvalidArgument);
  auto out = sweep_nodes(Setting::FogOnly, {2, 4}, small(2), 1);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].nodes, 4u);
}
