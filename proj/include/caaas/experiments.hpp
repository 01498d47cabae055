#pragma once

// Placement study: the same registration/authentication workload served by a
// cloud CA, a fog CA, or a split of the two, over a two-tier topology
//
//   thing-i --(access)-- fog-proxy --(0 ms)-- fog-ca
//                            \--(backbone)-- cloud-ca
//
// Both CA nodes front one logical authority. Each serves requests FIFO with a
// deterministic service time of 1/capacity, so queueing delay grows with
// utilisation as in an M/D/1 queue.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "caaas/config.hpp"
#include "caaas/curve.hpp"

namespace caaas::exp {

enum class Setting : std::uint8_t { CloudOnly, MainlyCloud, FairlyShared, MainlyFog, FogOnly };

std::string_view to_string(Setting s) noexcept;
// Error{InvalidArgument} for unknown names.
Setting parse_setting(std::string_view name);
double fog_fraction(Setting s) noexcept;
const std::vector<Setting>& all_settings();

struct LinkProfile {
  std::string name;
  double thing_fog_ms = 5;
  double thing_fog_jitter_ms = 0;
  double fog_cloud_ms = 80;
  double fog_cloud_jitter_ms = 0;
  double fog_capacity = 0;    // tasks/s
  double cloud_capacity = 0;  // tasks/s
};

struct WorkloadSpec {
  std::size_t node_count = 40;
  double registration_rate = 0.5;  // per node, per simulated second
  double auth_rate = 2.0;          // per node, per simulated second
  std::uint64_t duration_ms = 20000;  // window in which requests arise
  double cloud_capacity = 0;
  double fog_capacity = 0;
  std::uint64_t retransmit_timeout_ms = 1000;
  unsigned max_retransmits = 3;

  // Error{InvalidArgument} unless every rate, capacity and time is positive.
  void validate() const;
};

// "default" or "lan" from the embedded configuration. Error{UnknownProfile}.
LinkProfile calibrate_links(std::string_view profile_name);
// Error{ConfigError} on missing keys.
LinkProfile link_profile_from(const KeyValueConfig& cfg);
// Workload keys of a profile file, capacities from the profile.
WorkloadSpec workload_from(const KeyValueConfig& cfg, const LinkProfile& links);
WorkloadSpec default_workload();

struct TxnStats {
  std::size_t count = 0;
  double mean_ms = 0;
  double p50_ms = 0;
  double p95_ms = 0;
  double max_ms = 0;
};

struct DelayStats {
  Setting setting = Setting::CloudOnly;
  std::size_t nodes = 0;
  std::uint64_t seed = 0;
  TxnStats registration;
  TxnStats authentication;
  std::uint64_t retransmits = 0;
  std::uint64_t cloud_tasks = 0;
  std::uint64_t fog_tasks = 0;
  // Offered load over capacity during the request window, in percent.
  double cloud_utilization = 0;
  double fog_utilization = 0;
  std::size_t failures = 0;  // transactions that ended in an error
};

DelayStats run_experiment(Setting setting, const WorkloadSpec& workload, std::uint64_t seed,
                          const LinkProfile& links = calibrate_links("default"),
                          const CurveParams& params = curve_preset("toy17"));

// One run per node count, each with `seed`. Runs execute in parallel.
std::vector<DelayStats> sweep_nodes(Setting setting, const std::vector<std::size_t>& counts,
                                    const WorkloadSpec& workload, std::uint64_t seed,
                                    const LinkProfile& links = calibrate_links("default"));

// Seeds derived from a master seed, one per run.
std::vector<std::uint64_t> derive_seeds(std::uint64_t master, std::size_t count);
// The same experiment under each seed, in parallel.
std::vector<DelayStats> run_seeds(Setting setting, const WorkloadSpec& workload, const std::vector<std::uint64_t>& seeds,
                                  const LinkProfile& links = calibrate_links("default"));

// setting,nodes,txn_type,mean_ms,p50_ms,p95_ms,max_ms,retransmits,cloud_tasks,fog_tasks
// with one row per transaction type and times to three decimals.
std::string to_csv(const std::vector<DelayStats>& stats);
// Error{IoError}.
void export_csv(const std::vector<DelayStats>& stats, const std::string& path);

struct CsvRow {
  std::string setting;
  std::size_t nodes = 0;
  std::string txn_type;
  double mean_ms = 0;
  double p50_ms = 0;
  double p95_ms = 0;
  double max_ms = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t cloud_tasks = 0;
  std::uint64_t fog_tasks = 0;
  friend bool operator==(const CsvRow&, const CsvRow&) = default;
};
// Error{DecodeError} on malformed rows.
std::vector<CsvRow> parse_csv(std::string_view text);

}  // namespace caaas::exp
