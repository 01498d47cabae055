#include "caaas/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "caaas/deployment.hpp"
#include "caaas/embedded_config.hpp"
#include "caaas/error.hpp"

namespace caaas::exp {

namespace {

constexpr const char* kCloud = "cloud-ca";
constexpr const char* kFog = "fog-ca";
constexpr const char* kProxy = "fog-proxy";

// Overloaded runs take tens of seconds of simulated time to drain; timestamps
// must stay acceptable that long or every late request becomes a refusal.
constexpr std::uint64_t kExperimentWindowMs = 3600 * 1000;

TxnStats summarize(std::vector<double> delays) {
  TxnStats s;
  if (delays.empty()) return s;
  std::sort(delays.begin(), delays.end());
  s.count = delays.size();
  double sum = 0;
  for (double d : delays) sum += d;
  s.mean_ms = sum / static_cast<double>(delays.size());
  auto rank = [&](double q) {
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(delays.size())));
    return delays[std::clamp<std::size_t>(idx, 1, delays.size()) - 1];
  };
  s.p50_ms = rank(0.50);
  s.p95_ms = rank(0.95);
  s.max_ms = delays.back();
  return s;
}

double exponential(Rng& rng, double rate) { return -std::log(1.0 - rng.uniform01()) / rate; }

template <class Job>
void parallel_for(std::size_t n, Job job) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string_view to_string(Setting s) noexcept {
  switch (s) {
    case Setting::CloudOnly: return "CloudOnly";
    case Setting::MainlyCloud: return "MainlyCloud";
    case Setting::FairlyShared: return "FairlyShared";
    case Setting::MainlyFog: return "MainlyFog";
    case Setting::FogOnly: return "FogOnly";
  }
  return "Unknown";
}

const std::vector<Setting>& all_settings() {
  static const std::vector<Setting> kAll = {Setting::CloudOnly, Setting::MainlyCloud, Setting::FairlyShared,
                                            Setting::MainlyFog, Setting::FogOnly};
  return kAll;
}

Setting parse_setting(std::string_view name) {
  for (Setting s : all_settings()) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::InvalidArgument, "unknown setting " + std::string(name));
}

double fog_fraction(Setting s) noexcept {
  switch (s) {
    case Setting::CloudOnly: return 0.0;
    case Setting::MainlyCloud: return 0.1;
    case Setting::FairlyShared: return 0.5;
    case Setting::MainlyFog: return 0.9;
    case Setting::FogOnly: return 1.0;
  }
  return 0.0;
}

void WorkloadSpec::validate() const {
  if (!(registration_rate > 0) || !(auth_rate > 0) || duration_ms == 0 || !(cloud_capacity > 0) ||
      !(fog_capacity > 0) || retransmit_timeout_ms == 0) {
    throw Error(Errc::InvalidArgument, "workload rates, capacities and times must be positive");
  }
}

LinkProfile link_profile_from(const KeyValueConfig& cfg) {
  LinkProfile p;
  p.name = cfg.get("name");
  p.thing_fog_ms = cfg.get_double("thing_fog_ms");
  p.thing_fog_jitter_ms = cfg.get_double_or("thing_fog_jitter_ms", 0);
  p.fog_cloud_ms = cfg.get_double("fog_cloud_ms");
  p.fog_cloud_jitter_ms = cfg.get_double_or("fog_cloud_jitter_ms", 0);
  p.fog_capacity = cfg.get_double("fog_capacity");
  p.cloud_capacity = cfg.get_double("cloud_capacity");
  return p;
}

WorkloadSpec workload_from(const KeyValueConfig& cfg, const LinkProfile& links) {
  WorkloadSpec w;
  w.node_count = cfg.get_u64_or("nodes", w.node_count);
  w.registration_rate = cfg.get_double_or("registration_rate", w.registration_rate);
  w.auth_rate = cfg.get_double_or("auth_rate", w.auth_rate);
  w.duration_ms = cfg.get_u64_or("duration_ms", w.duration_ms);
  w.retransmit_timeout_ms = cfg.get_u64_or("retransmit_timeout_ms", w.retransmit_timeout_ms);
  w.max_retransmits = static_cast<unsigned>(cfg.get_u64_or("max_retransmits", w.max_retransmits));
  w.cloud_capacity = links.cloud_capacity;
  w.fog_capacity = links.fog_capacity;
  return w;
}

LinkProfile calibrate_links(std::string_view profile_name) {
  if (profile_name == "default") return link_profile_from(KeyValueConfig::parse(embedded::kDefaultLinks));
  if (profile_name == "lan") return link_profile_from(KeyValueConfig::parse(embedded::kLanLinks));
  throw Error(Errc::UnknownProfile, std::string(profile_name));
}

WorkloadSpec default_workload() {
  auto cfg = KeyValueConfig::parse(embedded::kDefaultLinks);
  return workload_from(cfg, link_profile_from(cfg));
}

DelayStats run_experiment(Setting setting, const WorkloadSpec& workload, std::uint64_t seed, const LinkProfile& links,
                          const CurveParams& params) {
  DelayStats out;
  out.setting = setting;
  out.nodes = workload.node_count;
  out.seed = seed;
  if (workload.node_count == 0) return out;
  workload.validate();

  DeploymentConfig cfg;
  cfg.authority.freshness_window_ms = kExperimentWindowMs;
  cfg.child.freshness_window_ms = kExperimentWindowMs;
  cfg.retransmit_timeout_ms = workload.retransmit_timeout_ms;
  cfg.max_retransmits = workload.max_retransmits;
  Deployment dep(params, seed, cfg);
  dep.add_server(kCloud, sim::Tier::Cloud, workload.cloud_capacity);
  dep.add_server(kFog, sim::Tier::Community, workload.fog_capacity);
  dep.add_proxy(kProxy, sim::Tier::Street);
  dep.connect({kProxy, kFog, 0, 0, 0});
  dep.connect({kProxy, kCloud, links.fog_cloud_ms, links.fog_cloud_jitter_ms, 0});

  const double fog = fog_fraction(setting);
  const double total_rate = workload.registration_rate + workload.auth_rate;
  const double duration_s = static_cast<double>(workload.duration_ms) / 1000.0;
  for (std::size_t i = 0; i < workload.node_count; ++i) {
    const std::string node = "thing-" + std::to_string(i + 1);
    dep.add_thing(node);
    dep.connect({node, kProxy, links.thing_fog_ms, links.thing_fog_jitter_ms, 0});
    Rng rng = Rng(seed).fork("workload/" + node);
    unsigned generation = 0;
    // The first request is always a registration; a thing cannot
    // authenticate before it holds a key.
    for (double t = exponential(rng, total_rate); t < duration_s; t += exponential(rng, total_rate)) {
      const bool reg = generation == 0 || rng.uniform01() * total_rate < workload.registration_rate;
      const std::string server = rng.uniform01() < fog ? kFog : kCloud;
      const auto at_us = static_cast<std::uint64_t>(t * 1e6);
      if (reg) {
        std::optional<std::string> identity;
        if (generation > 0) identity = node + "." + std::to_string(generation);
        ++generation;
        dep.request_at(at_us, TxnKind::Registration, node, server, identity);
      } else {
        dep.request_at(at_us, TxnKind::Authentication, node, server);
      }
    }
  }
  dep.run();

  std::vector<double> reg, auth;
  for (const auto& txn : dep.transactions()) {
    out.retransmits += txn.retransmits;
    if (!txn.done() || !txn.ok) {
      ++out.failures;
      continue;
    }
    (txn.kind == TxnKind::Registration ? reg : auth).push_back(txn.delay_ms());
  }
  out.registration = summarize(std::move(reg));
  out.authentication = summarize(std::move(auth));
  out.cloud_tasks = dep.server_load(kCloud).tasks;
  out.fog_tasks = dep.server_load(kFog).tasks;
  out.cloud_utilization = 100.0 * static_cast<double>(out.cloud_tasks) / (duration_s * workload.cloud_capacity);
  out.fog_utilization = 100.0 * static_cast<double>(out.fog_tasks) / (duration_s * workload.fog_capacity);
  return out;
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t master, std::size_t count) {
  Rng rng = Rng(master).fork("experiment-seeds");
  std::vector<std::uint64_t> seeds(count);
  for (auto& s : seeds) s = rng.next_u64();
  return seeds;
}

std::vector<DelayStats> sweep_nodes(Setting setting, const std::vector<std::size_t>& counts,
                                    const WorkloadSpec& workload, std::uint64_t seed, const LinkProfile& links) {
  if (!std::is_sorted(counts.begin(), counts.end())) throw Error(Errc::InvalidArgument, "counts must ascend");
  std::vector<DelayStats> out(counts.size());
  parallel_for(counts.size(), [&](std::size_t i) {
    WorkloadSpec w = workload;
    w.node_count = counts[i];
    out[i] = run_experiment(setting, w, seed, links);
  });
  return out;
}

std::vector<DelayStats> run_seeds(Setting setting, const WorkloadSpec& workload, const std::vector<std::uint64_t>& seeds,
                                  const LinkProfile& links) {
  std::vector<DelayStats> out(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) { out[i] = run_experiment(setting, workload, seeds[i], links); });
  return out;
}

std::string to_csv(const std::vector<DelayStats>& stats) {
  std::string out = "setting,nodes,txn_type,mean_ms,p50_ms,p95_ms,max_ms,retransmits,cloud_tasks,fog_tasks\n";
  for (const auto& s : stats) {
    for (const auto& [name, t] : {std::pair{"registration", &s.registration}, std::pair{"authentication", &s.authentication}}) {
      out += std::string(to_string(s.setting)) + ',' + std::to_string(s.nodes) + ',' + name + ',' + fmt3(t->mean_ms) +
             ',' + fmt3(t->p50_ms) + ',' + fmt3(t->p95_ms) + ',' + fmt3(t->max_ms) + ',' +
             std::to_string(s.retransmits) + ',' + std::to_string(s.cloud_tasks) + ',' + std::to_string(s.fog_tasks) +
             '\n';
    }
  }
  return out;
}

void export_csv(const std::vector<DelayStats>& stats, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot write " + path);
  f << to_csv(stats);
  if (!f) throw Error(Errc::IoError, "write failed: " + path);
}

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 10) throw Error(Errc::DecodeError, "expected 10 columns: " + line);
    try {
      rows.push_back(CsvRow{f[0], std::stoul(f[1]), f[2], std::stod(f[3]), std::stod(f[4]), std::stod(f[5]),
                            std::stod(f[6]), std::stoull(f[7]), std::stoull(f[8]), std::stoull(f[9])});
    } catch (const std::logic_error&) {
      throw Error(Errc::DecodeError, "bad number in: " + line);
    }
  }
  return rows;
}

}  // namespace caaas::exp
