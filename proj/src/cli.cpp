#include "caaas/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "caaas/config.hpp"
#include "caaas/deployment.hpp"
#include "caaas/error.hpp"
#include "caaas/experiments.hpp"
#include "caaas/integrity.hpp"
#include "caaas/scenarios.hpp"

namespace caaas {

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !(f << text)) throw Error(Errc::IoError, "cannot write " + path);
}

std::vector<std::string> thing_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back("thing-" + std::to_string(i));
  return out;
}

CountermeasurePolicy parse_policy(const std::string& s) {
  if (s == "reset") return CountermeasurePolicy::Reset;
  if (s == "blacklist") return CountermeasurePolicy::Blacklist;
  return CountermeasurePolicy::Quarantine;
}

std::string error_text(const std::optional<Errc>& e) { return e ? std::string(to_string(*e)) : "none"; }

std::string ms(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << v;
  return s.str();
}

struct Options {
  std::string curve = "toy17";
  std::uint64_t seed = 1;
  std::size_t nodes = 3;
  std::vector<std::string> tamper;
  std::string policy = "quarantine";
  std::string from = "thing-a";
  std::string to = "thing-b";
  std::string scenario;
  std::string transcript;
  std::string jsonl;
  std::string profile;
  std::string report;
  std::string setting;
  std::string out;
  std::string link_profile = "default";
  std::string link_file;
  std::size_t seeds = 1;
};

int cmd_setup(const Options& o, std::ostream& out) {
  Deployment dep(curve_preset(o.curve), o.seed);
  const auto& ann = dep.announcement();
  out << "curve: " << ann.params.name() << "\n";
  out << "order: " << ann.params.n().get_str() << "\n";
  out << "public-key: " << to_hex(encode_point(ann.params, ann.public_key)) << "\n";
  for (const auto& h : ann.hash_ids) out << "hash-id: " << h << "\n";
  out << "announcement: " << to_hex(wire::encode(ann.params, ann)) << "\n";
  out << "key-pair: " << (dep.authority().key_pair_consistent() ? "consistent" : "INCONSISTENT") << "\n";
  return dep.authority().key_pair_consistent() ? kOk : kFailed;
}

int cmd_register(const Options& o, std::ostream& out) {
  DeploymentConfig cfg;
  cfg.authority.policy = parse_policy(o.policy);
  Deployment dep(curve_preset(o.curve), o.seed, cfg);
  const auto things = thing_names(o.nodes);
  build_star(dep, things);
  for (const auto& t : o.tamper) {
    if (std::find(things.begin(), things.end(), t) == things.end()) throw Error(Errc::InvalidArgument, "--tamper names no thing: " + t);
    dep.device_profile(t).firmware_digest[0] ^= 0xff;
  }
  bool all = true;
  for (const auto& r : run_handshakes(dep, things, false)) {
    const auto state = dep.authority().affinity().state(r.id);
    if (r.registered) {
      out << r.id << " registered (" << to_string(state) << ")\n";
    } else {
      all = false;
      out << r.id << " refused: " << error_text(r.error) << " (" << to_string(state) << ")\n";
    }
  }
  return all ? kOk : kFailed;
}

int cmd_handshake(const Options& o, std::ostream& out) {
  Deployment dep(curve_preset(o.curve), o.seed);
  const auto things = thing_names(o.nodes);
  build_star(dep, things);
  bool all = true;
  for (const auto& r : run_handshakes(dep, things)) {
    if (r.keys_match) {
      out << r.id << " key-agreement: OK\n";
    } else {
      all = false;
      out << r.id << " key-agreement: FAILED (" << error_text(r.error) << ")\n";
    }
  }
  if (!o.transcript.empty()) write_file(o.transcript, dep.net().export_transcript_hex());
  return all ? kOk : kFailed;
}

int cmd_peer(const Options& o, std::ostream& out) {
  if (o.from == o.to) throw Error(Errc::InvalidArgument, "--from and --to must differ");
  Deployment dep(curve_preset(o.curve), o.seed);
  build_star(dep, {o.from, o.to});
  for (const auto& r : run_handshakes(dep, {o.from, o.to})) {
    if (!r.keys_match) {
      out << r.id << " key-agreement: FAILED (" << error_text(r.error) << ")\n";
      return kFailed;
    }
  }
  auto p = run_peer_exchange(dep, o.from, o.to);
  if (p.ok && p.keys_equal) {
    out << "peer-key: OK " << o.from << " <-> " << o.to << "\n";
    out << "nonce-challenge: OK\n";
    return kOk;
  }
  out << "peer-key: FAILED (" << error_text(p.error) << ")\n";
  return kFailed;
}

int cmd_attack(const Options& o, std::ostream& out) {
  auto r = attack::run_scenario(attack::parse_scenario(o.scenario), curve_preset(o.curve), o.seed);
  out << r.verdict << "\n";
  out << "scenario: " << attack::to_string(r.scenario) << " seed: " << r.seed
      << (r.blocked ? " blocked" : " NOT BLOCKED") << " (" << r.detail << ")\n";
  if (!o.transcript.empty()) write_file(o.transcript, r.transcript_hex);
  if (!o.jsonl.empty()) write_file(o.jsonl, r.transcript_jsonl);
  return r.blocked ? kOk : kFailed;
}

int cmd_ivv(const Options& o, std::ostream& out) {
  const auto baseline = parse_profile(read_file(o.profile));
  const auto reported = parse_profile(read_file(o.report));
  const auto verdict = compare_profiles(baseline, reported);
  out << "ivv-baseline: " << to_hex(compute_ivv(baseline).digest) << "\n";
  out << "ivv-reported: " << to_hex(compute_ivv(reported).digest) << "\n";
  if (verdict.match) {
    out << "match\n";
    return kOk;
  }
  out << "mismatch:";
  for (const auto& f : verdict.differing_fields) out << " " << f;
  out << "\n";
  auto outcome = apply_countermeasure(reported.id, TrustState::Trusted, verdict, parse_policy(o.policy), TimestampMs{0});
  out << "countermeasure: " << to_string(outcome.state) << "\n";
  return kFailed;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  exp::LinkProfile links;
  exp::WorkloadSpec workload;
  if (!o.link_file.empty()) {
    auto cfg = KeyValueConfig::load(o.link_file);
    links = exp::link_profile_from(cfg);
    workload = exp::workload_from(cfg, links);
  } else {
    links = exp::calibrate_links(o.link_profile);
    workload = o.link_profile == "default" ? exp::default_workload() : exp::WorkloadSpec{};
    workload.cloud_capacity = links.cloud_capacity;
    workload.fog_capacity = links.fog_capacity;
  }
  if (o.nodes != 0) workload.node_count = o.nodes;
  const auto setting = exp::parse_setting(o.setting);
  const auto seeds = o.seeds <= 1 ? std::vector<std::uint64_t>{o.seed} : exp::derive_seeds(o.seed, o.seeds);
  auto stats = exp::run_seeds(setting, workload, seeds, links);
  for (const auto& s : stats) {
    out << exp::to_string(s.setting) << " nodes=" << s.nodes << " seed=" << s.seed
        << " registration_mean_ms=" << ms(s.registration.mean_ms)
        << " authentication_mean_ms=" << ms(s.authentication.mean_ms) << " retransmits=" << s.retransmits
        << " cloud_util=" << ms(s.cloud_utilization) << "% fog_util=" << ms(s.fog_utilization) << "%"
        << " failures=" << s.failures << "\n";
  }
  if (!o.out.empty()) exp::export_csv(stats, o.out);
  bool clean = true;
  for (const auto& s : stats) clean = clean && s.failures == 0;
  return clean ? kOk : kFailed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"caaas: identity-based authentication over a simulated cloud-fog-things network", "caaas-cli"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> curves = {"toy17", "prod256"};

  auto* setup = app.add_subcommand("setup", "Generate the authority key pair and print the announcement");
  setup->add_option("--curve", o.curve, "Curve preset")->check(CLI::IsMember(curves));
  setup->add_option("--seed", o.seed, "Master seed");

  auto* reg = app.add_subcommand("register", "Register things (integrity check and key issue)");
  reg->add_option("--curve", o.curve, "Curve preset")->check(CLI::IsMember(curves));
  reg->add_option("--seed", o.seed, "Master seed");
  reg->add_option("--nodes", o.nodes, "Number of things")->check(CLI::Range(1, 10000));
  reg->add_option("--tamper", o.tamper, "Thing whose firmware is modified before registering");
  reg->add_option("--policy", o.policy, "Countermeasure policy")
      ->check(CLI::IsMember({"quarantine", "reset", "blacklist"}));

  auto* hs = app.add_subcommand("handshake", "Register and authenticate K things, check key agreement");
  hs->add_option("--curve", o.curve, "Curve preset")->check(CLI::IsMember(curves));
  hs->add_option("--seed", o.seed, "Master seed");
  hs->add_option("--nodes", o.nodes, "Number of things")->check(CLI::Range(1, 10000));
  hs->add_option("--transcript", o.transcript, "Write the hex transcript of observed traffic here");

  auto* peer = app.add_subcommand("peer", "Key exchange between two things through the custodian");
  peer->add_option("--curve", o.curve, "Curve preset")->check(CLI::IsMember(curves));
  peer->add_option("--seed", o.seed, "Master seed");
  peer->add_option("--from", o.from, "Initiator identity");
  peer->add_option("--to", o.to, "Responder identity");

  auto* atk = app.add_subcommand("attack", "Run an attack scenario and print the verdict");
  std::vector<std::string> scenario_names;
  for (auto s : attack::all_scenarios()) scenario_names.emplace_back(attack::to_string(s));
  atk->add_option("--scenario", o.scenario, "Scenario")->required()->check(CLI::IsMember(scenario_names));
  atk->add_option("--seed", o.seed, "Master seed")->required();
  atk->add_option("--curve", o.curve, "Curve preset")->check(CLI::IsMember(curves))->default_str("prod256");
  atk->add_option("--transcript", o.transcript, "Write the adversary transcript (hex) here");
  atk->add_option("--jsonl", o.jsonl, "Write the adversary transcript (JSON lines) here");

  auto* ivv = app.add_subcommand("ivv", "Compare a reported device profile against its baseline");
  ivv->add_option("--profile", o.profile, "Baseline profile file")->required();
  ivv->add_option("--report", o.report, "Reported profile file")->required();
  ivv->add_option("--policy", o.policy, "Countermeasure policy")
      ->check(CLI::IsMember({"quarantine", "reset", "blacklist"}));

  auto* ex = app.add_subcommand("experiment", "Run the placement study");
  std::vector<std::string> setting_names;
  for (auto s : exp::all_settings()) setting_names.emplace_back(exp::to_string(s));
  ex->add_option("--setting", o.setting, "Placement setting")->required()->check(CLI::IsMember(setting_names));
  ex->add_option("--nodes", o.nodes, "Number of things (default from the profile)");
  ex->add_option("--seed", o.seed, "Master seed")->required();
  ex->add_option("--seeds", o.seeds, "Runs with seeds derived from --seed")->check(CLI::Range(1, 1000));
  ex->add_option("--out", o.out, "CSV output path");
  ex->add_option("--profile", o.link_profile, "Link profile")->check(CLI::IsMember({"default", "lan"}));
  ex->add_option("--profile-file", o.link_file, "Link profile file (key = value)");

  bool attack_curve_given = false;
  try {
    app.parse(argc, argv);
    attack_curve_given = atk->count("--curve") > 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    if (argc <= 1) err << app.help();
    return kUsage;
  }
  if (ex->parsed() && ex->count("--nodes") == 0) o.nodes = 0;
  if (atk->parsed() && !attack_curve_given) o.curve = "prod256";

  try {
    if (setup->parsed()) return cmd_setup(o, out);
    if (reg->parsed()) return cmd_register(o, out);
    if (hs->parsed()) return cmd_handshake(o, out);
    if (peer->parsed()) return cmd_peer(o, out);
    if (atk->parsed()) return cmd_attack(o, out);
    if (ivv->parsed()) return cmd_ivv(o, out);
    if (ex->parsed()) return cmd_experiment(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::IoError || e.code() == Errc::ConfigError || e.code() == Errc::InvalidArgument ? kUsage
                                                                                                             : kFailed;
  }
  return kUsage;
}

}  // namespace caaas
