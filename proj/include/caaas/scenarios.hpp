#pragma once

// Seeded attack scenarios run over a small deployment: two things behind a
// gateway, one custodian, and an adversary on the link between thing-a and
// the gateway.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "caaas/curve.hpp"

namespace caaas::attack {

enum class Scenario : std::uint8_t {
  ReplayFresh,   // AuthRequest replayed inside the freshness window
  ReplayStale,   // AuthRequest replayed after the window
  Impersonate,   // forged client (A'') or forged server response, by seed parity
  Tamper,        // one field of an AuthRequest/AuthResponse modified in transit
  Passive,       // eavesdrop only; protocols must complete and leak nothing
  ProofReplay,   // PeerProof duplicated after the responder accepted it
};

std::string_view to_string(Scenario s) noexcept;
// CLI names: replay, replay-stale, impersonate, tamper, passive, proof-replay.
// Error{InvalidArgument} otherwise.
Scenario parse_scenario(std::string_view name);
const std::vector<Scenario>& all_scenarios();

struct ScenarioResult {
  Scenario scenario = Scenario::Passive;
  std::uint64_t seed = 0;
  // Attack rejected (or, for Passive, protocols completed with a clean scan).
  bool blocked = false;
  // The error that stopped the attack, or "clean" for Passive.
  std::string verdict;
  std::string detail;
  std::string transcript_hex;
  std::string transcript_jsonl;
};

ScenarioResult run_scenario(Scenario scenario, const CurveParams& params, std::uint64_t seed);

// Items shorter than this are not scanned for: on toy curves they collide
// with ordinary traffic by chance.
inline constexpr std::size_t kMinScanBytes = 16;

// Whether any secret occurs as a substring of any payload.
bool contains_any(const std::vector<Bytes>& payloads, const std::vector<Bytes>& secrets);

}  // namespace caaas::attack
