#include "caaas/integrity.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "caaas/config.hpp"
#include "caaas/digest.hpp"
#include "caaas/error.hpp"

namespace caaas {

namespace {

constexpr std::string_view kIvvTag = "caaas/ivv/v1";

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

template <typename T>
bool strictly_sorted(const std::vector<T>& v) {
  return std::adjacent_find(v.begin(), v.end(), [](const T& a, const T& b) { return !(a < b); }) == v.end();
}

void put_str(Bytes& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

Bytes serialize(const DeviceProfile& p) {
  Bytes out;
  put_str(out, kIvvTag);
  put_str(out, p.id);
  append(out, p.firmware_digest);
  append(out, p.os_digest);
  put_u32(out, static_cast<std::uint32_t>(p.software_list.size()));
  for (const auto& [name, version] : p.software_list) {
    put_str(out, name);
    put_str(out, version);
  }
  put_u32(out, static_cast<std::uint32_t>(p.used_slots.size()));
  for (auto s : p.used_slots) put_u32(out, s);
  put_u32(out, static_cast<std::uint32_t>(p.unused_slots.size()));
  for (auto s : p.unused_slots) put_u32(out, s);
  put_u32(out, static_cast<std::uint32_t>(p.blacklist_services.size()));
  for (const auto& s : p.blacklist_services) put_str(out, s);
  return out;
}

// Text helpers for the affinity file.
std::string hex_str(std::string_view s) { return to_hex(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())); }
std::string unhex_str(std::string_view h) { return caaas::to_string(from_hex(h)); }

template <typename T, typename F>
std::string join(const std::vector<T>& items, F render) {
  if (items.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += render(items[i]);
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (s == "-") return out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string slot_hex(std::uint32_t v) {
  Bytes b;
  put_u32(b, v);
  return to_hex(b);
}

std::uint32_t slot_from_hex(std::string_view h) {
  auto b = from_hex(h);
  ByteReader r(b);
  auto v = r.u32();
  r.expect_done();
  return v;
}

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view h) {
  auto b = from_hex(h);
  if (b.size() != N) throw Error(Errc::DecodeError, "wrong digest length");
  std::array<std::uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

}  // namespace

void DeviceProfile::canonicalize() {
  sort_unique(software_list);
  sort_unique(used_slots);
  sort_unique(unused_slots);
  sort_unique(blacklist_services);
}

bool DeviceProfile::is_canonical() const {
  return strictly_sorted(software_list) && strictly_sorted(used_slots) && strictly_sorted(unused_slots) &&
         strictly_sorted(blacklist_services);
}

IvvValue compute_ivv(const DeviceProfile& profile) {
  if (!profile.is_canonical()) throw Error(Errc::NonCanonicalProfile, profile.id);
  return IvvValue{sha256(serialize(profile))};
}

IvvVerdict compare_profiles(const DeviceProfile& baseline, const DeviceProfile& reported) {
  IvvVerdict v;
  v.match = compute_ivv(baseline) == compute_ivv(reported);
  if (v.match) return v;
  auto note = [&v](bool differs, const char* name) {
    if (differs) v.differing_fields.emplace_back(name);
  };
  note(baseline.id != reported.id, "id");
  note(baseline.firmware_digest != reported.firmware_digest, "firmware_digest");
  note(baseline.os_digest != reported.os_digest, "os_digest");
  note(baseline.software_list != reported.software_list, "software_list");
  note(baseline.used_slots != reported.used_slots, "used_slots");
  note(baseline.unused_slots != reported.unused_slots, "unused_slots");
  note(baseline.blacklist_services != reported.blacklist_services, "blacklist_services");
  return v;
}

std::string_view to_string(TrustState s) noexcept {
  switch (s) {
    case TrustState::Untrusted: return "Untrusted";
    case TrustState::Trusted: return "Trusted";
    case TrustState::Quarantined: return "Quarantined";
    case TrustState::ResetPending: return "ResetPending";
    case TrustState::Blacklisted: return "Blacklisted";
  }
  return "Unknown";
}

CountermeasureOutcome apply_countermeasure(const std::string& id, TrustState current, const IvvVerdict& verdict,
                                           CountermeasurePolicy policy, TimestampMs now) {
  CountermeasureOutcome out;
  if (verdict.match) {
    out.state = (current == TrustState::Quarantined || current == TrustState::Blacklisted) ? current
                                                                                            : TrustState::Trusted;
    return out;
  }
  switch (current) {
    case TrustState::Blacklisted:
      out.state = TrustState::Blacklisted;
      break;
    case TrustState::ResetPending:
      out.state = TrustState::Blacklisted;
      break;
    case TrustState::Quarantined:
      out.state = policy == CountermeasurePolicy::Blacklist ? TrustState::Blacklisted : TrustState::Quarantined;
      break;
    default:
      switch (policy) {
        case CountermeasurePolicy::Quarantine: out.state = TrustState::Quarantined; break;
        case CountermeasurePolicy::Reset: out.state = TrustState::ResetPending; break;
        case CountermeasurePolicy::Blacklist: out.state = TrustState::Blacklisted; break;
      }
  }
  out.notice = TrustNotice{id, out.state, now};
  return out;
}

void AffinityStore::provision(DeviceProfile baseline, SymmetricKey registration_key) {
  baseline.canonicalize();
  std::string id = baseline.id;
  records_[id] = AffinityRecord{std::move(baseline), registration_key, TrustState::Untrusted, TimestampMs{}};
}

const AffinityRecord& AffinityStore::record(const std::string& id) const {
  auto it = records_.find(id);
  if (it == records_.end()) throw Error(Errc::UnknownDevice, id);
  return it->second;
}

AffinityRecord& AffinityStore::mutable_record(const std::string& id) {
  auto it = records_.find(id);
  if (it == records_.end()) throw Error(Errc::UnknownDevice, id);
  return it->second;
}

std::pair<IvvVerdict, CountermeasureOutcome> AffinityStore::verify(const DeviceProfile& reported,
                                                                   CountermeasurePolicy policy, TimestampMs now) {
  auto& rec = mutable_record(reported.id);
  IvvVerdict verdict = compare_profiles(rec.baseline, reported);
  auto outcome = apply_countermeasure(reported.id, rec.state, verdict, policy, now);
  if (outcome.state != rec.state) {
    rec.state = outcome.state;
    rec.since = now;
  }
  return {verdict, outcome};
}

void AffinityStore::update_profile(const std::string& id, DeviceProfile new_profile, Provenance provenance) {
  if (provenance != Provenance::Parent) throw Error(Errc::UntrustedProvenance, id);
  auto& rec = mutable_record(id);
  if (new_profile.id != id) throw Error(Errc::InvalidArgument, "profile id does not match record");
  new_profile.canonicalize();
  rec.baseline = std::move(new_profile);
}

void AffinityStore::set_state(const std::string& id, TrustState state, TimestampMs now) {
  auto& rec = mutable_record(id);
  rec.state = state;
  rec.since = now;
}

IvvVerdict verify_ivv(const AffinityStore& store, const DeviceProfile& reported) {
  return compare_profiles(store.record(reported.id).baseline, reported);
}

std::string AffinityStore::dump() const {
  std::ostringstream out;
  for (const auto& [id, rec] : records_) {
    const auto& p = rec.baseline;
    out << hex_str(id) << ' ' << to_hex(p.firmware_digest) << ' ' << to_hex(p.os_digest) << ' '
        << join(p.software_list, [](const auto& sw) { return hex_str(sw.first) + ":" + hex_str(sw.second); })
        << ' ' << join(p.used_slots, slot_hex) << ' ' << join(p.unused_slots, slot_hex) << ' '
        << join(p.blacklist_services, hex_str) << ' ' << to_hex(rec.registration_key.view()) << ' '
        << static_cast<int>(rec.state) << ' ' << rec.since.ms << '\n';
  }
  return out.str();
}

AffinityStore AffinityStore::load(std::string_view text) {
  AffinityStore store;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string id, fw, os, sw, used, unused, bl, key;
    int state = 0;
    std::uint64_t since = 0;
    if (!(fields >> id >> fw >> os >> sw >> used >> unused >> bl >> key >> state >> since)) {
      throw Error(Errc::DecodeError, "malformed affinity line");
    }
    if (state < 0 || state > static_cast<int>(TrustState::Blacklisted)) {
      throw Error(Errc::DecodeError, "bad trust state");
    }
    DeviceProfile p;
    p.id = unhex_str(id);
    p.firmware_digest = fixed_from_hex<32>(fw);
    p.os_digest = fixed_from_hex<32>(os);
    for (const auto& item : split(sw, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw Error(Errc::DecodeError, "bad software entry");
      p.software_list.emplace_back(unhex_str(item.substr(0, colon)), unhex_str(item.substr(colon + 1)));
    }
    for (const auto& item : split(used, ',')) p.used_slots.push_back(slot_from_hex(item));
    for (const auto& item : split(unused, ',')) p.unused_slots.push_back(slot_from_hex(item));
    for (const auto& item : split(bl, ',')) p.blacklist_services.push_back(unhex_str(item));
    if (!p.is_canonical()) throw Error(Errc::NonCanonicalProfile, p.id);
    std::string rid = p.id;
    store.records_[rid] = AffinityRecord{std::move(p), SymmetricKey(fixed_from_hex<32>(key)),
                                         static_cast<TrustState>(state), TimestampMs{since}};
  }
  return store;
}

DeviceProfile parse_profile(std::string_view text) {
  const auto cfg = KeyValueConfig::parse(text);
  DeviceProfile p;
  p.id = cfg.get("id");
  p.firmware_digest = fixed_from_hex<32>(cfg.get("firmware"));
  p.os_digest = fixed_from_hex<32>(cfg.get("os"));
  auto list = [&cfg](const char* key) {
    std::vector<std::string> items;
    for (auto& item : split(cfg.has(key) ? cfg.get(key) : "-", ',')) {
      if (!item.empty()) items.push_back(std::move(item));
    }
    return items;
  };
  for (const auto& item : list("software")) {
    auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(Errc::ConfigError, "software item without version: " + item);
    p.software_list.emplace_back(item.substr(0, colon), item.substr(colon + 1));
  }
  auto slots = [&list](const char* key) {
    std::vector<std::uint32_t> out;
    for (const auto& item : list(key)) {
      std::uint32_t v = 0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc{} || ptr != item.data() + item.size()) throw Error(Errc::ConfigError, "bad slot " + item);
      out.push_back(v);
    }
    return out;
  };
  p.used_slots = slots("used_slots");
  p.unused_slots = slots("unused_slots");
  p.blacklist_services = list("blacklist");
  p.canonicalize();
  return p;
}

std::string format_profile(const DeviceProfile& p) {
  std::string out = "id = " + p.id + "\n";
  out += "firmware = " + to_hex(p.firmware_digest) + "\n";
  out += "os = " + to_hex(p.os_digest) + "\n";
  out += "software = " + join(p.software_list, [](const auto& s) { return s.first + ":" + s.second; }) + "\n";
  out += "used_slots = " + join(p.used_slots, [](std::uint32_t v) { return std::to_string(v); }) + "\n";
  out += "unused_slots = " + join(p.unused_slots, [](std::uint32_t v) { return std::to_string(v); }) + "\n";
  out += "blacklist = " + join(p.blacklist_services, [](const std::string& v) { return v; }) + "\n";
  return out;
}

}  // namespace caaas
