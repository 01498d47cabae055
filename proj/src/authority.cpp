#include "caaas/authority.hpp"

#include <sodium.h>

#include <algorithm>
#include <sstream>

#include "caaas/error.hpp"

namespace caaas {

namespace {

const std::vector<std::string> kHashIds = {std::string(kH1Tag), std::string(kH2Tag), std::string(kH3Tag)};

Bytes field_bytes(const CurveParams& params, const BigInt& v) { return to_fixed(v, params.field_bytes()); }

std::string hex_id(const std::string& id) { return to_hex(to_bytes(id)); }

}  // namespace

std::string_view to_string(RevocationReason r) noexcept {
  switch (r) {
    case RevocationReason::Compromise: return "compromise";
    case RevocationReason::Expiry: return "expiry";
    case RevocationReason::Policy: return "policy";
  }
  return "unknown";
}

Authority::Authority(CurveParams params, Rng rng, ClockFn clock, AuthorityConfig config)
    : params_(std::move(params)),
      rng_(std::move(rng)),
      clock_(std::move(clock)),
      config_(config),
      announcement_{params_, CurvePoint::infinity(), kHashIds} {}

std::pair<Authority, wire::Announcement> Authority::setup(const CurveParams& params, Rng rng, ClockFn clock,
                                                          AuthorityConfig config) {
  Authority a(params, std::move(rng), std::move(clock), config);
  a.private_key_ = random_nonzero_scalar(a.params_, a.rng_);
  a.public_key_ = scalar_mul_base(a.params_, a.private_key_);
  a.announcement_.public_key = a.public_key_;
  auto ann = a.announcement_;
  return {std::move(a), std::move(ann)};
}

void Authority::provision_device(DeviceProfile baseline, SymmetricKey registration_key) {
  affinity_.provision(std::move(baseline), registration_key);
}

const CrlEntry* Authority::crl_entry(const std::string& id) const {
  auto it = std::find_if(crl_.begin(), crl_.end(), [&id](const CrlEntry& e) { return e.id == id; });
  return it == crl_.end() ? nullptr : &*it;
}

bool Authority::is_revoked(const std::string& id) const { return crl_entry(id) != nullptr; }

void Authority::check_admissible(const std::string& id) const {
  if (const auto* entry = crl_entry(id)) {
    throw Error(entry->reason == RevocationReason::Expiry ? Errc::Expired : Errc::Revoked, id);
  }
  auto it = registry_.find(id);
  if (it == registry_.end()) throw Error(Errc::NotRegistered, id);
  if (affinity_.contains(id) && !admits_protocol(affinity_.state(id))) {
    throw Error(Errc::DeviceUntrusted, std::string(to_string(affinity_.state(id))));
  }
  const auto& rec = it->second;
  if (rec.lifetime_ms && clock_().ms > rec.issued_at.ms + *rec.lifetime_ms) throw Error(Errc::Expired, id);
}

wire::RegistrationResponse Authority::register_child(const wire::RegistrationRequest& req,
                                                     const DeviceProfile& reported,
                                                     std::optional<std::uint64_t> lifetime_ms) {
  const std::string& id = req.id;
  if (!affinity_.contains(id)) throw Error(Errc::UnknownDevice, id);
  if (reported.id != id) throw Error(Errc::IntegrityMismatch, "profile id differs from requested id");
  const TimestampMs now = clock_();
  auto [verdict, outcome] = affinity_.verify(reported, config_.policy, now);
  if (outcome.notice) notices_.push_back(*outcome.notice);
  if (!verdict.match) {
    std::string fields;
    for (const auto& f : verdict.differing_fields) fields += (fields.empty() ? "" : ",") + f;
    throw Error(Errc::IntegrityMismatch, std::string(to_string(outcome.state)) + " (" + fields + ")");
  }
  if (!admits_protocol(outcome.state)) throw Error(Errc::DeviceUntrusted, std::string(to_string(outcome.state)));
  if (registry_.count(id) != 0 && !is_revoked(id)) throw Error(Errc::DuplicateRegistration, id);

  RegistrationRecord rec;
  rec.id = id;
  rec.id_point = hash_to_point(params_, to_bytes(id));
  rec.auth_key = scalar_mul(params_, private_key_, rec.id_point);
  rec.issued_at = now;
  rec.lifetime_ms = lifetime_ms;

  const auto& channel_key = affinity_.record(id).registration_key;
  wire::RegistrationResponse resp{seal(channel_key, encode_point(params_, rec.auth_key), rng_)};
  registry_[id] = std::move(rec);
  crl_.erase(std::remove_if(crl_.begin(), crl_.end(), [&id](const CrlEntry& e) { return e.id == id; }), crl_.end());
  sessions_.erase(id);
  return resp;
}

wire::AuthResponse Authority::handle_auth_request(const wire::AuthRequest& req) {
  check_admissible(req.id);
  const auto& rec = registry_.at(req.id);
  const TimestampMs now = clock_();
  if (!check_freshness(req.t1, now, config_.freshness_window_ms)) throw Error(Errc::StaleTimestamp, req.id);

  purge_replay_cache(now);
  if (!replay_cache_.emplace(req.id, req.t1.ms).second) throw Error(Errc::ReplayDetected, req.id);

  // R_C' = M_C - t_1' x K_S^R x Q_ID, with K_S^R x Q_ID = A_ID from the record.
  const Scalar t1 = hash_timestamp(params_, req.t1.ms);
  CurvePoint r_c = point_sub(params_, req.m_c, scalar_mul(params_, t1, rec.auth_key));
  if (r_c.is_infinity()) throw Error(Errc::BadProof, req.id);
  if (!(req.r_c_star == scalar_mul(params_, Scalar::reduce(params_, r_c.x()), params_.base()))) {
    throw Error(Errc::BadProof, req.id);
  }

  const TimestampMs t2_time = now;
  const Scalar r_s = random_nonzero_scalar(params_, rng_);
  CurvePoint r_s_point = scalar_mul_base(params_, r_s);
  const Scalar t2 = hash_timestamp(params_, t2_time.ms);
  CurvePoint m_s = point_add(params_, r_s_point, scalar_mul(params_, t2, rec.auth_key));

  SessionKey session = derive_session_key(params_, field_bytes(params_, rec.id_point.x()),
                                          field_bytes(params_, r_c.x()), field_bytes(params_, r_s_point.x()));
  CurvePoint m_k = scalar_mul_base(params_, Scalar::reduce(params_, session.k.value() + r_s_point.x()));
  sessions_.insert_or_assign(req.id, session);
  return wire::AuthResponse{m_s, m_k, t2_time};
}

Authority::Relay Authority::relay_peer_request(const std::string& from_id, const wire::PeerInit& msg) {
  auto from = sessions_.find(from_id);
  if (from == sessions_.end()) throw Error(Errc::NoSession, from_id);
  const SymmetricKey& k_is = from->second.key;

  Bytes target_raw = open(k_is, msg.e_target);
  std::string target = to_string(target_raw);
  Bytes proposed = open(k_is, msg.e_key);
  // N_i is authenticated but not used further.
  Bytes nonce = open(k_is, msg.e_nonce);
  sodium_memzero(nonce.data(), nonce.size());

  auto wipe = [&proposed] { sodium_memzero(proposed.data(), proposed.size()); };
  if (proposed.size() != SymmetricKey::kSize) {
    wipe();
    throw Error(Errc::AuthFailure, "proposed key has wrong length");
  }
  if (target == from_id || !wire::valid_identity(target)) {
    wipe();
    throw Error(Errc::InvalidArgument, "invalid peer target");
  }
  if (is_revoked(target)) {
    wipe();
    throw Error(Errc::TargetRevoked, target);
  }
  auto to = sessions_.find(target);
  if (to == sessions_.end()) {
    wipe();
    throw Error(Errc::NoSession, target);
  }
  const SymmetricKey& k_js = to->second.key;
  Relay relay{target, wire::PeerRelay{seal(k_js, to_bytes(from_id), rng_), seal(k_js, proposed, rng_)}};
  wipe();
  return relay;
}

CrlEntry Authority::revoke(const std::string& id, RevocationReason reason) {
  if (registry_.count(id) == 0 && !is_revoked(id)) throw Error(Errc::UnknownId, id);
  sessions_.erase(id);
  if (const auto* existing = crl_entry(id)) return *existing;
  CrlEntry entry{id, clock_(), reason};
  crl_.push_back(entry);
  return entry;
}

std::size_t Authority::purge_expired(TimestampMs now) {
  std::size_t purged = 0;
  for (auto it = registry_.begin(); it != registry_.end();) {
    const auto& rec = it->second;
    if (rec.lifetime_ms && rec.issued_at.ms + *rec.lifetime_ms < now.ms) {
      const std::string id = it->first;
      it = registry_.erase(it);
      sessions_.erase(id);
      crl_.erase(std::remove_if(crl_.begin(), crl_.end(), [&id](const CrlEntry& e) { return e.id == id; }),
                 crl_.end());
      crl_.push_back(CrlEntry{id, now, RevocationReason::Expiry});
      ++purged;
    } else {
      ++it;
    }
  }
  return purged;
}

std::size_t Authority::purge_replay_cache(TimestampMs now) {
  std::size_t removed = 0;
  for (auto it = replay_cache_.begin(); it != replay_cache_.end();) {
    if (it->second + config_.freshness_window_ms < now.ms) {
      it = replay_cache_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

std::optional<SessionKey> Authority::session(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

bool Authority::key_pair_consistent() const {
  return public_key_ == scalar_mul_base(params_, private_key_);
}

std::vector<TrustNotice> Authority::take_notices() { return std::exchange(notices_, {}); }

std::string Authority::dump_state() const {
  std::ostringstream out;
  for (const auto& [id, rec] : registry_) {
    out << "R " << hex_id(id) << ' ' << to_hex(encode_point(params_, rec.auth_key)) << ' ' << rec.issued_at.ms
        << ' ';
    if (rec.lifetime_ms) {
      out << *rec.lifetime_ms;
    } else {
      out << '-';
    }
    out << '\n';
  }
  for (const auto& e : crl_) {
    out << "C " << hex_id(e.id) << ' ' << e.revoked_at.ms << ' ' << to_string(e.reason) << '\n';
  }
  return out.str();
}

void Authority::load_state(std::string_view text) {
  std::map<std::string, RegistrationRecord> registry;
  std::vector<CrlEntry> crl;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string kind, id_hex;
    fields >> kind >> id_hex;
    std::string id = to_string(from_hex(id_hex));
    if (kind == "R") {
      std::string a_hex, lifetime;
      std::uint64_t issued = 0;
      if (!(fields >> a_hex >> issued >> lifetime)) throw Error(Errc::DecodeError, "malformed registry line");
      RegistrationRecord rec;
      rec.id = id;
      rec.auth_key = decode_point(params_, from_hex(a_hex));
      rec.id_point = hash_to_point(params_, to_bytes(id));
      if (!(rec.auth_key == scalar_mul(params_, private_key_, rec.id_point))) {
        throw Error(Errc::DecodeError, "authentication key for " + id + " was not issued by this authority");
      }
      rec.issued_at = TimestampMs{issued};
      if (lifetime != "-") {
        try {
          rec.lifetime_ms = std::stoull(lifetime);
        } catch (const std::logic_error&) {
          throw Error(Errc::DecodeError, "bad lifetime " + lifetime);
        }
      }
      registry[id] = std::move(rec);
    } else if (kind == "C") {
      std::string reason;
      std::uint64_t at = 0;
      if (!(fields >> at >> reason)) throw Error(Errc::DecodeError, "malformed CRL line");
      RevocationReason r;
      if (reason == "compromise") {
        r = RevocationReason::Compromise;
      } else if (reason == "expiry") {
        r = RevocationReason::Expiry;
      } else if (reason == "policy") {
        r = RevocationReason::Policy;
      } else {
        throw Error(Errc::DecodeError, "unknown revocation reason " + reason);
      }
      crl.push_back(CrlEntry{id, TimestampMs{at}, r});
    } else {
      throw Error(Errc::DecodeError, "unknown record kind " + kind);
    }
  }
  registry_ = std::move(registry);
  crl_ = std::move(crl);
  sessions_.clear();
  replay_cache_.clear();
}

}  // namespace caaas
