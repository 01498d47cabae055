#include "caaas/child.hpp"

#include <sodium.h>

#include "caaas/error.hpp"

namespace caaas {

namespace {

Bytes nonce_bytes(const NonceValue& n) { return Bytes(n.bytes.begin(), n.bytes.end()); }

}  // namespace

Child::Child(std::string id, const wire::Announcement& announcement, SymmetricKey registration_key, Rng rng,
             ClockFn clock, ChildConfig config)
    : id_(std::move(id)),
      params_(announcement.params),
      server_public_key_(announcement.public_key),
      registration_key_(registration_key),
      rng_(std::move(rng)),
      clock_(std::move(clock)),
      config_(config) {
  if (!wire::valid_identity(id_)) throw Error(Errc::InvalidArgument, "identity must be 1-64 bytes of UTF-8");
  x_q_ = to_fixed(hash_to_point(params_, to_bytes(id_)).x(), params_.field_bytes());
}

void Child::accept_registration(const wire::RegistrationResponse& resp) {
  Bytes encoded = open(registration_key_, resp.sealed_auth_key);
  CurvePoint a;
  try {
    a = decode_point(params_, encoded);
  } catch (const Error&) {
    throw Error(Errc::AuthFailure, "registration payload is not a curve point");
  }
  if (a.is_infinity()) throw Error(Errc::AuthFailure, "registration payload is the identity");
  auth_key_ = a;
  provisional_ = true;
  pending_.reset();
  ca_session_.reset();
}

SymmetricKey Child::confirm_auth_key(const wire::RegistrationResponse& resp, const Exchange& exchange) {
  accept_registration(resp);
  try {
    return auth_finish(exchange(auth_init()));
  } catch (const Error& e) {
    if (e.code() == Errc::ConfirmationFailure) throw;
    discard_provisional_key();
    throw Error(Errc::ConfirmationFailure, e.what());
  }
}

void Child::discard_provisional_key() {
  if (provisional_) {
    auth_key_.reset();
    provisional_ = false;
  }
  pending_.reset();
}

wire::AuthRequest Child::auth_init() {
  if (!auth_key_) throw Error(Errc::NotRegistered, id_);
  const Scalar r = random_nonzero_scalar(params_, rng_);
  CurvePoint r_c = scalar_mul_base(params_, r);
  const TimestampMs t1 = clock_();
  const Scalar t = hash_timestamp(params_, t1.ms);
  CurvePoint m_c = point_add(params_, r_c, scalar_mul(params_, t, *auth_key_));
  CurvePoint r_c_star = scalar_mul_base(params_, Scalar::reduce(params_, r_c.x()));
  pending_ = PendingAuth{r_c.x(), t1};
  return wire::AuthRequest{id_, m_c, r_c_star, t1};
}

SymmetricKey Child::auth_finish(const wire::AuthResponse& resp) {
  if (!pending_) throw Error(Errc::NoPendingAuth, id_);
  const PendingAuth pending = *pending_;
  pending_.reset();

  auto fail = [this](Errc code, const char* why) -> Error {
    if (provisional_) {
      discard_provisional_key();
      return Error(Errc::ConfirmationFailure, std::string(to_string(code)) + ": " + why);
    }
    return Error(code, why);
  };

  if (!check_freshness(resp.t2, clock_(), config_.freshness_window_ms)) {
    throw fail(Errc::StaleTimestamp, "server timestamp outside window");
  }
  const Scalar t2 = hash_timestamp(params_, resp.t2.ms);
  CurvePoint r_s = point_sub(params_, resp.m_s, scalar_mul(params_, t2, *auth_key_));
  if (r_s.is_infinity()) throw fail(Errc::KeyMismatch, "recovered R_S is the identity");

  const std::size_t w = params_.field_bytes();
  SessionKey session = derive_session_key(params_, x_q_, to_fixed(pending.x_c, w), to_fixed(r_s.x(), w));
  CurvePoint m_k = scalar_mul_base(params_, Scalar::reduce(params_, session.k.value() + r_s.x()));
  if (!(m_k == resp.m_k)) throw fail(Errc::KeyMismatch, "M_k does not match");

  provisional_ = false;
  ca_session_ = session;
  return session.key;
}

Errc Child::handle_refusal(const wire::Refusal& refusal) {
  pending_.reset();
  if (provisional_) {
    discard_provisional_key();
    return Errc::ConfirmationFailure;
  }
  return refusal.code;
}

const SessionKey& Child::require_ca_session() const {
  if (!ca_session_) throw Error(Errc::NoCaSession, id_);
  return *ca_session_;
}

wire::PeerInit Child::peer_init(const std::string& peer_id) {
  const SymmetricKey& k_is = require_ca_session().key;
  if (!wire::valid_identity(peer_id) || peer_id == id_) throw Error(Errc::InvalidArgument, "invalid peer id");
  SymmetricKey k_ij = SymmetricKey::random(rng_);
  NonceValue n_i = nonces_.next(rng_);
  wire::PeerInit msg{seal(k_is, to_bytes(peer_id), rng_), seal(k_is, k_ij.view(), rng_),
                     seal(k_is, nonce_bytes(n_i), rng_)};
  proposals_.insert_or_assign(peer_id, k_ij);
  return msg;
}

Child::Challenge Child::peer_respond(const wire::PeerRelay& relay) {
  const SymmetricKey& k_js = require_ca_session().key;
  std::string initiator = to_string(open(k_js, relay.e_initiator));
  Bytes key_raw = open(k_js, relay.e_key);
  if (key_raw.size() != SymmetricKey::kSize || !wire::valid_identity(initiator)) {
    sodium_memzero(key_raw.data(), key_raw.size());
    throw Error(Errc::AuthFailure, "malformed relay contents");
  }
  SymmetricKey k_ij = SymmetricKey::from_bytes(key_raw);
  sodium_memzero(key_raw.data(), key_raw.size());

  NonceValue n_j = nonces_.next(rng_);
  Challenge out{initiator, wire::PeerChallenge{seal(k_ij, to_bytes(id_), rng_), seal(k_ij, nonce_bytes(n_j), rng_)}};
  challenges_.insert_or_assign(initiator, n_j);
  peers_.insert_or_assign(initiator, PeerSession{k_ij, false});
  return out;
}

Child::Proof Child::peer_accept(const wire::PeerChallenge& challenge) {
  for (auto it = proposals_.begin(); it != proposals_.end(); ++it) {
    const auto& [peer, key] = *it;
    std::string responder;
    try {
      responder = to_string(open(key, challenge.e_responder));
    } catch (const Error&) {
      continue;
    }
    if (responder != peer) throw Error(Errc::IdentityMismatch, "challenge from " + responder + ", expected " + peer);
    Bytes n_j = open(key, challenge.e_nonce);
    Proof out{peer, wire::PeerProof{seal(key, n_j, rng_)}};
    sodium_memzero(n_j.data(), n_j.size());
    peers_.insert_or_assign(peer, PeerSession{key, true});
    proposals_.erase(it);
    return out;
  }
  throw Error(Errc::AuthFailure, "challenge does not open under any proposed key");
}

void Child::peer_verify(const wire::PeerProof& proof, const std::string& from_id) {
  auto it = challenges_.find(from_id);
  if (it == challenges_.end()) throw Error(Errc::NoPendingChallenge, from_id);
  const NonceValue expected = it->second;
  challenges_.erase(it);

  auto session = peers_.find(from_id);
  if (session == peers_.end()) throw Error(Errc::NoPendingChallenge, from_id);
  Bytes got;
  try {
    got = open(session->second.key, proof.e_nonce);
  } catch (const Error&) {
    peers_.erase(session);
    throw;
  }
  if (got != nonce_bytes(expected)) {
    peers_.erase(session);
    throw Error(Errc::NonceMismatch, from_id);
  }
  session->second.established = true;
}

std::optional<SymmetricKey> Child::peer_key(const std::string& peer) const {
  auto it = peers_.find(peer);
  if (it == peers_.end()) return std::nullopt;
  return it->second.key;
}

bool Child::peer_established(const std::string& peer) const {
  auto it = peers_.find(peer);
  return it != peers_.end() && it->second.established;
}

}  // namespace caaas
