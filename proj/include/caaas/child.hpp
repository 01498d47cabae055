#pragma once

// The client C. Registers for an ID-based authentication key, runs the
// mutual-authentication initiator side, and takes either role in the
// Custodian-relayed key exchange with another device. No operation performs
// more than three scalar multiplications and none needs a pairing.

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "caaas/crypto.hpp"
#include "caaas/curve.hpp"
#include "caaas/wire.hpp"

namespace caaas {

struct ChildConfig {
  std::uint64_t freshness_window_ms = kDefaultFreshnessWindowMs;
};

class Child {
 public:
  Child(std::string id, const wire::Announcement& announcement, SymmetricKey registration_key, Rng rng,
        ClockFn clock, ChildConfig config = {});

  Child(Child&&) noexcept = default;
  Child& operator=(Child&&) noexcept = default;

  const std::string& id() const { return id_; }
  const CurveParams& params() const { return params_; }

  wire::RegistrationRequest request_registration() const { return wire::RegistrationRequest{id_}; }

  // Opens the sealed A_ID and holds it provisionally until an authentication
  // round succeeds with it. Error{AuthFailure} if the seal does not verify
  // under the registration channel key.
  void accept_registration(const wire::RegistrationResponse& resp);

  using Exchange = std::function<wire::AuthResponse(const wire::AuthRequest&)>;
  // accept_registration followed by one full authentication round through
  // `exchange`. Any failure of that round discards the key and throws
  // Error{ConfirmationFailure}. Returns the session key agreed in the round.
  SymmetricKey confirm_auth_key(const wire::RegistrationResponse& resp, const Exchange& exchange);

  // R_C = r x P, T_1 = now, M_C = R_C + H2(T_1) x A_ID, R_C* = (x_C mod n) x P.
  // Error{NotRegistered} without a key.
  wire::AuthRequest auth_init();

  // Recovers R_S' = M_S - H2(T_2) x A_ID and accepts iff
  // (H3(x_Q, x_C, x_S') + x_S') x P = M_k. Errors: NoPendingAuth,
  // StaleTimestamp, KeyMismatch (ConfirmationFailure while the key is still
  // provisional).
  SymmetricKey auth_finish(const wire::AuthResponse& resp);

  // Applies an authority refusal to the pending round. Returns the error the
  // child reports: the refusal code, or ConfirmationFailure while the key is
  // provisional (the key is then discarded).
  Errc handle_refusal(const wire::Refusal& refusal);

  // Proposes k_ij for `peer_id` (latest proposal wins). Error{NoCaSession}.
  wire::PeerInit peer_init(const std::string& peer_id);

  struct Challenge {
    std::string initiator;
    wire::PeerChallenge message;
  };
  // Responder: learns (C_i, k_ij) from the relay and challenges C_i with a
  // fresh N_j. Errors: NoCaSession, AuthFailure.
  Challenge peer_respond(const wire::PeerRelay& relay);

  struct Proof {
    std::string responder;
    wire::PeerProof message;
  };
  // Initiator: opens the challenge under a proposed key and returns N_j
  // re-sealed. Errors: AuthFailure, IdentityMismatch.
  Proof peer_accept(const wire::PeerChallenge& challenge);

  // Responder: consumes the pending challenge for `from_id` and accepts iff the
  // proof carries N_j. Errors: NoPendingChallenge, AuthFailure, NonceMismatch.
  void peer_verify(const wire::PeerProof& proof, const std::string& from_id);

  bool has_auth_key() const { return auth_key_.has_value(); }
  bool registered() const { return auth_key_.has_value() && !provisional_; }
  bool auth_pending() const { return pending_.has_value(); }
  const std::optional<CurvePoint>& auth_key() const { return auth_key_; }
  const std::optional<SessionKey>& ca_session() const { return ca_session_; }
  void drop_ca_session() { ca_session_.reset(); }

  std::optional<SymmetricKey> peer_key(const std::string& peer) const;
  bool peer_established(const std::string& peer) const;
  bool has_pending_challenge(const std::string& peer) const { return challenges_.count(peer) != 0; }
  bool has_proposal(const std::string& peer) const { return proposals_.count(peer) != 0; }

 private:
  struct PendingAuth {
    BigInt x_c;
    TimestampMs t1;
  };
  struct PeerSession {
    SymmetricKey key;
    bool established = false;
  };

  void discard_provisional_key();
  const SessionKey& require_ca_session() const;

  std::string id_;
  CurveParams params_;
  CurvePoint server_public_key_;
  SymmetricKey registration_key_;
  Rng rng_;
  ClockFn clock_;
  ChildConfig config_;
  Bytes x_q_;

  std::optional<CurvePoint> auth_key_;
  bool provisional_ = false;
  std::optional<PendingAuth> pending_;
  std::optional<SessionKey> ca_session_;

  NonceGenerator nonces_;
  std::map<std::string, SymmetricKey> proposals_;
  std::map<std::string, NonceValue> challenges_;
  std::map<std::string, PeerSession> peers_;
};

}  // namespace caaas
