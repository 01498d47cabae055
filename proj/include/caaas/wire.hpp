#pragma once

// Byte encodings for every protocol message. One tag byte, then fields in a
// fixed order: integers big-endian, identities as u8 length ‖ UTF-8 (1-64
// bytes), points in the uncompressed curve encoding, sealed boxes in their
// nonce ‖ length ‖ ciphertext ‖ tag form.

#include <string>
#include <variant>
#include <vector>

#include "caaas/crypto.hpp"
#include "caaas/curve.hpp"
#include "caaas/error.hpp"
#include "caaas/integrity.hpp"

namespace caaas::wire {

enum class Tag : std::uint8_t {
  Announcement = 0x01,
  RegistrationRequest = 0x02,
  RegistrationResponse = 0x03,
  AuthRequest = 0x04,
  AuthResponse = 0x05,
  PeerInit = 0x06,
  PeerRelay = 0x07,
  PeerChallenge = 0x08,
  PeerProof = 0x09,
  Refusal = 0x0a,
  TrustNotice = 0x0b,
};

inline constexpr std::size_t kMaxIdentityBytes = 64;

// {E_p(a,b), P, K_S^U, hash ids}
struct Announcement {
  CurveParams params;
  CurvePoint public_key;
  std::vector<std::string> hash_ids;
  friend bool operator==(const Announcement&, const Announcement&) = default;
};

struct RegistrationRequest {
  std::string id;
  friend bool operator==(const RegistrationRequest&, const RegistrationRequest&) = default;
};

// A_{ID_C} sealed under the device's registration channel key.
struct RegistrationResponse {
  SealedBox sealed_auth_key;
  friend bool operator==(const RegistrationResponse&, const RegistrationResponse&) = default;
};

// {ID_C, M_C, R_C*, T_1}
struct AuthRequest {
  std::string id;
  CurvePoint m_c;
  CurvePoint r_c_star;
  TimestampMs t1;
  friend bool operator==(const AuthRequest&, const AuthRequest&) = default;
};

// {M_S, M_k, T_2}
struct AuthResponse {
  CurvePoint m_s;
  CurvePoint m_k;
  TimestampMs t2;
  friend bool operator==(const AuthResponse&, const AuthResponse&) = default;
};

// C_i -> S: target identity, proposed k_ij and N_i, each sealed under k_iS.
struct PeerInit {
  SealedBox e_target;
  SealedBox e_key;
  SealedBox e_nonce;
  friend bool operator==(const PeerInit&, const PeerInit&) = default;
};

// S -> C_j: initiator identity and k_ij re-sealed under k_jS.
struct PeerRelay {
  SealedBox e_initiator;
  SealedBox e_key;
  friend bool operator==(const PeerRelay&, const PeerRelay&) = default;
};

// C_j -> C_i: responder identity and N_j sealed under k_ij.
struct PeerChallenge {
  SealedBox e_responder;
  SealedBox e_nonce;
  friend bool operator==(const PeerChallenge&, const PeerChallenge&) = default;
};

// C_i -> C_j: N_j sealed under k_ij.
struct PeerProof {
  SealedBox e_nonce;
  friend bool operator==(const PeerProof&, const PeerProof&) = default;
};

// A role's refusal to continue, carrying the error that stopped it.
struct Refusal {
  Errc code = Errc::InvalidArgument;
  std::string subject;
  TrustState state = TrustState::Untrusted;
  friend bool operator==(const Refusal&, const Refusal&) = default;
};

using ProtocolMessage = std::variant<Announcement, RegistrationRequest, RegistrationResponse, AuthRequest,
                                     AuthResponse, PeerInit, PeerRelay, PeerChallenge, PeerProof, Refusal,
                                     TrustNotice>;

std::string_view message_name(const ProtocolMessage& msg);
Tag message_tag(const ProtocolMessage& msg);

// Deterministic encoding. Throws Error{InvalidArgument} on identities outside
// 1-64 bytes of UTF-8.
Bytes encode(const CurveParams& params, const ProtocolMessage& msg);

// Never crashes on arbitrary input: returns a message or throws
// Error{DecodeError}. Points are validated against `params`; an Announcement
// carries and validates its own curve.
ProtocolMessage decode(const CurveParams& params, ByteView bytes);
Announcement decode_announcement(ByteView bytes);

bool valid_identity(std::string_view id);

// One hex-encoded message per line.
std::string to_transcript(std::span<const Bytes> messages);
std::vector<Bytes> parse_transcript(std::string_view text);

}  // namespace caaas::wire
