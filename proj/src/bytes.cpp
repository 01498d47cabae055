#include "caaas/bytes.hpp"

#include <array>

#include "caaas/error.hpp"

namespace caaas {

namespace {

constexpr std::array<Errc, 41> kAllCodes = {
    Errc::InvalidArgument,   Errc::InvalidParams,        Errc::InvalidPoint,
    Errc::InvalidScalar,     Errc::MismatchedCurve,      Errc::HashToPointFailure,
    Errc::OracleRefused,     Errc::NotInSubgroup,        Errc::WidthMismatch,
    Errc::AuthFailure,       Errc::DecodeError,          Errc::UnknownDevice,
    Errc::IntegrityMismatch, Errc::DuplicateRegistration, Errc::StaleTimestamp,
    Errc::ReplayDetected,    Errc::BadProof,             Errc::Revoked,
    Errc::Expired,           Errc::NotRegistered,        Errc::NoSession,
    Errc::TargetRevoked,     Errc::UnknownId,            Errc::ConfirmationFailure,
    Errc::KeyMismatch,       Errc::NoCaSession,          Errc::IdentityMismatch,
    Errc::NonceMismatch,     Errc::NoPendingChallenge,   Errc::NonCanonicalProfile,
    Errc::UntrustedProvenance, Errc::DeviceUntrusted,    Errc::UnknownNode,
    Errc::NoRoute,           Errc::UnknownLink,          Errc::CapabilityNotGranted,
    Errc::UnknownProfile,    Errc::IoError,              Errc::ConfigError,
    Errc::NoPendingAuth,     Errc::Timeout,
};

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::InvalidPoint: return "InvalidPoint";
    case Errc::InvalidScalar: return "InvalidScalar";
    case Errc::MismatchedCurve: return "MismatchedCurve";
    case Errc::HashToPointFailure: return "HashToPointFailure";
    case Errc::OracleRefused: return "OracleRefused";
    case Errc::NotInSubgroup: return "NotInSubgroup";
    case Errc::WidthMismatch: return "WidthMismatch";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::DecodeError: return "DecodeError";
    case Errc::UnknownDevice: return "UnknownDevice";
    case Errc::IntegrityMismatch: return "IntegrityMismatch";
    case Errc::DuplicateRegistration: return "DuplicateRegistration";
    case Errc::StaleTimestamp: return "StaleTimestamp";
    case Errc::ReplayDetected: return "ReplayDetected";
    case Errc::BadProof: return "BadProof";
    case Errc::Revoked: return "Revoked";
    case Errc::Expired: return "Expired";
    case Errc::NotRegistered: return "NotRegistered";
    case Errc::NoSession: return "NoSession";
    case Errc::TargetRevoked: return "TargetRevoked";
    case Errc::UnknownId: return "UnknownId";
    case Errc::ConfirmationFailure: return "ConfirmationFailure";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::NoCaSession: return "NoCaSession";
    case Errc::IdentityMismatch: return "IdentityMismatch";
    case Errc::NonceMismatch: return "NonceMismatch";
    case Errc::NoPendingChallenge: return "NoPendingChallenge";
    case Errc::NonCanonicalProfile: return "NonCanonicalProfile";
    case Errc::UntrustedProvenance: return "UntrustedProvenance";
    case Errc::DeviceUntrusted: return "DeviceUntrusted";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::NoRoute: return "NoRoute";
    case Errc::UnknownLink: return "UnknownLink";
    case Errc::CapabilityNotGranted: return "CapabilityNotGranted";
    case Errc::UnknownProfile: return "UnknownProfile";
    case Errc::IoError: return "IoError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NoPendingAuth: return "NoPendingAuth";
    case Errc::Timeout: return "Timeout";
  }
  return "Unknown";
}

bool parse_errc(std::string_view name, Errc& out) noexcept {
  for (Errc c : kAllCodes) {
    if (to_string(c) == name) {
      out = c;
      return true;
    }
  }
  return false;
}

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::DecodeError, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::DecodeError, "invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint16_t ByteReader::u16() {
  auto b = take(2);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t ByteReader::u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

ByteView ByteReader::take(std::size_t n) {
  if (n > remaining()) throw Error(Errc::DecodeError, "truncated input");
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::peek() const {
  if (done()) throw Error(Errc::DecodeError, "truncated input");
  return data_[pos_];
}

void ByteReader::expect_done() const {
  if (!done()) throw Error(Errc::DecodeError, "trailing bytes");
}

}  // namespace caaas
