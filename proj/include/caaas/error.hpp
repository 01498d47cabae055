#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace caaas {

// Every failure the library reports. Protocol refusals travel on the wire as
// the numeric value, so existing values must never be renumbered.
enum class Errc : unsigned char {
  InvalidArgument = 1,
  InvalidParams,
  InvalidPoint,
  InvalidScalar,
  MismatchedCurve,
  HashToPointFailure,
  OracleRefused,
  NotInSubgroup,
  WidthMismatch,
  AuthFailure,
  DecodeError,
  UnknownDevice,
  IntegrityMismatch,
  DuplicateRegistration,
  StaleTimestamp,
  ReplayDetected,
  BadProof,
  Revoked,
  Expired,
  NotRegistered,
  NoSession,
  TargetRevoked,
  UnknownId,
  ConfirmationFailure,
  KeyMismatch,
  NoCaSession,
  IdentityMismatch,
  NonceMismatch,
  NoPendingChallenge,
  NonCanonicalProfile,
  UntrustedProvenance,
  DeviceUntrusted,
  UnknownNode,
  NoRoute,
  UnknownLink,
  CapabilityNotGranted,
  UnknownProfile,
  IoError,
  ConfigError,
  NoPendingAuth,
  Timeout,
};

std::string_view to_string(Errc code) noexcept;

// Parses the names produced by to_string; returns false for unknown names.
bool parse_errc(std::string_view name, Errc& out) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code) {}
  explicit Error(Errc code) : Error(code, "") {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace caaas
