#pragma once

// Symmetric primitives shared by the protocol roles: seedable randomness,
// 32-byte keys, authenticated encryption (ChaCha20-Poly1305), session-key
// derivation and timestamp freshness.

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <set>
#include <string_view>

#include "caaas/bytes.hpp"
#include "caaas/curve.hpp"

namespace caaas {

// Deterministic ChaCha20 keystream. Every random choice in the library is
// drawn from one of these so runs replay exactly from a seed. Move-only: each
// simulated node owns its own stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  explicit Rng(const std::array<std::uint8_t, 32>& key);

  Rng(Rng&&) noexcept = default;
  Rng& operator=(Rng&&) noexcept = default;
  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();
  // Uniform in [0, bound); bound must be positive.
  std::uint64_t uniform_below(std::uint64_t bound);
  BigInt uniform_below(const BigInt& bound);
  // Uniform in [0, 1).
  double uniform01();
  // Independent stream derived from this one's key and a label; does not
  // advance this stream.
  Rng fork(std::string_view label) const;

 private:
  void refill();

  std::array<std::uint8_t, 32> key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint8_t, 64> buffer_{};
  std::size_t used_ = 64;
};

// Uniform scalar in [1, n-1].
Scalar random_nonzero_scalar(const CurveParams& params, Rng& rng);

class SymmetricKey {
 public:
  static constexpr std::size_t kSize = 32;

  SymmetricKey() = default;
  explicit SymmetricKey(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}
  // Throws Error{WidthMismatch} unless exactly 32 bytes.
  static SymmetricKey from_bytes(ByteView bytes);
  static SymmetricKey random(Rng& rng);

  SymmetricKey(const SymmetricKey&) = default;
  SymmetricKey& operator=(const SymmetricKey&) = default;
  ~SymmetricKey();

  const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
  ByteView view() const { return bytes_; }
  void wipe();

  friend bool operator==(const SymmetricKey& l, const SymmetricKey& r);

 private:
  std::array<std::uint8_t, kSize> bytes_{};
};

struct NonceValue {
  std::array<std::uint8_t, 16> bytes{};
  friend auto operator<=>(const NonceValue&, const NonceValue&) = default;
};

// Hands out nonces that never repeat for the lifetime of the generator.
class NonceGenerator {
 public:
  NonceValue next(Rng& rng);
  std::size_t issued() const { return issued_.size(); }

 private:
  std::set<NonceValue> issued_;
};

struct TimestampMs {
  std::uint64_t ms = 0;
  friend auto operator<=>(const TimestampMs&, const TimestampMs&) = default;
};

using ClockFn = std::function<TimestampMs()>;

// Settable clock for tests and single-process drivers.
class ManualClock {
 public:
  explicit ManualClock(std::uint64_t start_ms = 0) : now_{start_ms} {}
  TimestampMs now() const { return now_; }
  void set(std::uint64_t ms) { now_.ms = ms; }
  void advance(std::uint64_t ms) { now_.ms += ms; }
  // The returned function reads this clock; it must not outlive it.
  ClockFn reader() const {
    return [this] { return now_; };
  }

 private:
  TimestampMs now_;
};

inline constexpr std::uint64_t kDefaultFreshnessWindowMs = 2000;

// Accepts iff 0 <= now - sent <= window_ms.
bool check_freshness(TimestampMs sent, TimestampMs now, std::uint64_t window_ms);

struct SealedBox {
  static constexpr std::size_t kNonceSize = 12;
  static constexpr std::size_t kTagSize = 16;

  std::array<std::uint8_t, kNonceSize> nonce{};
  Bytes ciphertext;
  std::array<std::uint8_t, kTagSize> tag{};

  friend bool operator==(const SealedBox&, const SealedBox&) = default;
};

// nonce ‖ u32 ciphertext length ‖ ciphertext ‖ tag.
Bytes encode_box(const SealedBox& box);
void append_box(Bytes& out, const SealedBox& box);
SealedBox read_box(ByteReader& in);

SealedBox seal(const SymmetricKey& key, ByteView plaintext, Rng& rng);
// Throws Error{AuthFailure} on a wrong key or any modification.
Bytes open(const SymmetricKey& key, const SealedBox& box);

// The Protocol-3 session secret in both of its forms: the scalar k that
// enters M_k = (k + x_S) x P, and the symmetric key used for sealing.
struct SessionKey {
  Scalar k;
  SymmetricKey key;
};

// k = H3(x_Q, x_C, x_S); key = SHA-256(tag ‖ encode(k)). Each input must be a
// field-width big-endian coordinate (Error{WidthMismatch}).
SessionKey derive_session_key(const CurveParams& params, ByteView x_q, ByteView x_c, ByteView x_s);

}  // namespace caaas
