#pragma once

// Short-Weierstrass curves y^2 = x^3 + ax + b over F_p, the group law, and the
// three hash families the protocols use (H1 onto the curve, H2/H3 onto the
// scalar ring).

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "caaas/bytes.hpp"

namespace caaas {

using BigInt = mpz_class;

class CurveParams;

// Either the point at infinity O or an affine (x, y). Points remember which
// curve produced them so that mixing curves is caught.
class CurvePoint {
 public:
  CurvePoint() = default;

  static CurvePoint infinity() { return CurvePoint(); }

  bool is_infinity() const { return infinity_; }
  const BigInt& x() const { return x_; }
  const BigInt& y() const { return y_; }
  std::uint64_t curve_id() const { return curve_id_; }

  friend bool operator==(const CurvePoint& l, const CurvePoint& r) {
    if (l.infinity_ || r.infinity_) return l.infinity_ == r.infinity_;
    return l.curve_id_ == r.curve_id_ && l.x_ == r.x_ && l.y_ == r.y_;
  }

 private:
  friend class CurveParams;
  friend struct PointAccess;

  CurvePoint(BigInt x, BigInt y, std::uint64_t curve_id)
      : infinity_(false), x_(std::move(x)), y_(std::move(y)), curve_id_(curve_id) {}

  bool infinity_ = true;
  BigInt x_;
  BigInt y_;
  std::uint64_t curve_id_ = 0;
};

// An integer in [0, n) where n is the order of the base point.
class Scalar {
 public:
  Scalar() = default;

  // Reduces any integer (including negatives) modulo n.
  static Scalar reduce(const CurveParams& params, const BigInt& v);
  // Throws Error{InvalidScalar} unless 0 <= v < n.
  static Scalar canonical(const CurveParams& params, const BigInt& v);

  const BigInt& value() const { return value_; }
  bool is_zero() const { return value_ == 0; }

  friend bool operator==(const Scalar& l, const Scalar& r) { return l.value_ == r.value_; }

 private:
  explicit Scalar(BigInt v) : value_(std::move(v)) {}
  BigInt value_ = 0;
};

class CurveParams {
 public:
  struct Spec {
    std::string name;
    BigInt p, a, b, gx, gy, n;
    unsigned long cofactor = 1;
  };

  // Validates everything: p > 3 prime, non-singular, base point on the curve,
  // n prime with n x G = O. Throws Error{InvalidParams}.
  explicit CurveParams(const Spec& spec);

  const std::string& name() const;
  const BigInt& p() const;
  const BigInt& a() const;
  const BigInt& b() const;
  const BigInt& n() const;
  unsigned long cofactor() const;
  const CurvePoint& base() const;
  // Fixed encoding widths in bytes.
  std::size_t field_bytes() const;
  std::size_t scalar_bytes() const;
  std::uint64_t id() const;
  const Spec& spec() const;

  // Throws Error{InvalidPoint} unless (x, y) is canonical and on the curve.
  CurvePoint point(const BigInt& x, const BigInt& y) const;
  bool contains(const CurvePoint& pt) const;

  friend bool operator==(const CurveParams& l, const CurveParams& r) { return l.id() == r.id(); }

 private:
  struct Data;
  std::shared_ptr<const Data> data_;
};

// Group law.
CurvePoint negate(const CurveParams& params, const CurvePoint& pt);
CurvePoint point_add(const CurveParams& params, const CurvePoint& lhs, const CurvePoint& rhs);
CurvePoint point_sub(const CurveParams& params, const CurvePoint& lhs, const CurvePoint& rhs);
CurvePoint scalar_mul(const CurveParams& params, const Scalar& s, const CurvePoint& pt);
// Multiplies by an arbitrary integer without reducing it first; negative
// multipliers negate the result.
CurvePoint scalar_mul(const CurveParams& params, const BigInt& s, const CurvePoint& pt);
inline CurvePoint scalar_mul_base(const CurveParams& params, const Scalar& s) {
  return scalar_mul(params, s, params.base());
}

// Instrumentation for the lightweight-client bound. Counters are per thread.
// The library contains no pairing operation, so `pairings` is never
// incremented; it exists so callers can assert that.
struct OpCounters {
  std::uint64_t scalar_mults = 0;
  std::uint64_t pairings = 0;
};
OpCounters& op_counters();
void reset_op_counters();

// H1: try-and-increment onto the order-n subgroup. Throws
// Error{InvalidArgument} on empty id and Error{HashToPointFailure} after 1000
// failed counters.
CurvePoint hash_to_point(const CurveParams& params, ByteView id);

// H2/H3: digest reduced into [1, n-1].
Scalar hash_to_scalar(const CurveParams& params, std::string_view domain_tag,
                      std::span<const Bytes> parts);

inline constexpr std::string_view kH1Tag = "caaas/H1/sha256-try-increment";
inline constexpr std::string_view kH2Tag = "caaas/H2/sha512-mod-n";
inline constexpr std::string_view kH3Tag = "caaas/H3/sha512-mod-n";

// t = H2(T) for a millisecond timestamp.
Scalar hash_timestamp(const CurveParams& params, std::uint64_t timestamp_ms);

// Modular square root in F_p; returns false when v is a non-residue.
bool sqrt_mod(const BigInt& v, const BigInt& p, BigInt& root);

// Fixed-width big-endian integers. to_fixed throws Error{WidthMismatch} if the
// value does not fit.
Bytes to_fixed(const BigInt& v, std::size_t width);
BigInt from_bytes(ByteView data);

// Uncompressed point encoding: 0x04 ‖ x ‖ y at field width; O is 0x00.
Bytes encode_point(const CurveParams& params, const CurvePoint& pt);
// Rejects wrong lengths, unknown tags, coordinates >= p and off-curve points
// with Error{DecodeError}.
CurvePoint decode_point(const CurveParams& params, ByteView data);
std::size_t encoded_point_size(const CurveParams& params, std::uint8_t tag);

Bytes encode_scalar(const CurveParams& params, const Scalar& s);
Scalar decode_scalar(const CurveParams& params, ByteView data);

// Built-in presets: "toy17" and "prod256". Throws Error{UnknownProfile}.
CurveParams curve_preset(std::string_view name);
// Parses the key=value curve format (name, p, a, b, gx, gy, n, cofactor; hex
// integers with 0x prefix or decimal).
CurveParams load_curve(std::string_view config_text);

}  // namespace caaas
