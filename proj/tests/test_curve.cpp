#include <gtest/gtest.h>

#include "caaas/bytes.hpp"
#include "caaas/crypto.hpp"
#include "caaas/curve.hpp"
#include "caaas/curve_oracles.hpp"
#include "caaas/error.hpp"
#include "toy_oracle.hpp"

using namespace caaas;

namespace {

const CurveParams& t17() {
  static const CurveParams c = curve_preset("toy17");
  return c;
}
const CurveParams& p256() {
  static const CurveParams c = curve_preset("prod256");
  return c;
}

toy::Pt as_toy(const CurvePoint& q) {
  if (q.is_infinity()) return toy::Pt{};
  return toy::at(q.x().get_si(), q.y().get_si());
}

CurvePoint from_toy(const toy::Pt& q) {
  if (q.inf) return CurvePoint::infinity();
  return t17().point(q.x, q.y);
}

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::InvalidArgument;
}

}  // namespace

TEST(Curve, ToyMultiplesMatchTable) {
  for (std::size_t k = 1; k <= toy::kToyMultiples.size(); ++k) {
    auto [x, y] = toy::kToyMultiples[k - 1];
    CurvePoint q = scalar_mul_base(t17(), Scalar::reduce(t17(), k));
    EXPECT_EQ(q, t17().point(x, y)) << "k=" << k;
    EXPECT_EQ(toy::kToy17.mul(static_cast<std::int64_t>(k), toy::kToyG), toy::at(x, y)) << "oracle k=" << k;
  }
  EXPECT_TRUE(scalar_mul(t17(), BigInt(19), t17().base()).is_infinity());
  EXPECT_TRUE(scalar_mul_base(t17(), Scalar::reduce(t17(), 0)).is_infinity());
}

TEST(Curve, AdditionAgreesWithOracleOnAllPairs) {
  auto pts = toy::kToy17.points();
  ASSERT_EQ(pts.size(), 19u);
  for (const auto& l : pts)
    for (const auto& r : pts) {
      EXPECT_EQ(as_toy(point_add(t17(), from_toy(l), from_toy(r))), toy::kToy17.add(l, r));
    }
}

TEST(Curve, ScalarMulAgreesWithOracleIncludingNegatives) {
  for (const auto& q : toy::kToy17.points())
    for (std::int64_t k = -40; k <= 40; ++k) {
      EXPECT_EQ(as_toy(scalar_mul(t17(), BigInt(static_cast<long>(k)), from_toy(q))), toy::kToy17.mul(k, q));
    }
}

TEST(Curve, EnumerateMatchesOracle) {
  auto pts = enumerate_points(t17());
  auto ref = toy::kToy17.points();
  ASSERT_EQ(pts.size(), ref.size());
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(as_toy(pts[i]), ref[i]);
  // Hasse: |#E - (p + 1)| <= 2 sqrt(p).
  long diff = static_cast<long>(pts.size()) - 18;
  EXPECT_LE(diff * diff, 4 * 17);
}

TEST(Curve, GroupLaws) {
  Rng rng(5);
  const auto& c = p256();
  for (int i = 0; i < 10; ++i) {
    CurvePoint a = scalar_mul_base(c, random_nonzero_scalar(c, rng));
    CurvePoint b = scalar_mul_base(c, random_nonzero_scalar(c, rng));
    CurvePoint d = scalar_mul_base(c, random_nonzero_scalar(c, rng));
    EXPECT_EQ(point_add(c, a, b), point_add(c, b, a));
    EXPECT_EQ(point_add(c, point_add(c, a, b), d), point_add(c, a, point_add(c, b, d)));
    EXPECT_TRUE(point_add(c, a, negate(c, a)).is_infinity());
    EXPECT_EQ(point_sub(c, point_add(c, a, b), b), a);
    EXPECT_TRUE(c.contains(a));
    Scalar s = random_nonzero_scalar(c, rng);
    Scalar t = random_nonzero_scalar(c, rng);
    EXPECT_EQ(scalar_mul(c, Scalar::reduce(c, s.value() + t.value()), a),
              point_add(c, scalar_mul(c, s, a), scalar_mul(c, t, a)));
  }
  EXPECT_TRUE(scalar_mul(c, c.n(), c.base()).is_infinity());
}

TEST(Curve, P256KnownMultiple) {
  // 2G on P-256.
  CurvePoint two = scalar_mul(p256(), BigInt(2), p256().base());
  EXPECT_EQ(two.x(), BigInt("0x7cf27b188d034f7e8a52380304b51ac3c08969e277f21b35a60b48fc47669978"));
  EXPECT_EQ(two.y(), BigInt("0x07775510db8ed040293d9ac69f7430dbba7dade63ce982299e04b79d227873d1"));
}

TEST(Curve, DlpInvertsScalarMul) {
  for (long k = 0; k < 19; ++k) {
    CurvePoint q = scalar_mul_base(t17(), Scalar::reduce(t17(), k));
    EXPECT_EQ(brute_force_dlp(t17(), q).value(), BigInt(k));
  }
  EXPECT_EQ(code_of([] { brute_force_dlp(p256(), p256().base()); }), Errc::OracleRefused);
  EXPECT_EQ(code_of([] { enumerate_points(p256()); }), Errc::OracleRefused);
}

TEST(Curve, SqrtModBothResidueClasses) {
  for (long p : {17L, 13L, 23L, 41L}) {
    for (long v = 0; v < p; ++v) {
      BigInt root;
      bool residue = false;
      for (long y = 0; y < p; ++y) residue |= (y * y) % p == v;
      ASSERT_EQ(sqrt_mod(BigInt(v), BigInt(p), root), residue) << p << " " << v;
      if (residue) EXPECT_EQ(BigInt(root * root % p), BigInt(v));
    }
  }
}

// Values below were computed by a separate Python implementation of the
// framing and try-and-increment rules.
TEST(Curve, HashToPointGolden) {
  EXPECT_EQ(hash_to_point(t17(), to_bytes("thing-1")), t17().point(9, 1));
  EXPECT_EQ(hash_to_point(t17(), to_bytes("device-42")), t17().point(5, 1));
  EXPECT_EQ(hash_to_point(t17(), to_bytes("a")), t17().point(6, 3));
  CurvePoint q = hash_to_point(p256(), to_bytes("thing-1"));
  EXPECT_EQ(q.x(), BigInt("0x72d922a34326b575d76721f4ee91972d94d420e6f28edba8eb31d6f51ada02d5"));
  EXPECT_EQ(q.y(), BigInt("0x0401537368a252e6af470359e5a16ae639ca5d7749b3b8e81d0937b5dbbf6f56"));
  EXPECT_EQ(code_of([] { hash_to_point(t17(), ByteView{}); }), Errc::InvalidArgument);
}

TEST(Curve, HashTimestampGolden) {
  EXPECT_EQ(hash_timestamp(t17(), 0).value(), BigInt(18));
  EXPECT_EQ(hash_timestamp(t17(), 1700000000000ull).value(), BigInt(3));
  EXPECT_EQ(hash_timestamp(p256(), 0).value(),
            BigInt("0x2047e7c4c4067e878983a60f24f889239abb6e6564ee03ddfdf774b287447808"));
  EXPECT_EQ(hash_timestamp(p256(), 1700000000000ull).value(),
            BigInt("0x5131d7d912fff26ee5b31ff07d674469db7bbb177639b760df989e8512b32d0d"));
}

TEST(Curve, HashToScalarRange) {
  for (std::uint64_t t = 0; t < 500; ++t) {
    Scalar s = hash_timestamp(t17(), t);
    EXPECT_GE(s.value(), 1);
    EXPECT_LT(s.value(), 19);
  }
}

TEST(Curve, PointEncodingRoundTripAndRejects) {
  for (const auto& q : enumerate_points(t17())) {
    Bytes e = encode_point(t17(), q);
    EXPECT_EQ(e.size(), q.is_infinity() ? 1u : 3u);
    EXPECT_EQ(decode_point(t17(), e), q);
  }
  EXPECT_EQ(to_hex(encode_point(t17(), t17().base())), "040501");
  EXPECT_EQ(code_of([] { decode_point(t17(), from_hex("040502")); }), Errc::DecodeError);  // off curve
  EXPECT_EQ(code_of([] { decode_point(t17(), from_hex("041101")); }), Errc::DecodeError);  // x >= p
  EXPECT_EQ(code_of([] { decode_point(t17(), from_hex("0405")); }), Errc::DecodeError);
  EXPECT_EQ(code_of([] { decode_point(t17(), from_hex("020501")); }), Errc::DecodeError);
  CurvePoint g = p256().base();
  EXPECT_EQ(decode_point(p256(), encode_point(p256(), g)), g);
  EXPECT_EQ(encode_point(p256(), g).size(), 65u);
}

TEST(Curve, ScalarEncoding) {
  Scalar s = Scalar::reduce(t17(), -1);
  EXPECT_EQ(s.value(), BigInt(18));
  EXPECT_EQ(decode_scalar(t17(), encode_scalar(t17(), s)), s);
  EXPECT_EQ(code_of([] { Scalar::canonical(t17(), 19); }), Errc::InvalidScalar);
}

TEST(Curve, RejectsBadParams) {
  CurveParams::Spec s = t17().spec();
  s.b = 0;
  s.a = 0;  // singular
  EXPECT_EQ(code_of([&] { CurveParams c(s); }), Errc::InvalidParams);
  s = t17().spec();
  s.n = 18;
  EXPECT_EQ(code_of([&] { CurveParams c(s); }), Errc::InvalidParams);
  s = t17().spec();
  s.gy = 2;
  EXPECT_EQ(code_of([&] { CurveParams c(s); }), Errc::InvalidParams);
  EXPECT_EQ(code_of([] { curve_preset("nope"); }), Errc::UnknownProfile);
}

TEST(Curve, MixedCurvesRejected) {
  EXPECT_EQ(code_of([] { point_add(t17(), t17().base(), p256().base()); }), Errc::MismatchedCurve);
}

TEST(Curve, LoadCurveMatchesPreset) {
  CurveParams c = load_curve("name = toy17\np = 17\na = 2\nb = 2\ngx = 5\ngy = 1\nn = 0x13\ncofactor = 1\n");
  EXPECT_EQ(c.n(), t17().n());
  EXPECT_EQ(c.base().x(), t17().base().x());
}

TEST(Curve, OpCounterCountsScalarMults) {
  reset_op_counters();
  scalar_mul_base(t17(), Scalar::reduce(t17(), 3));
  scalar_mul(t17(), BigInt(5), t17().base());
  EXPECT_EQ(op_counters().scalar_mults, 2u);
  EXPECT_EQ(op_counters().pairings, 0u);
}
