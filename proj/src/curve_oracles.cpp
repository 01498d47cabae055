#include "caaas/curve_oracles.hpp"

#include "caaas/error.hpp"

namespace caaas {

Scalar brute_force_dlp(const CurveParams& params, const CurvePoint& target) {
  return brute_force_dlp(params, target, params.base());
}

Scalar brute_force_dlp(const CurveParams& params, const CurvePoint& target, const CurvePoint& base) {
  if (params.n() > (BigInt(1) << 20)) throw Error(Errc::OracleRefused, "order too large for brute force");
  if (!params.contains(target) || !params.contains(base)) throw Error(Errc::MismatchedCurve);
  CurvePoint acc = CurvePoint::infinity();
  const unsigned long n = params.n().get_ui();
  for (unsigned long x = 0; x < n; ++x) {
    if (acc == target) return Scalar::canonical(params, BigInt(x));
    acc = point_add(params, acc, base);
  }
  throw Error(Errc::NotInSubgroup, "target is not a multiple of the base");
}

std::vector<CurvePoint> enumerate_points(const CurveParams& params) {
  if (params.p() > (BigInt(1) << 16)) throw Error(Errc::OracleRefused, "field too large to enumerate");
  const long p = params.p().get_si();
  const long a = params.a().get_si();
  const long b = params.b().get_si();
  std::vector<CurvePoint> out{CurvePoint::infinity()};
  for (long x = 0; x < p; ++x) {
    long rhs = ((x * x % p) * x % p + a * x % p + b) % p;
    for (long y = 0; y < p; ++y) {
      if (y * y % p == rhs) out.push_back(params.point(BigInt(x), BigInt(y)));
    }
  }
  return out;
}

}  // namespace caaas
