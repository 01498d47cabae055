#pragma once

// Exhaustive oracles for small curves. They exist to check the fast paths in
// curve.hpp and refuse to run on anything cryptographically sized.

#include <vector>

#include "caaas/curve.hpp"

namespace caaas {

// Solves x x base = target by walking base, 2 base, ... with point_add.
// Requires n <= 2^20 (Error{OracleRefused}); Error{NotInSubgroup} when no x
// exists. `base` defaults to the curve's base point.
Scalar brute_force_dlp(const CurveParams& params, const CurvePoint& target);
Scalar brute_force_dlp(const CurveParams& params, const CurvePoint& target, const CurvePoint& base);

// Every solution of y^2 = x^3 + ax + b plus O, ordered by (x, y) with O first.
// Requires p <= 2^16 (Error{OracleRefused}).
std::vector<CurvePoint> enumerate_points(const CurveParams& params);

}  // namespace caaas
