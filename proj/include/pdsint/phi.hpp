#pragma once

#include <cmath>
#include <limits>

#include "pdsint/errors.hpp"

namespace pdsint {

/// phi(x) = (1 - e^{-x}) / x, phi(0) = 1, phi(+inf) = 0.
///
/// Below 1e-5 the truncated series 1 - x/2 + x^2/6 - x^3/24 is used; above it
/// expm1 keeps the numerator free of cancellation. The result lies in (0, 1]
/// for finite x.
inline double phi(double x) {
    if (std::isnan(x) || x < 0.0) throw ModelError("phi: argument must be nonnegative");
    if (x == std::numeric_limits<double>::infinity()) return 0.0;
    if (x < 1e-5) return 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
    return -std::expm1(-x) / x;
}

}  // namespace pdsint
