#pragma once

#include <cmath>
#include <numbers>

#include "gwave/model.hpp"

namespace gwave {

namespace detail {

// Sign of d/dx [sin(x)/x], i.e. the sign of x cos x - sin x.
inline double sinc_slope_sign_fn(double x) { return x * std::cos(x) - std::sin(x); }

// The unique root of tan x = x in ((k - 1/2) pi, (k + 1/2) pi), k >= 1,
// found by bisection on the sign of the derivative of sin(x)/x.
inline double sinc_stationary_point(long k) {
  double lo = (static_cast<double>(k) - 0.5) * std::numbers::pi;
  double hi = (static_cast<double>(k) + 0.5) * std::numbers::pi;
  const double f_lo = sinc_slope_sign_fn(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = sinc_slope_sign_fn(mid);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// inf over x in [a, infinity) of sign * sin(x) / x, for sign = +1 or -1.
///
/// Candidates are the endpoint a and the stationary points of sin(x)/x
/// (roots of tan x = x) to the right of a. The walk over stationary points
/// stops once the envelope 1/x drops below the magnitude of the best
/// negative value found, since no later point can beat it.
inline double inf_sinc(double a, int sign) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw InvariantViolation("inf_sinc needs a finite left endpoint a > 0");
  }
  if (sign != 1 && sign != -1) throw InvariantViolation("inf_sinc sign must be +1 or -1");
  const double s = static_cast<double>(sign);
  double best = s * std::sin(a) / a;
  long k = std::max(1L, static_cast<long>(std::floor(a / std::numbers::pi + 0.5)));
  for (;; ++k) {
    const double x = detail::sinc_stationary_point(k);
    if (x >= a) {
      const double v = s * std::sin(x) / x;
      if (v < best) best = v;
    }
    const double next_left = (static_cast<double>(k) + 0.5) * std::numbers::pi;
    if (best < 0.0 && 1.0 / next_left <= -best) break;
  }
  return best;
}

}  // namespace gwave
