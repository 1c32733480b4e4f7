#pragma once

// Floating-point helpers shared by the analytic and Monte Carlo layers:
// compensated summation, error-free transformations, and cancellation-free
// evaluation of the trigonometric factors that appear in the per-mode
// moments of the wave-equation stochastic convolution.

#include <cmath>
#include <cstdint>

namespace gwave {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Unevaluated sum hi + lo with |lo| <= ulp(hi) / 2.
struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;
};

inline DoubleDouble two_sum(double a, double b) noexcept {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

inline DoubleDouble two_prod(double a, double b) noexcept {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

namespace detail {

// 2*pi split into three doubles; the sum is exact to about 1e-48.
inline constexpr double kTwoPiHi = 6.283185307179586;
inline constexpr double kTwoPiMid = 2.4492935982947064e-16;
inline constexpr double kTwoPiLo = -5.989539619436679e-33;

// Below this argument the power series are used instead of sin/cos.
inline constexpr double kSeriesThreshold = 1.0;
inline constexpr int kSeriesTerms = 10;

}  // namespace detail

/// Reduces the exact product 2*omega*t modulo 2*pi into [-pi, pi], carrying
/// the result as a double-double. `omega` and `t` are taken as exact inputs.
inline DoubleDouble reduce_phase(double omega, double t) noexcept {
  const DoubleDouble z = two_prod(2.0 * omega, t);
  const double k = std::nearbyint(z.hi / detail::kTwoPiHi);
  if (k == 0.0) return z;
  const DoubleDouble p1 = two_prod(k, detail::kTwoPiHi);
  // z.hi and p1.hi agree to within a factor of two, so this is exact.
  const double head = z.hi - p1.hi;
  double tail = z.lo - p1.lo;
  tail -= k * detail::kTwoPiMid;
  tail -= k * detail::kTwoPiLo;
  return two_sum(head, tail);
}

/// The three trigonometric shapes entering the per-mode moments, evaluated
/// at z = 2*omega*t:
///   sinc            = sin(z) / z
///   one_minus_sinc  = 1 - sin(z) / z
///   one_minus_cos_z = (1 - cos(z)) / z
struct PhaseFactors {
  double z = 0.0;
  double sinc = 1.0;
  double one_minus_sinc = 0.0;
  double one_minus_cos_z = 0.0;
};

inline PhaseFactors phase_factors(double omega, double t) noexcept {
  PhaseFactors out;
  const DoubleDouble zz = two_prod(2.0 * omega, t);
  out.z = zz.hi;
  const double z = zz.hi;
  if (std::abs(z) < detail::kSeriesThreshold) {
    // 1 - sinc z = sum_{k>=1} (-1)^{k+1} z^{2k} / (2k+1)!
    // (1 - cos z)/z = sum_{k>=1} (-1)^{k+1} z^{2k-1} / (2k)!
    const double z2 = z * z;
    double a = 0.0;
    double b = 0.0;
    for (int k = detail::kSeriesTerms; k >= 1; --k) {
      const double f_odd = static_cast<double>((2 * k) * (2 * k + 1));
      const double f_even = static_cast<double>((2 * k - 1) * (2 * k));
      a = (1.0 - z2 * a) / f_odd;
      b = (1.0 - z2 * b) / f_even;
    }
    out.one_minus_sinc = z2 * a;
    out.sinc = 1.0 - out.one_minus_sinc;
    out.one_minus_cos_z = z * b;
    return out;
  }
  const DoubleDouble r = reduce_phase(omega, t);
  const double sin_z = std::sin(r.hi) + std::cos(r.hi) * r.lo;
  const double half = 0.5 * r.hi;
  const double sin_half = std::sin(half) + std::cos(half) * (0.5 * r.lo);
  out.sinc = sin_z / z;
  out.one_minus_sinc = 1.0 - out.sinc;
  out.one_minus_cos_z = 2.0 * sin_half * sin_half / z;
  return out;
}

/// sin(2*omega*t) and cos(2*omega*t) with exact-product range reduction.
struct SinCos {
  double sin = 0.0;
  double cos = 1.0;
};

inline SinCos sincos_phase(double omega, double t) noexcept {
  const DoubleDouble r = reduce_phase(omega, t);
  const double s = std::sin(r.hi);
  const double c = std::cos(r.hi);
  return {s + c * r.lo, c - s * r.lo};
}

}  // namespace gwave
