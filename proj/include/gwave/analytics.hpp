#pragma once

// Closed-form second-order structure of the spectral Galerkin
// approximations X^{I_N} = (X^{I_N,1}, X^{I_N,2}) and the analytic lower
// bounds on their weak errors.
//
// Coordinates: x_n = <e_n, X^1>_{H_0} and y_n = <|lambda_n|^{1/2} e_n, X^2>_{H_{-1/2}}.
// Each mode is an independent centred bivariate Gaussian.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "gwave/inf_sinc.hpp"
#include "gwave/model.hpp"
#include "gwave/numeric.hpp"

namespace gwave {

/// Which part of the state a quantity refers to: the displacement
/// (first), the velocity (second), or the pair measured in H_0 x H_{-1/2}.
enum class Component { first = 1, second = 2, both = 0 };

/// sign = (-1)^i used in the sinc infimum for component i.
inline int component_sign(Component i) {
  switch (i) {
    case Component::first:
      return -1;
    case Component::second:
      return 1;
    case Component::both:
      break;
  }
  throw InvariantViolation("a single component (1 or 2) is required here");
}

struct ModeMoments {
  double var1 = 0.0;
  double var2 = 0.0;
  double cov = 0.0;
};

namespace detail {

inline ModeMoments raw_mode_moments(const SpectralModel& model, std::uint64_t n) {
  const double half_kt = 0.5 * model.trace_density(n) * model.T();
  const PhaseFactors f = phase_factors(model.frequency(n), model.T());
  return {half_kt * f.one_minus_sinc, half_kt * (1.0 + f.sinc), half_kt * f.one_minus_cos_z};
}

// cov^2 <= var1 var2 up to 16 ulps is clamped; anything larger is a bug.
inline void enforce_psd(ModeMoments& m, std::uint64_t n) {
  const double prod = m.var1 * m.var2;
  const double cov2 = m.cov * m.cov;
  if (cov2 <= prod) return;
  const double ulp = std::nextafter(prod, INFINITY) - prod;
  if (cov2 - prod <= 16.0 * ulp) {
    m.cov = std::copysign(std::sqrt(prod), m.cov);
    return;
  }
  throw NumericFault("per-mode covariance is not positive semidefinite at mode " +
                     std::to_string(n));
}

}  // namespace detail

/// Variances and covariance of (x_n, y_n); all zero when e_n is not in the
/// index set.
inline ModeMoments mode_moments(const SpectralModel& model, ModeIndex n, bool in_set) {
  if (!in_set) return {};
  ModeMoments m = detail::raw_mode_moments(model, n.n);
  detail::enforce_psd(m, n.n);
  return m;
}

/// Applies CovOp(X^{I_N}) to (v, w) given in the orthonormal coordinates.
/// The factor |mu_n|^2/|lambda_n| is applied per mode.
inline std::pair<std::vector<double>, std::vector<double>> apply_covariance_operator(
    const SpectralModel& model, GalerkinLevel level, std::span<const double> v,
    std::span<const double> w) {
  if (v.size() != level.n || w.size() != level.n) {
    throw InvariantViolation("coordinate vectors must both have length N");
  }
  std::vector<double> out_v(level.n);
  std::vector<double> out_w(level.n);
  for (std::uint64_t i = 0; i < level.n; ++i) {
    const ModeMoments m = mode_moments(model, ModeIndex{i + 1}, true);
    out_v[i] = m.var1 * v[i] + m.cov * w[i];
    out_w[i] = m.cov * v[i] + m.var2 * w[i];
  }
  return {std::move(out_v), std::move(out_w)};
}

// ---------------------------------------------------------------------------
// Series

/// A series value with a rigorous enclosure of its truncation remainder.
/// `value` is the partial sum plus the midpoint of the remainder bracket;
/// the true sum lies within value +/- bracket_width / 2 (up to rounding).
struct SeriesValue {
  double value = 0.0;
  double bracket_width = 0.0;
  std::uint64_t terms = 0;
};

struct SeriesOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  /// Cap on summed terms past the starting level. When it is hit the
  /// reported bracket is wider than the tolerance.
  std::uint64_t max_terms = std::uint64_t{1} << 24;
};

namespace detail {

// integral_a^infinity x^q dx for q < -1.
inline double power_tail_integral(double a, double q) {
  return std::pow(a, q + 1.0) / (-q - 1.0);
}

inline double mode_term(const SpectralModel& model, std::uint64_t n, Component comp) {
  if (comp == Component::both) return model.T() * model.trace_density(n);
  const ModeMoments m = raw_mode_moments(model, n);
  return comp == Component::first ? m.var1 : m.var2;
}

struct Bracket {
  double lower = 0.0;
  double upper = 0.0;
};

// Enclosure of sum_{n > cutoff} mode_term(n).
//
// n^q is convex and decreasing, so the trapezoid rule gives a lower bound
// integral_{M+1} + f(M+1)/2 and the midpoint rule an upper bound
// integral_{M+1/2}. The oscillating part of the component terms is bounded
// in absolute value by k_n / (4 omega_n).
inline Bracket remainder_bracket(const SpectralModel& model, std::uint64_t cutoff,
                                 Component comp) {
  const double q = model.density_exponent();
  const double m1 = static_cast<double>(cutoff) + 1.0;
  const double mh = static_cast<double>(cutoff) + 0.5;
  const double mono_lo = power_tail_integral(m1, q) + 0.5 * std::pow(m1, q);
  const double mono_hi = power_tail_integral(mh, q);
  const double t = model.T();
  const double klo = model.density_scale_low();
  const double khi = model.density_scale_high();
  if (comp == Component::both) return {t * klo * mono_lo, t * khi * mono_hi};
  const double osc =
      khi / (4.0 * std::sqrt(model.c())) * power_tail_integral(mh, q - 0.5 * model.p());
  return {std::max(0.0, 0.5 * t * klo * mono_lo - osc), 0.5 * t * khi * mono_hi + osc};
}

// Smallest cutoff >= start (doubling the span) whose bracket width meets
// the tolerance, or start + max_terms.
inline std::uint64_t choose_cutoff(const SpectralModel& model, std::uint64_t start,
                                   Component comp, const SeriesOptions& opt) {
  const Bracket whole = remainder_bracket(model, start, comp);
  const double tol = std::max(opt.abs_tol, opt.rel_tol * whole.lower);
  std::uint64_t span = 64;
  for (;;) {
    const std::uint64_t capped = std::min(span, opt.max_terms);
    const Bracket b = remainder_bracket(model, start + capped, comp);
    if (b.upper - b.lower <= tol || capped == opt.max_terms) return start + capped;
    span *= 2;
  }
}

}  // namespace detail

/// Tails sum_{n > N} of the per-mode second moments for every N <= max_level,
/// computed from one shared truncation so sweeps over N cost one pass.
class TailProfile {
 public:
  TailProfile(const SpectralModel& model, Component comp, std::uint64_t max_level,
              SeriesOptions opt = {})
      : tails_(max_level + 1) {
    const std::uint64_t cutoff = detail::choose_cutoff(model, max_level, comp, opt);
    const detail::Bracket b = detail::remainder_bracket(model, cutoff, comp);
    width_ = b.upper - b.lower;
    cutoff_ = cutoff;
    // Smallest terms first.
    CompensatedSum acc;
    acc.add(0.5 * (b.lower + b.upper));
    for (std::uint64_t n = cutoff; n > max_level; --n) acc.add(detail::mode_term(model, n, comp));
    tails_[max_level] = acc.value();
    for (std::uint64_t n = max_level; n >= 1; --n) {
      acc.add(detail::mode_term(model, n, comp));
      tails_[n - 1] = acc.value();
    }
  }

  [[nodiscard]] SeriesValue at(GalerkinLevel level) const {
    if (level.n >= tails_.size()) throw InvariantViolation("level beyond the tail profile");
    return {tails_[level.n], width_, cutoff_ - level.n};
  }

  [[nodiscard]] std::uint64_t max_level() const noexcept { return tails_.size() - 1; }

 private:
  std::vector<double> tails_;
  double width_ = 0.0;
  std::uint64_t cutoff_ = 0;
};

/// sum_{n > N} of T k_n (both) or of the component variances, with bracket.
inline SeriesValue tail_series(const SpectralModel& model, GalerkinLevel level, Component comp,
                               SeriesOptions opt = {}) {
  const std::uint64_t cutoff = detail::choose_cutoff(model, level.n, comp, opt);
  const detail::Bracket b = detail::remainder_bracket(model, cutoff, comp);
  CompensatedSum acc;
  acc.add(0.5 * (b.lower + b.upper));
  for (std::uint64_t n = cutoff; n > level.n; --n) acc.add(detail::mode_term(model, n, comp));
  return {acc.value(), b.upper - b.lower, cutoff - level.n};
}

/// sum_{N < n <= M} of the per-mode second moments (exact finite sum).
inline double partial_sum(const SpectralModel& model, GalerkinLevel from, GalerkinLevel to,
                          Component comp) {
  CompensatedSum acc;
  for (std::uint64_t n = to.n; n > from.n; --n) acc.add(detail::mode_term(model, n, comp));
  return acc.value();
}

/// E||X^{I_N}||^2 = T sum_{n <= N} |mu_n|^2 / |lambda_n|.
inline double total_second_moment(const SpectralModel& model, GalerkinLevel level) {
  return partial_sum(model, GalerkinLevel{0}, level, Component::both);
}

inline double total_second_moment(const SpectralModel& model, AllModes) {
  return tail_series(model, GalerkinLevel{0}, Component::both).value;
}

/// E||X^{I_N,i}||^2 = 1/2 sum_{n <= N} k_n (T + sin(2 omega_n T) / ((-1)^i 2 omega_n)).
inline double component_second_moment(const SpectralModel& model, GalerkinLevel level,
                                      Component i) {
  component_sign(i);
  return partial_sum(model, GalerkinLevel{0}, level, i);
}

inline double component_second_moment(const SpectralModel& model, AllModes, Component i) {
  component_sign(i);
  return tail_series(model, GalerkinLevel{0}, i).value;
}

/// E||X^H||^2 - E||X^{I_N}||^2, or its component analogue.
inline double gap_exact(const SpectralModel& model, GalerkinLevel level, Component comp) {
  return tail_series(model, level, comp).value;
}

// ---------------------------------------------------------------------------
// Lower bounds

namespace detail {

inline double checked_exponent(double p, double delta) {
  if (!std::isfinite(p) || !std::isfinite(delta) || !(p > 0.0)) {
    throw InvariantViolation("need finite p > 0 and finite delta");
  }
  const double q = p * (2.0 * delta - 1.0);
  if (!(delta < 0.5 - 1.0 / (2.0 * p)) || !(q < -1.0)) {
    throw InvariantViolation("need delta < 1/2 - 1/(2p), i.e. p(2 delta - 1) < -1");
  }
  return q;
}

inline void require_power_law(const SpectralModel& model) {
  if (!model.has_power_law_weights()) {
    throw InvariantViolation("this bound needs the power-law weight rule |mu| = |lambda|^delta");
  }
}

}  // namespace detail

/// Lower bound on sum_{n > N} n^{p(2 delta - 1)}:
/// N^{q+1} / ([p(1 - 2 delta) - 1] 2^{p(1 - 2 delta) - 1}).
inline double tail_sum_lower(double p, double delta, std::uint64_t n) {
  const double q = detail::checked_exponent(p, delta);
  if (n == 0) throw InvariantViolation("tail_sum_lower needs N >= 1");
  const double s = -q - 1.0;
  return std::pow(static_cast<double>(n), q + 1.0) / (s * std::pow(2.0, s));
}

/// Upper bound q / (q + 1) on sum_{n >= 1} n^q, q = p(2 delta - 1).
inline double series_upper(double p, double delta) {
  const double q = detail::checked_exponent(p, delta);
  return q / (q + 1.0);
}

/// T inf|mu|^2 N^{1-p} / (c (p - 1) 2^{p-1}); needs p > 1 and inf |mu| > 0.
inline double bound_inf(const SpectralModel& model, GalerkinLevel level) {
  const double p = model.p();
  if (!(p > 1.0)) throw InvariantViolation("bound_inf needs p > 1");
  const double mu_inf = model.weight_infimum();
  if (!(mu_inf > 0.0)) throw InvariantViolation("bound_inf needs inf |mu| > 0");
  if (level.n == 0) throw InvariantViolation("bound_inf needs N >= 1");
  return model.T() * mu_inf * mu_inf * std::pow(static_cast<double>(level.n), 1.0 - p) /
         (model.c() * (p - 1.0) * std::pow(2.0, p - 1.0));
}

/// T c^{2 delta - 1} N^{q+1} / ([p(1 - 2 delta) - 1] 2^{p(1 - 2 delta) - 1}).
inline double bound_delta(const SpectralModel& model, GalerkinLevel level) {
  detail::require_power_law(model);
  return model.T() * std::pow(model.c(), 2.0 * model.delta() - 1.0) *
         tail_sum_lower(model.p(), model.delta(), level.n);
}

/// (E||X^{H,i}||^2 - E||X^{I_N,i}||^2) / exp(6 E||X^{H,i}||^2).
inline double exp_error_lower(const SpectralModel& model, GalerkinLevel level, Component i) {
  component_sign(i);
  const double gap = gap_exact(model, level, i);
  const double full = component_second_moment(model, kAllModes, i);
  return gap / std::exp(6.0 * full);
}

/// The explicit lower bound on E phi_i(X^{I_N}) - E phi_i(X^H) for the
/// power-law family, phi_i(v) = exp(-||v_i||^2).
inline double bound_exp(const SpectralModel& model, GalerkinLevel level, Component i) {
  detail::require_power_law(model);
  const int sign = component_sign(i);
  if (level.n == 0) throw InvariantViolation("bound_exp needs N >= 1");
  const double c = model.c();
  const double t = model.T();
  const double q = model.density_exponent();
  const double ck = std::pow(c, 2.0 * model.delta() - 1.0);
  const double inf = inf_sinc(2.0 * std::sqrt(c) * t, sign);
  const double num = (1.0 + inf) * t * ck * std::pow(2.0, q) *
                     std::pow(static_cast<double>(level.n), q + 1.0);
  const double den = (-q - 1.0) * std::exp(6.0 * q * t * ck / (q + 1.0));
  return num / den;
}

/// bound_exp written out for lambda_n = -pi^2 n^2 (Dirichlet Laplacian on (0,1)).
inline double bound_laplacian(double delta, double T, GalerkinLevel level, Component i) {
  if (!(delta < 0.25)) throw InvariantViolation("bound_laplacian needs delta < 1/4");
  if (!(T > 0.0)) throw InvariantViolation("bound_laplacian needs T > 0");
  if (level.n == 0) throw InvariantViolation("bound_laplacian needs N >= 1");
  const int sign = component_sign(i);
  constexpr double pi = std::numbers::pi;
  const double inf = inf_sinc(2.0 * pi * T, sign);
  const double num = (1.0 + inf) * T * std::pow(4.0 * pi * pi, 2.0 * delta - 1.0) *
                     std::pow(static_cast<double>(level.n), 4.0 * delta - 1.0);
  const double den = (1.0 - 4.0 * delta) *
                     std::exp(12.0 * (2.0 * delta - 1.0) * T * std::pow(pi, 4.0 * delta - 2.0) /
                              (4.0 * delta - 1.0));
  return num / den;
}

/// The three stages of the component-gap chain behind bound_exp:
///   component_gap >= sinc_weighted >= closed_form > 0
/// with sinc_weighted = [1 + inf_sinc] (T c^{2 delta - 1} / 2) sum_{n > N} n^q.
struct ExpChain {
  SeriesValue component_gap;
  double sinc_weighted = 0.0;
  double closed_form = 0.0;
};

inline ExpChain exp_chain(const SpectralModel& model, GalerkinLevel level, Component i) {
  detail::require_power_law(model);
  const int sign = component_sign(i);
  const double inf = inf_sinc(2.0 * std::sqrt(model.c()) * model.T(), sign);
  ExpChain out;
  out.component_gap = tail_series(model, level, i);
  out.sinc_weighted = (1.0 + inf) * 0.5 * tail_series(model, level, Component::both).value;
  out.closed_form = (1.0 + inf) * 0.5 * bound_delta(model, level);
  return out;
}

/// One checked inequality exact_value >= bound_value.
struct BoundCertificate {
  GalerkinLevel level{0};
  double exact_value = 0.0;
  double bound_value = 0.0;
  bool satisfied = false;
  std::string_view source;
};

/// Certifies using the lower end of the series enclosure.
inline BoundCertificate make_certificate(GalerkinLevel level, const SeriesValue& exact,
                                         double bound, std::string_view source) {
  const double lower = exact.value - 0.5 * exact.bracket_width;
  return {level, exact.value, bound, lower >= bound, source};
}

inline BoundCertificate certify_bound_delta(const SpectralModel& model, GalerkinLevel level) {
  return make_certificate(level, tail_series(model, level, Component::both),
                          bound_delta(model, level), "bound_delta");
}

inline BoundCertificate certify_bound_inf(const SpectralModel& model, GalerkinLevel level) {
  return make_certificate(level, tail_series(model, level, Component::both),
                          bound_inf(model, level), "bound_inf");
}

}  // namespace gwave
