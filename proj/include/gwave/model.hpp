#pragma once

// Spectral model of the additive-noise stochastic wave equation.
//
// The linear operator is diagonal in an orthonormal basis (e_n) with
// eigenvalues lambda_n = -c n^p, and the noise acts on mode n with weight
// mu_n. The default weight rule is |mu_n| = |lambda_n|^delta; a second
// constructor accepts an explicit weight callback with declared bounds.
//
// All validation is done with strict binary64 comparisons, no slack.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

namespace gwave {

/// A model parameter or precondition is out of its admissible range.
class InvariantViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Floating-point evaluation produced a result that cannot be attributed to
/// rounding (for example a covariance that is far from positive semidefinite).
class NumericFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Position of a basis vector under the canonical ordering, n >= 1.
struct ModeIndex {
  std::uint64_t n = 1;

  constexpr explicit ModeIndex(std::uint64_t value) : n(value) {
    if (value == 0) throw InvariantViolation("mode index must satisfy n >= 1");
  }
};

/// Number of retained modes N; the index set is {e_1, ..., e_N}.
struct GalerkinLevel {
  std::uint64_t n = 0;

  constexpr explicit GalerkinLevel(std::uint64_t value) : n(value) {}
  friend constexpr auto operator<=>(GalerkinLevel, GalerkinLevel) = default;
};

/// Tag selecting the full (untruncated) index set.
struct AllModes {};
inline constexpr AllModes kAllModes{};

/// |mu_n| as a function of the mode index.
using WeightRule = std::function<double(std::uint64_t)>;

class SpectralModel {
 public:
  /// lambda_n = -c n^p, |mu_n| = (c n^p)^delta, horizon T.
  static SpectralModel build(double c, double p, double delta, double T) {
    if (!std::isfinite(c) || !std::isfinite(p) || !std::isfinite(delta) || !std::isfinite(T)) {
      throw InvariantViolation("model parameters c, p, delta, T must be finite");
    }
    check_common(c, p, T);
    const double limit = 0.5 - 1.0 / (2.0 * p);
    if (!(delta < limit)) {
      throw InvariantViolation("trace condition violated: delta = " + fmt(delta) +
                               " must satisfy delta < 1/2 - 1/(2p) = " + fmt(limit));
    }
    if (!(p * (2.0 * delta - 1.0) < -1.0)) {
      throw InvariantViolation("trace condition violated: p(2 delta - 1) = " +
                               fmt(p * (2.0 * delta - 1.0)) + " must be < -1");
    }
    return SpectralModel(c, p, delta, T);
  }

  /// Explicit weights |mu_n| = weight(n) with inf |mu| >= weight_inf and
  /// sup |mu| <= weight_sup. Bounded weights need p > 1 for the trace
  /// condition. Evaluated weights outside the declared bounds raise
  /// InvariantViolation at use.
  static SpectralModel with_weights(double c, double p, double T, WeightRule weight,
                                    double weight_inf, double weight_sup) {
    if (!std::isfinite(c) || !std::isfinite(p) || !std::isfinite(T)) {
      throw InvariantViolation("model parameters c, p, T must be finite");
    }
    check_common(c, p, T);
    if (!(p > 1.0)) {
      throw InvariantViolation("bounded weights need p > 1 for the trace condition, got p = " +
                               fmt(p));
    }
    if (!weight) throw InvariantViolation("weight rule must be callable");
    if (!(weight_inf >= 0.0) || !(weight_sup >= weight_inf) || !std::isfinite(weight_sup)) {
      throw InvariantViolation("weight bounds must satisfy 0 <= inf <= sup < infinity");
    }
    SpectralModel m(c, p, 0.0, T);
    m.custom_ = std::make_shared<const CustomWeights>(
        CustomWeights{std::move(weight), weight_inf, weight_sup});
    return m;
  }

  /// Constant weights |mu_n| = mu.
  static SpectralModel with_constant_weight(double c, double p, double T, double mu) {
    const double a = std::abs(mu);
    return with_weights(c, p, T, [a](std::uint64_t) { return a; }, a, a);
  }

  [[nodiscard]] double c() const noexcept { return c_; }
  [[nodiscard]] double p() const noexcept { return p_; }
  /// Noise-weight exponent; 0 for explicit-weight models.
  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] double T() const noexcept { return T_; }
  [[nodiscard]] bool has_power_law_weights() const noexcept { return custom_ == nullptr; }

  /// lambda_n = -c n^p.
  [[nodiscard]] double eigenvalue(ModeIndex i) const { return -abs_eigenvalue(i.n); }

  [[nodiscard]] double abs_eigenvalue(std::uint64_t n) const {
    return c_ * std::pow(static_cast<double>(n), p_);
  }

  /// omega_n = |lambda_n|^{1/2}.
  [[nodiscard]] double frequency(std::uint64_t n) const {
    return std::sqrt(c_) * std::pow(static_cast<double>(n), 0.5 * p_);
  }

  [[nodiscard]] double noise_weight(ModeIndex i) const {
    if (custom_) return checked_weight(i.n);
    return std::pow(abs_eigenvalue(i.n), delta_);
  }

  /// k_n = |mu_n|^2 / |lambda_n|, the per-mode trace density.
  [[nodiscard]] double trace_density(std::uint64_t n) const {
    if (custom_) {
      const double mu = checked_weight(n);
      return mu * mu / abs_eigenvalue(n);
    }
    return scale_ * std::pow(static_cast<double>(n), exponent_);
  }

  /// Exponent q of the envelope k_lo n^q <= k_n <= k_hi n^q.
  /// For power-law weights q = p(2 delta - 1); otherwise q = -p.
  [[nodiscard]] double density_exponent() const noexcept { return exponent_; }
  [[nodiscard]] double density_scale_low() const noexcept {
    return custom_ ? custom_->inf * custom_->inf / c_ : scale_;
  }
  [[nodiscard]] double density_scale_high() const noexcept {
    return custom_ ? custom_->sup * custom_->sup / c_ : scale_;
  }

  /// inf_n |mu_n|; zero when the weights decay.
  [[nodiscard]] double weight_infimum() const noexcept {
    if (custom_) return custom_->inf;
    if (delta_ < 0.0) return 0.0;
    return std::pow(c_, delta_);
  }

  /// eta with gap ~ lambda_N^{-eta}: eta = -(p(2 delta - 1) + 1) / p.
  [[nodiscard]] double eta() const noexcept { return -(exponent_ + 1.0) / p_; }

 private:
  struct CustomWeights {
    WeightRule weight;
    double inf;
    double sup;
  };

  SpectralModel(double c, double p, double delta, double T)
      : c_(c),
        p_(p),
        delta_(delta),
        T_(T),
        exponent_(p * (2.0 * delta - 1.0)),
        scale_(std::pow(c, 2.0 * delta - 1.0)) {}

  static void check_common(double c, double p, double T) {
    if (!(c > 0.0)) throw InvariantViolation("eigenvalue scale must satisfy c > 0, got " + fmt(c));
    if (!(p > 0.0)) throw InvariantViolation("growth exponent must satisfy p > 0, got " + fmt(p));
    if (!(T > 0.0)) throw InvariantViolation("time horizon must satisfy T > 0, got " + fmt(T));
  }

  double checked_weight(std::uint64_t n) const {
    const double mu = std::abs(custom_->weight(n));
    if (!(mu >= custom_->inf) || !(mu <= custom_->sup)) {
      throw InvariantViolation("weight rule left its declared bounds at mode " +
                               std::to_string(n));
    }
    return mu;
  }

  static std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

  double c_;
  double p_;
  double delta_;
  double T_;
  double exponent_;
  double scale_;
  std::shared_ptr<const CustomWeights> custom_;
};

/// p = 1/eta, delta = 1/2 - eta.
inline SpectralModel eta_to_model(double eta, double c, double T) {
  if (!std::isfinite(eta) || !(eta > 0.0)) {
    throw InvariantViolation("eta must be finite and > 0");
  }
  return SpectralModel::build(c, 1.0 / eta, 0.5 - eta, T);
}

}  // namespace gwave
