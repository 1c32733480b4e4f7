#pragma once

// Exact samples of X^{I_M} in orthonormal coordinates, the projection
// coupling X^{I_N} = P_{I_N} X^{I_M}, and a time-discretised path oracle
// for the stochastic-convolution representation.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gwave/analytics.hpp"
#include "gwave/model.hpp"
#include "gwave/random.hpp"

namespace gwave {

/// Coordinates (x_n, y_n), n = 1..level, of one draw of X^{I_level}.
struct GalerkinSample {
  std::vector<double> x;
  std::vector<double> y;

  [[nodiscard]] std::uint64_t level() const noexcept { return x.size(); }

  [[nodiscard]] double norm_sq_first() const noexcept {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  }
  [[nodiscard]] double norm_sq_second() const noexcept {
    double s = 0.0;
    for (double v : y) s += v * v;
    return s;
  }
  /// ||X||^2 in H_0 x H_{-1/2}.
  [[nodiscard]] double norm_sq() const noexcept { return norm_sq_first() + norm_sq_second(); }

  friend bool operator==(const GalerkinSample&, const GalerkinSample&) = default;
};

/// Lower-triangular square root of [[var1, cov], [cov, var2]].
struct ModeFactor {
  double l11 = 0.0;
  double l21 = 0.0;
  double l22 = 0.0;
};

inline ModeFactor cholesky_2x2(const ModeMoments& m) {
  if (m.var1 == 0.0) return {0.0, 0.0, std::sqrt(m.var2)};
  const double l11 = std::sqrt(m.var1);
  const double l21 = m.cov / l11;
  const double rest = m.var2 - l21 * l21;
  return {l11, l21, std::sqrt(std::max(0.0, rest))};
}

// Substream index of mode n; block 0 of it feeds the exact sampler.
inline std::uint32_t mode_substream(std::uint64_t n) {
  if (n > 0xFFFFFFFFull) throw InvariantViolation("mode index exceeds the 32-bit substream space");
  return static_cast<std::uint32_t>(n);
}

/// Exact sampler with per-mode factors cached up to a fixed level.
class ExactSampler {
 public:
  ExactSampler(const SpectralModel& model, GalerkinLevel level) : factors_(level.n) {
    for (std::uint64_t i = 0; i < level.n; ++i) {
      factors_[i] = cholesky_2x2(mode_moments(model, ModeIndex{i + 1}, true));
    }
  }

  [[nodiscard]] std::uint64_t level() const noexcept { return factors_.size(); }

  /// Fills `out` with the draw for `stream`. Mode n only reads substream n,
  /// so the first N coordinates do not depend on the level.
  void sample_into(const RandomStream& stream, GalerkinSample& out) const {
    out.x.resize(factors_.size());
    out.y.resize(factors_.size());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const NormalPair z = normal_pair(stream, mode_substream(i + 1), 0);
      const ModeFactor& f = factors_[i];
      out.x[i] = f.l11 * z.z1;
      out.y[i] = f.l21 * z.z1 + f.l22 * z.z2;
    }
  }

  [[nodiscard]] GalerkinSample sample(const RandomStream& stream) const {
    GalerkinSample s;
    sample_into(stream, s);
    return s;
  }

 private:
  std::vector<ModeFactor> factors_;
};

inline GalerkinSample sample_exact(const SpectralModel& model, GalerkinLevel level,
                                   const RandomStream& stream) {
  return ExactSampler(model, level).sample(stream);
}

/// First N coordinates of both components.
inline GalerkinSample project(const GalerkinSample& sample, GalerkinLevel level) {
  if (level.n > sample.level()) {
    throw InvariantViolation("projection level exceeds the sample level");
  }
  const auto n = static_cast<std::ptrdiff_t>(level.n);
  return {std::vector<double>(sample.x.begin(), sample.x.begin() + n),
          std::vector<double>(sample.y.begin(), sample.y.begin() + n)};
}

/// Left-point Riemann sums of the stochastic convolutions
///   x_n = (mu_n / omega_n) int_0^T sin(omega_n (T - s)) d beta_n(s)
///   y_n = (mu_n / omega_n) int_0^T cos(omega_n (T - s)) d beta_n(s)
/// over K uniform steps, with one set of Brownian increments per mode
/// shared by both integrals. Increments come from blocks 1.. of the mode's
/// substream, so they never overlap the exact sampler's draws.
class PathOracle {
 public:
  PathOracle(const SpectralModel& model, GalerkinLevel level, std::uint64_t steps)
      : level_(level.n), steps_(steps) {
    if (steps == 0) throw InvariantViolation("path oracle needs K >= 1 time steps");
    if (steps > 0x1FFFFFFFEull) throw InvariantViolation("path oracle step count too large");
    const double dt = model.T() / static_cast<double>(steps);
    dt_ = dt;
    sqrt_dt_ = std::sqrt(dt);
    sin_.resize(level_ * steps_);
    cos_.resize(level_ * steps_);
    for (std::uint64_t i = 0; i < level_; ++i) {
      const std::uint64_t n = i + 1;
      const double omega = model.frequency(n);
      const double amp = model.noise_weight(ModeIndex{n}) / omega;
      for (std::uint64_t k = 0; k < steps_; ++k) {
        // omega (T - s_k) with s_k = k T / K, i.e. omega T (K - k) / K.
        const double remaining = model.T() * static_cast<double>(steps_ - k) /
                                 static_cast<double>(steps_);
        const double phase = omega * remaining;
        sin_[i * steps_ + k] = amp * std::sin(phase);
        cos_[i * steps_ + k] = amp * std::cos(phase);
      }
    }
  }

  void sample_into(const RandomStream& stream, GalerkinSample& out) const {
    out.x.assign(level_, 0.0);
    out.y.assign(level_, 0.0);
    for (std::uint64_t i = 0; i < level_; ++i) {
      const std::uint32_t sub = mode_substream(i + 1);
      const double* s = sin_.data() + i * steps_;
      const double* c = cos_.data() + i * steps_;
      double ax = 0.0;
      double ay = 0.0;
      for (std::uint64_t k = 0; k < steps_; k += 2) {
        const NormalPair z = normal_pair(stream, sub, static_cast<std::uint32_t>(1 + k / 2));
        ax += s[k] * z.z1;
        ay += c[k] * z.z1;
        if (k + 1 < steps_) {
          ax += s[k + 1] * z.z2;
          ay += c[k + 1] * z.z2;
        }
      }
      out.x[i] = sqrt_dt_ * ax;
      out.y[i] = sqrt_dt_ * ay;
    }
  }

  [[nodiscard]] GalerkinSample sample(const RandomStream& stream) const {
    GalerkinSample s;
    sample_into(stream, s);
    return s;
  }

  [[nodiscard]] std::uint64_t level() const noexcept { return level_; }
  [[nodiscard]] std::uint64_t steps() const noexcept { return steps_; }

  /// Exact covariance of the Riemann sums for mode n (what the oracle's
  /// output converges to in distribution; differs from mode_moments by the
  /// quadrature bias).
  [[nodiscard]] ModeMoments discrete_moments(ModeIndex n) const {
    if (n.n > level_) throw InvariantViolation("mode beyond the oracle level");
    const double* s = sin_.data() + (n.n - 1) * steps_;
    const double* c = cos_.data() + (n.n - 1) * steps_;
    CompensatedSum ss;
    CompensatedSum cc;
    CompensatedSum sc;
    for (std::uint64_t k = 0; k < steps_; ++k) {
      ss.add(s[k] * s[k]);
      cc.add(c[k] * c[k]);
      sc.add(s[k] * c[k]);
    }
    return {dt_ * ss.value(), dt_ * cc.value(), dt_ * sc.value()};
  }

 private:
  std::uint64_t level_;
  std::uint64_t steps_;
  double dt_ = 0.0;
  double sqrt_dt_ = 0.0;
  std::vector<double> sin_;
  std::vector<double> cos_;
};

inline GalerkinSample sample_path_oracle(const SpectralModel& model, GalerkinLevel level,
                                         std::uint64_t steps, const RandomStream& stream) {
  return PathOracle(model, level, steps).sample(stream);
}

}  // namespace gwave
