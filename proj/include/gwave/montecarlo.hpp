#pragma once

// Coupled Monte Carlo estimation of weak errors.
//
// X^H is not samplable, so it is replaced by X^{I_M} for a reference level
// M > N; the coarse draw is the projection of the fine one. Every report
// carries an analytic bound on the bias this substitution introduces.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <thread>
#include <vector>

#include "gwave/analytics.hpp"
#include "gwave/sampler.hpp"

namespace gwave {

/// Single-pass mean and variance (Welford), mergeable (Chan et al.).
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double d = o.mean_ - mean_;
    mean_ += d * nb / n;
    m2_ += o.m2_ + d * d * na * nb / n;
    n_ += o.n_;
  }

  [[nodiscard]] std::uint64_t count() const noexcept { return n_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Monte Carlo mean with its standard error sd / sqrt(n).
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
};

inline Estimate to_estimate(const RunningStats& s) {
  const double n = static_cast<double>(s.count());
  return {s.mean(), s.count() > 0 ? std::sqrt(s.variance() / n) : 0.0, s.count()};
}

struct ParallelOptions {
  unsigned threads = 1;
  /// Samples per work unit. Results depend on it (through the merge tree)
  /// but never on the thread count.
  std::uint64_t batch_size = 4096;
};

/// Runs `batch(begin, end) -> Acc` over [0, count) in fixed-size batches
/// and merges the batch results with a pairwise tree in index order, so the
/// output is bit-identical for any thread count. Acc needs `merge(const Acc&)`.
template <class Acc = RunningStats, class BatchFn>
Acc accumulate_batches(std::uint64_t count, const ParallelOptions& opt, BatchFn&& batch) {
  const std::uint64_t bs = std::max<std::uint64_t>(1, opt.batch_size);
  const std::uint64_t nb = (count + bs - 1) / bs;
  std::vector<Acc> parts(nb);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t b = next.fetch_add(1); b < nb; b = next.fetch_add(1)) {
      parts[b] = batch(b * bs, std::min(count, (b + 1) * bs));
    }
  };
  const unsigned threads =
      static_cast<unsigned>(std::clamp<std::uint64_t>(opt.threads, 1, std::max<std::uint64_t>(1, nb)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (parts.empty()) return {};
  for (std::size_t width = 1; width < parts.size(); width *= 2) {
    for (std::size_t i = 0; i + width < parts.size(); i += 2 * width) parts[i].merge(parts[i + width]);
  }
  return parts.front();
}

enum class TestFunction { norm_sq, phi_1, phi_2 };

inline std::string_view to_string(TestFunction f) {
  switch (f) {
    case TestFunction::norm_sq:
      return "norm_sq";
    case TestFunction::phi_1:
      return "phi_1";
    case TestFunction::phi_2:
      return "phi_2";
  }
  return "?";
}

inline std::optional<TestFunction> parse_test_function(std::string_view s) {
  if (s == "norm_sq") return TestFunction::norm_sq;
  if (s == "phi_1") return TestFunction::phi_1;
  if (s == "phi_2") return TestFunction::phi_2;
  return std::nullopt;
}

/// phi_i(v_1, v_2) = exp(-||v_i||^2).
inline double phi(const GalerkinSample& sample, Component i) {
  component_sign(i);
  return std::exp(-(i == Component::first ? sample.norm_sq_first() : sample.norm_sq_second()));
}

struct EstimatorConfig {
  std::uint64_t num_samples = 100000;
  std::uint64_t seed = 0;
  std::uint64_t reference_level = 1024;
  double target_bias_fraction = 0.01;
};

/// Upper bound on sum_{n > M} T k_n = E||X^H||^2 - E||X^{I_M}||^2:
/// T k_hi M^{q+1} / (-q-1).
inline double truncation_bias_bound(const SpectralModel& model, GalerkinLevel reference) {
  if (reference.n == 0) throw InvariantViolation("reference level must be >= 1");
  const double q = model.density_exponent();
  return model.T() * model.density_scale_high() * detail::power_tail_integral(
                                                      static_cast<double>(reference.n), q);
}

/// Smallest M = 2^k N (k >= 1) whose truncation bias bound is at most
/// fraction * scale.
inline std::uint64_t choose_reference_level(const SpectralModel& model, GalerkinLevel level,
                                            double fraction, double scale) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvariantViolation("target_bias_fraction must lie in (0, 1)");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvariantViolation("scale must be > 0");
  if (level.n == 0) throw InvariantViolation("reference level selection needs N >= 1");
  constexpr std::uint64_t kMaxLevel = std::uint64_t{1} << 40;
  std::uint64_t m = 2 * level.n;
  while (truncation_bias_bound(model, GalerkinLevel{m}) > fraction * scale) {
    if (m > kMaxLevel / 2) {
      throw InvariantViolation("no reference level below 2^40 meets the bias target");
    }
    m *= 2;
  }
  return m;
}

/// Analytic lower bound matching a test function: bound_delta for the
/// squared norm and bound_exp for phi_i.
inline double analytic_lower_bound(const SpectralModel& model, GalerkinLevel level,
                                   TestFunction f) {
  switch (f) {
    case TestFunction::norm_sq:
      return model.has_power_law_weights() ? bound_delta(model, level) : bound_inf(model, level);
    case TestFunction::phi_1:
      return bound_exp(model, level, Component::first);
    case TestFunction::phi_2:
      return bound_exp(model, level, Component::second);
  }
  return 0.0;
}

struct WeakErrorReport {
  GalerkinLevel level{0};
  std::uint64_t reference_level = 0;
  TestFunction test_function = TestFunction::norm_sq;
  /// Signed so that the analytic lower bound applies to it:
  /// ||X^{I_M}||^2 - ||X^{I_N}||^2 for norm_sq, phi(X^{I_N}) - phi(X^{I_M}) for phi_i.
  Estimate estimate;
  /// T sum_{N < n <= M} k_n, for norm_sq only.
  std::optional<double> exact_value;
  double lower_bound = 0.0;
  double truncation_bias_bound = 0.0;

  /// estimate - 3 SE - bias >= lower bound.
  [[nodiscard]] bool certified() const noexcept {
    return estimate.mean - 3.0 * estimate.std_error - truncation_bias_bound >= lower_bound;
  }
  /// Even the most generous reading estimate + 3 SE + bias falls below the bound.
  [[nodiscard]] bool violated() const noexcept {
    return estimate.mean + 3.0 * estimate.std_error + truncation_bias_bound < lower_bound;
  }
};

namespace detail {

inline double coupled_difference(const GalerkinSample& fine, std::uint64_t n, TestFunction f) {
  const std::size_t split = std::min<std::size_t>(n, fine.x.size());
  double x_coarse = 0.0;
  double y_coarse = 0.0;
  double x_tail = 0.0;
  double y_tail = 0.0;
  for (std::size_t i = 0; i < split; ++i) {
    x_coarse += fine.x[i] * fine.x[i];
    y_coarse += fine.y[i] * fine.y[i];
  }
  for (std::size_t i = split; i < fine.x.size(); ++i) {
    x_tail += fine.x[i] * fine.x[i];
    y_tail += fine.y[i] * fine.y[i];
  }
  switch (f) {
    case TestFunction::norm_sq:
      return x_tail + y_tail;
    case TestFunction::phi_1:
      return -std::exp(-x_coarse) * std::expm1(-x_tail);
    case TestFunction::phi_2:
      return -std::exp(-y_coarse) * std::expm1(-y_tail);
  }
  return 0.0;
}

inline double functional_value(const GalerkinSample& s, TestFunction f) {
  switch (f) {
    case TestFunction::norm_sq:
      return s.norm_sq();
    case TestFunction::phi_1:
      return phi(s, Component::first);
    case TestFunction::phi_2:
      return phi(s, Component::second);
  }
  return 0.0;
}

inline void check_estimator_inputs(GalerkinLevel level, const EstimatorConfig& cfg) {
  if (cfg.num_samples < 2) throw InvariantViolation("num_samples must be >= 2");
  if (cfg.reference_level < 1) throw InvariantViolation("reference_level must be >= 1");
  if (level.n >= cfg.reference_level) {
    throw InvariantViolation("level N must be below the reference level M");
  }
}

}  // namespace detail

/// Coupled estimator: sample j draws X^{I_M} from stream (seed, j) and
/// evaluates the test function on it and on its projection to level N.
inline WeakErrorReport estimate_weak_error_coupled(const SpectralModel& model, GalerkinLevel level,
                                                   TestFunction f, const EstimatorConfig& cfg,
                                                   const ParallelOptions& par = {}) {
  detail::check_estimator_inputs(level, cfg);
  const GalerkinLevel reference{cfg.reference_level};
  const ExactSampler sampler(model, reference);
  const RunningStats stats =
      accumulate_batches(cfg.num_samples, par, [&](std::uint64_t begin, std::uint64_t end) {
        RunningStats s;
        GalerkinSample fine;
        for (std::uint64_t j = begin; j < end; ++j) {
          sampler.sample_into(RandomStream{cfg.seed, j}, fine);
          s.add(detail::coupled_difference(fine, level.n, f));
        }
        return s;
      });
  WeakErrorReport r;
  r.level = level;
  r.reference_level = reference.n;
  r.test_function = f;
  r.estimate = to_estimate(stats);
  if (f == TestFunction::norm_sq) {
    r.exact_value = partial_sum(model, level, reference, Component::both);
  }
  r.lower_bound = level.n >= 1 ? analytic_lower_bound(model, level, f) : 0.0;
  // exp(-t) is 1-Lipschitz on [0, inf) and the discarded modes are
  // orthogonal, so the phi bias is bounded by the same tail as the norm.
  r.truncation_bias_bound = truncation_bias_bound(model, reference);
  return r;
}

/// Same target as the coupled estimator, but fine and coarse draws come
/// from unrelated streams. Exists to measure what the coupling buys.
inline Estimate estimate_weak_error_independent(const SpectralModel& model, GalerkinLevel level,
                                                TestFunction f, const EstimatorConfig& cfg,
                                                const ParallelOptions& par = {}) {
  detail::check_estimator_inputs(level, cfg);
  const ExactSampler fine_sampler(model, GalerkinLevel{cfg.reference_level});
  const ExactSampler coarse_sampler(model, level);
  constexpr std::uint64_t kCoarseBit = std::uint64_t{1} << 63;
  const double sign = f == TestFunction::norm_sq ? 1.0 : -1.0;
  const RunningStats stats =
      accumulate_batches(cfg.num_samples, par, [&](std::uint64_t begin, std::uint64_t end) {
        RunningStats s;
        GalerkinSample fine;
        GalerkinSample coarse;
        for (std::uint64_t j = begin; j < end; ++j) {
          fine_sampler.sample_into(RandomStream{cfg.seed, j}, fine);
          coarse_sampler.sample_into(RandomStream{cfg.seed, j ^ kCoarseBit}, coarse);
          s.add(sign * (detail::functional_value(fine, f) - detail::functional_value(coarse, f)));
        }
        return s;
      });
  return to_estimate(stats);
}

/// Plain Monte Carlo estimate of E f(X^{I_N}).
inline Estimate estimate_functional(const SpectralModel& model, GalerkinLevel level, TestFunction f,
                                    std::uint64_t num_samples, std::uint64_t seed,
                                    const ParallelOptions& par = {}) {
  if (num_samples < 2) throw InvariantViolation("num_samples must be >= 2");
  const ExactSampler sampler(model, level);
  const RunningStats stats =
      accumulate_batches(num_samples, par, [&](std::uint64_t begin, std::uint64_t end) {
        RunningStats s;
        GalerkinSample draw;
        for (std::uint64_t j = begin; j < end; ++j) {
          sampler.sample_into(RandomStream{seed, j}, draw);
          s.add(detail::functional_value(draw, f));
        }
        return s;
      });
  return to_estimate(stats);
}

/// Raw second moments E[x^2], E[y^2], E[xy] of one mode's coordinates.
struct CoordinateMoments {
  RunningStats xx;
  RunningStats yy;
  RunningStats xy;

  void add(double x, double y) noexcept {
    xx.add(x * x);
    yy.add(y * y);
    xy.add(x * y);
  }
  void merge(const CoordinateMoments& o) noexcept {
    xx.merge(o.xx);
    yy.merge(o.yy);
    xy.merge(o.xy);
  }
};

/// Per-mode moments for a chosen set of modes plus the squared norm.
struct MomentPanel {
  std::vector<std::uint64_t> modes;
  std::vector<CoordinateMoments> moments;
  RunningStats norm_sq;

  void merge(const MomentPanel& o) {
    if (moments.empty()) {
      *this = o;
      return;
    }
    for (std::size_t i = 0; i < moments.size(); ++i) moments[i].merge(o.moments[i]);
    norm_sq.merge(o.norm_sq);
  }
};

/// Draws `count` samples from streams (seed, j) with any sampler exposing
/// sample_into(stream, GalerkinSample&) and tabulates their moments.
template <class Sampler>
MomentPanel sample_moment_panel(const Sampler& sampler, std::vector<std::uint64_t> modes,
                                std::uint64_t count, std::uint64_t seed,
                                const ParallelOptions& par = {}) {
  for (std::uint64_t n : modes) {
    if (n == 0) throw InvariantViolation("mode indices start at 1");
  }
  return accumulate_batches<MomentPanel>(count, par, [&](std::uint64_t begin, std::uint64_t end) {
    MomentPanel panel;
    panel.modes = modes;
    panel.moments.resize(modes.size());
    GalerkinSample draw;
    for (std::uint64_t j = begin; j < end; ++j) {
      sampler.sample_into(RandomStream{seed, j}, draw);
      for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i] > draw.level()) throw InvariantViolation("mode beyond the sample level");
        panel.moments[i].add(draw.x[modes[i] - 1], draw.y[modes[i] - 1]);
      }
      panel.norm_sq.add(draw.norm_sq());
    }
    return panel;
  });
}

}  // namespace gwave
