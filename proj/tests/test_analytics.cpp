#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gwave/analytics.hpp"

using namespace gwave;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPi2 = kPi * kPi;

SpectralModel laplacian() { return SpectralModel::build(kPi2, 2.0, 0.0, 1.0); }

struct Params {
  double c, p, delta, T;
};

const std::vector<Params>& sweep_models() {
  static const std::vector<Params> models{
      {kPi2, 2.0, 0.0, 1.0},  {1.0, 2.0, -0.5, 2.0}, {2.5, 1.5, -0.2, 0.7}, {1.0, 4.0, 0.25, 1.0},
      {0.3, 3.0, 0.1, 3.0},   {5.0, 1.0, -0.5, 1.3}, {1.0, 0.5, -1.5, 1.0}, {1.0, 2.0, 0.15, 1.0},
  };
  return models;
}

}  // namespace

TEST(ModeMoments, LaplacianFirstMode) {
  const auto m = mode_moments(laplacian(), ModeIndex{1}, true);
  EXPECT_NEAR(m.var1, 1.0 / (2.0 * kPi2), 1e-16);
  EXPECT_NEAR(m.var2, 1.0 / (2.0 * kPi2), 1e-16);
  EXPECT_NEAR(m.cov, 0.0, 1e-17);
}

TEST(ModeMoments, UnitScaleFirstMode) {
  const auto m = mode_moments(SpectralModel::build(1.0, 2.0, 0.0, 1.0), ModeIndex{1}, true);
  EXPECT_NEAR(m.var1, 0.27267564329357958, 2e-16);
  EXPECT_NEAR(m.var2, 0.72732435670642042, 2e-16);
  EXPECT_NEAR(m.cov, 0.35403670913678560, 2e-16);
}

TEST(ModeMoments, OutsideIndexSetIsZero) {
  const auto m = mode_moments(SpectralModel::build(3.0, 1.5, -1.0, 2.0), ModeIndex{4}, false);
  EXPECT_EQ(m.var1, 0.0);
  EXPECT_EQ(m.var2, 0.0);
  EXPECT_EQ(m.cov, 0.0);
}

TEST(ModeMoments, PsdAndTraceIdentitySweep) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 40; ++k) {
    const double p = 0.3 + 4.0 * u(rng);
    const double delta = 0.5 - 0.5 / p - 0.05 - 2.0 * u(rng);
    const auto model = SpectralModel::build(std::exp(-3.0 + 6.0 * u(rng)), p, delta,
                                            std::exp(-2.0 + 4.0 * u(rng)));
    for (std::uint64_t n = 1; n <= 10000; n += (n < 100 ? 1 : 37)) {
      const auto m = mode_moments(model, ModeIndex{n}, true);
      ASSERT_GE(m.var1, 0.0);
      ASSERT_GE(m.var2, 0.0);
      const double prod = m.var1 * m.var2;
      ASSERT_LE(m.cov * m.cov, prod + 1e-15 * (prod + 1.0)) << n;
      const double kt = model.trace_density(n) * model.T();
      const double ulp = std::nextafter(kt, INFINITY) - kt;
      ASSERT_LE(std::abs(m.var1 + m.var2 - kt), 10.0 * ulp) << n;
    }
  }
}

TEST(ModeMoments, HighFrequencyStaysPsd) {
  // omega up to 1e8.
  const auto model = SpectralModel::build(1.0, 2.0, 0.0, 1.0);
  for (std::uint64_t n : {1000000ull, 12345678ull, 99999999ull, 100000000ull}) {
    const auto m = mode_moments(model, ModeIndex{n}, true);
    EXPECT_LE(m.cov * m.cov, m.var1 * m.var2);
    const double z = 2.0 * static_cast<double>(n);
    EXPECT_NEAR(m.var1 / (m.var1 + m.var2), 0.5 * (1.0 - std::sin(z) / z), 1e-15) << n;
  }
}

TEST(CovarianceOperator, Examples) {
  const auto empty = apply_covariance_operator(laplacian(), GalerkinLevel{0}, {}, {});
  EXPECT_TRUE(empty.first.empty());
  EXPECT_TRUE(empty.second.empty());
  const std::vector<double> v{1.0};
  const std::vector<double> w{0.0};
  const auto out = apply_covariance_operator(laplacian(), GalerkinLevel{1}, v, w);
  EXPECT_NEAR(out.first[0], 1.0 / (2.0 * kPi2), 1e-16);
  EXPECT_NEAR(out.second[0], 0.0, 1e-17);
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW((void)apply_covariance_operator(laplacian(), GalerkinLevel{1}, two, w),
               InvariantViolation);
}

TEST(CovarianceOperator, Symmetric) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const auto model = SpectralModel::build(1.3, 1.7, -0.4, 2.2);
  for (std::uint64_t n : {1u, 2u, 7u, 16u, 32u}) {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> v1(n), w1(n), v2(n), w2(n);
      for (std::uint64_t i = 0; i < n; ++i) {
        v1[i] = g(rng);
        w1[i] = g(rng);
        v2[i] = g(rng);
        w2[i] = g(rng);
      }
      const auto q1 = apply_covariance_operator(model, GalerkinLevel{n}, v1, w1);
      const auto q2 = apply_covariance_operator(model, GalerkinLevel{n}, v2, w2);
      double a = 0.0;
      double b = 0.0;
      double scale = 0.0;
      for (std::uint64_t i = 0; i < n; ++i) {
        a += v2[i] * q1.first[i] + w2[i] * q1.second[i];
        b += v1[i] * q2.first[i] + w1[i] * q2.second[i];
        scale += std::abs(v2[i] * q1.first[i]) + std::abs(w2[i] * q1.second[i]);
      }
      EXPECT_NEAR(a, b, 1e-12 * scale);
    }
  }
}

TEST(SecondMoments, BaselValues) {
  const auto m = laplacian();
  EXPECT_NEAR(total_second_moment(m, kAllModes), 1.0 / 6.0, 1e-11);
  EXPECT_NEAR(component_second_moment(m, kAllModes, Component::first), 1.0 / 12.0, 1e-11);
  EXPECT_NEAR(component_second_moment(m, kAllModes, Component::second), 1.0 / 12.0, 1e-11);
  EXPECT_NEAR(total_second_moment(m, GalerkinLevel{1}), 1.0 / kPi2, 1e-16);
  EXPECT_EQ(total_second_moment(m, GalerkinLevel{0}), 0.0);
  EXPECT_EQ(component_second_moment(m, GalerkinLevel{0}, Component::second), 0.0);
  EXPECT_THROW((void)component_second_moment(m, GalerkinLevel{3}, Component::both),
               InvariantViolation);
}

TEST(SecondMoments, ComponentsSumToTotal) {
  for (const auto& pr : sweep_models()) {
    const auto m = SpectralModel::build(pr.c, pr.p, pr.delta, pr.T);
    for (std::uint64_t n : {1u, 3u, 10u, 100u}) {
      const double total = total_second_moment(m, GalerkinLevel{n});
      const double sum = component_second_moment(m, GalerkinLevel{n}, Component::first) +
                         component_second_moment(m, GalerkinLevel{n}, Component::second);
      EXPECT_NEAR(sum, total, 1e-14 * total);
    }
  }
}

TEST(GapExact, LaplacianFirstLevel) {
  const auto m = laplacian();
  // 1/6 - 1/pi^2 and its half.
  EXPECT_NEAR(gap_exact(m, GalerkinLevel{1}, Component::both), 0.0653454830243289, 1e-11);
  EXPECT_NEAR(gap_exact(m, GalerkinLevel{1}, Component::first), 0.0326727415121644, 1e-11);
  EXPECT_NEAR(gap_exact(m, GalerkinLevel{1}, Component::second), 0.0326727415121644, 1e-11);
  EXPECT_NEAR(gap_exact(m, GalerkinLevel{1}, Component::both), 1.0 / 6.0 - 1.0 / kPi2, 1e-11);
}

TEST(GapExact, TelescopesAndIsPositive) {
  for (const auto& pr : sweep_models()) {
    const auto m = SpectralModel::build(pr.c, pr.p, pr.delta, pr.T);
    const auto all = tail_series(m, GalerkinLevel{0}, Component::both);
    for (std::uint64_t n : {1u, 2u, 5u, 50u}) {
      const auto tail = tail_series(m, GalerkinLevel{n}, Component::both);
      EXPECT_GT(tail.value, 0.0);
      const double diff = all.value - total_second_moment(m, GalerkinLevel{n});
      EXPECT_NEAR(tail.value, diff, all.bracket_width + tail.bracket_width + 1e-14 * all.value);
    }
  }
}

TEST(GapExact, BracketMeetsTolerance) {
  const auto m = laplacian();
  const auto t = tail_series(m, GalerkinLevel{10}, Component::both);
  EXPECT_LE(t.bracket_width, std::max(1e-12, 1e-10 * t.value));
  EXPECT_GT(t.terms, 0u);
}

TEST(GapExact, TermCapWidensBracketInsteadOfLooping) {
  // q = -1.02: the tolerance would need ~1e10 terms.
  const auto m = SpectralModel::build(1.0, 2.0, 0.245, 1.0);
  SeriesOptions opt;
  opt.max_terms = 1u << 12;
  const auto t = tail_series(m, GalerkinLevel{1}, Component::both, opt);
  EXPECT_EQ(t.terms, opt.max_terms);
  EXPECT_GT(t.bracket_width, 1e-10 * t.value);
  EXPECT_GT(t.value - 0.5 * t.bracket_width, 0.0);
}

TEST(TailProfile, MatchesSingleTails) {
  for (const auto& pr : sweep_models()) {
    const auto m = SpectralModel::build(pr.c, pr.p, pr.delta, pr.T);
    for (Component comp : {Component::both, Component::first, Component::second}) {
      const TailProfile prof(m, comp, 64);
      for (std::uint64_t n : {0u, 1u, 9u, 64u}) {
        const auto a = prof.at(GalerkinLevel{n});
        const auto b = tail_series(m, GalerkinLevel{n}, comp);
        EXPECT_NEAR(a.value, b.value, a.bracket_width + b.bracket_width + 1e-15 * b.value);
      }
    }
  }
}

TEST(TailSumLower, Examples) {
  EXPECT_DOUBLE_EQ(tail_sum_lower(2.0, 0.0, 1), 0.5);
  EXPECT_DOUBLE_EQ(tail_sum_lower(2.0, 0.0, 10), 0.05);
  EXPECT_GE(kPi2 / 6.0 - 1.0, tail_sum_lower(2.0, 0.0, 1));
  double tail10 = 0.0;
  for (int n = 1000000; n > 10; --n) tail10 += 1.0 / (double(n) * n);
  EXPECT_NEAR(tail10, 0.0951663, 2e-6);
  EXPECT_THROW((void)tail_sum_lower(2.0, 0.25, 3), InvariantViolation);
  EXPECT_THROW((void)tail_sum_lower(0.0, -1.0, 3), InvariantViolation);
  EXPECT_THROW((void)tail_sum_lower(2.0, 0.0, 0), InvariantViolation);
}

TEST(TailSumLower, PositiveOnGrid) {
  for (double p : {0.5, 1.0, 2.0, 3.5, 8.0}) {
    for (double d : {-3.0, -1.0, 0.5 - 0.5 / p - 0.01}) {
      for (std::uint64_t n : {1u, 10u, 1000u}) EXPECT_GT(tail_sum_lower(p, d, n), 0.0);
    }
  }
}

TEST(SeriesUpper, Examples) {
  EXPECT_DOUBLE_EQ(series_upper(2.0, 0.0), 2.0);
  EXPECT_DOUBLE_EQ(series_upper(4.0, 0.25), 2.0);
  EXPECT_LE(kPi2 / 6.0, series_upper(2.0, 0.0));
  for (double p : {0.7, 1.0, 2.0, 5.0}) {
    for (double d : {-2.0, -0.5, 0.5 - 0.5 / p - 0.02}) EXPECT_GT(series_upper(p, d), 1.0);
  }
}

TEST(BoundInf, ConstantWeights) {
  const auto m = SpectralModel::with_constant_weight(kPi2, 2.0, 1.0, 1.0);
  EXPECT_NEAR(bound_inf(m, GalerkinLevel{1}), 1.0 / (2.0 * kPi2), 1e-16);
  EXPECT_LE(bound_inf(m, GalerkinLevel{1}), gap_exact(m, GalerkinLevel{1}, Component::both));
  EXPECT_NEAR(bound_inf(m, GalerkinLevel{100}) / bound_inf(m, GalerkinLevel{200}), 2.0, 1e-12);
  EXPECT_THROW((void)bound_inf(SpectralModel::build(1.0, 1.0, -0.5, 1.0), GalerkinLevel{1}),
               InvariantViolation);
  EXPECT_THROW((void)bound_inf(SpectralModel::build(1.0, 2.0, -0.5, 1.0), GalerkinLevel{1}),
               InvariantViolation);
}

TEST(BoundDelta, ExamplesAndIdentity) {
  EXPECT_NEAR(bound_delta(laplacian(), GalerkinLevel{1}), 0.0506605918211689, 1e-15);
  for (const auto& pr : sweep_models()) {
    const auto m = SpectralModel::build(pr.c, pr.p, pr.delta, pr.T);
    for (std::uint64_t n : {1u, 4u, 33u}) {
      EXPECT_NEAR(bound_delta(m, GalerkinLevel{n}),
                  pr.T * std::pow(pr.c, 2.0 * pr.delta - 1.0) * tail_sum_lower(pr.p, pr.delta, n),
                  1e-14 * bound_delta(m, GalerkinLevel{n}));
    }
  }
}

TEST(ExpErrorLower, LaplacianFirstLevel) {
  const auto m = laplacian();
  EXPECT_NEAR(exp_error_lower(m, GalerkinLevel{1}, Component::first), 0.0198170194639934, 1e-12);
  EXPECT_NEAR(exp_error_lower(m, GalerkinLevel{1}, Component::first),
              (1.0 / 12.0 - 1.0 / (2.0 * kPi2)) / std::exp(0.5), 1e-12);
  double prev = INFINITY;
  for (std::uint64_t n = 1; n <= 64; n *= 2) {
    const double v = exp_error_lower(m, GalerkinLevel{n}, Component::second);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(BoundExp, LaplacianFirstLevel) {
  const auto m = laplacian();
  EXPECT_NEAR(bound_exp(m, GalerkinLevel{1}, Component::first), 0.00654532766323441, 1e-15);
  EXPECT_NEAR(bound_exp(m, GalerkinLevel{1}, Component::second), 0.0068235436573189628, 1e-15);
  EXPECT_THROW((void)bound_exp(m, GalerkinLevel{1}, Component::both), InvariantViolation);
  EXPECT_THROW((void)bound_exp(m, GalerkinLevel{0}, Component::first), InvariantViolation);
}

TEST(BoundExp, MatchesLaplacianFormula) {
  for (double delta : {0.0, 0.1, -0.5, -2.0}) {
    for (double T : {1.0, 0.37, 2.5}) {
      const auto m = SpectralModel::build(kPi2, 2.0, delta, T);
      for (std::uint64_t n = 1; n <= 32; ++n) {
        for (Component i : {Component::first, Component::second}) {
          const double a = bound_exp(m, GalerkinLevel{n}, i);
          const double b = bound_laplacian(delta, T, GalerkinLevel{n}, i);
          EXPECT_NEAR(a, b, 1e-12 * b);
        }
      }
    }
  }
}

TEST(InfSinc, ReferenceValues) {
  EXPECT_NEAR(inf_sinc(2.0 * kPi, +1), -0.0913252028230577, 1e-14);
  EXPECT_NEAR(inf_sinc(2.0 * kPi, -1), -0.128374553525899, 1e-14);
  EXPECT_NEAR(detail::sinc_stationary_point(3), 10.9041216594, 1e-9);
  EXPECT_NEAR(detail::sinc_stationary_point(2), 7.7252518369, 1e-9);
  for (int s : {-1, 1}) {
    const double v = inf_sinc(1000.0, s);
    EXPECT_GE(v, -0.001);
    EXPECT_LE(v, 0.0);
  }
  EXPECT_THROW((void)inf_sinc(0.0, 1), InvariantViolation);
  EXPECT_THROW((void)inf_sinc(1.0, 0), InvariantViolation);
}

TEST(InfSinc, BruteForceAndPositivity) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> la(std::log(1e-3), std::log(200.0));
  for (int k = 0; k < 60; ++k) {
    const double a = std::exp(la(rng));
    for (int s : {-1, 1}) {
      const double v = inf_sinc(a, s);
      EXPECT_GT(1.0 + v, 0.0);
      EXPECT_GE(v, -1.0 / a - 1e-15);
      // Dense grid over [a, a + 60] never undercuts the result.
      double grid = s * std::sin(a) / a;
      for (double x = a; x <= a + 60.0; x += 1e-3) grid = std::min(grid, s * std::sin(x) / x);
      EXPECT_LE(v, grid + 1e-15);
      EXPECT_GE(v, grid - 1e-6);
    }
  }
}

TEST(Certification, BoundDeltaAndChainSweep) {
  int checked = 0;
  for (const auto& pr : sweep_models()) {
    const auto m = SpectralModel::build(pr.c, pr.p, pr.delta, pr.T);
    const TailProfile both(m, Component::both, 64);
    const TailProfile first(m, Component::first, 64);
    const TailProfile second(m, Component::second, 64);
    const double a = 2.0 * std::sqrt(pr.c) * pr.T;
    for (std::uint64_t n = 1; n <= 64; ++n) {
      const GalerkinLevel level{n};
      const auto g = both.at(level);
      const double bd = bound_delta(m, level);
      EXPECT_TRUE(make_certificate(level, g, bd, "bound_delta").satisfied) << n;
      const double g_hi = g.value + 0.5 * g.bracket_width;
      const double g_lo = g.value - 0.5 * g.bracket_width;
      for (const auto& [prof, sign] : {std::pair{&first, -1}, std::pair{&second, 1}}) {
        const auto gi = prof->at(level);
        const double weighted = (1.0 + inf_sinc(a, sign)) * 0.5 * g_hi;
        EXPECT_GE(gi.value - 0.5 * gi.bracket_width, weighted) << n;
        EXPECT_GE((1.0 + inf_sinc(a, sign)) * 0.5 * g_lo, (1.0 + inf_sinc(a, sign)) * 0.5 * bd) << n;
      }
      ++checked;
    }
  }
  EXPECT_GE(checked, 6 * 64);
}

TEST(Certification, BoundInfConstantWeights) {
  for (auto [c, p, mu, T] : {std::tuple{kPi2, 2.0, 1.0, 1.0}, std::tuple{2.0, 3.0, 0.7, 0.5},
                             std::tuple{0.5, 1.2, 2.0, 4.0}}) {
    const auto m = SpectralModel::with_constant_weight(c, p, T, mu);
    for (std::uint64_t n = 1; n <= 64; ++n) {
      const auto cert = certify_bound_inf(m, GalerkinLevel{n});
      EXPECT_TRUE(cert.satisfied) << n;
      EXPECT_EQ(cert.source, "bound_inf");
    }
  }
}

TEST(Certification, SatisfiedMatchesComparison) {
  const auto cert = make_certificate(GalerkinLevel{3}, {1.0, 0.0, 1}, 1.0, "x");
  EXPECT_TRUE(cert.satisfied);
  const auto fail = make_certificate(GalerkinLevel{3}, {1.0, 0.0, 1}, 1.0 + 1e-15, "x");
  EXPECT_FALSE(fail.satisfied);
}
