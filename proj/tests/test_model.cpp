#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "gwave/config.hpp"
#include "gwave/model.hpp"

using gwave::InvariantViolation;
using gwave::ModeIndex;
using gwave::SpectralModel;

namespace {
constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
}

TEST(SpectralModel, LaplacianEigenpairs) {
  const auto m = SpectralModel::build(kPi2, 2.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(m.eigenvalue(ModeIndex{1}), -kPi2);
  EXPECT_DOUBLE_EQ(m.noise_weight(ModeIndex{1}), 1.0);
  EXPECT_DOUBLE_EQ(m.eigenvalue(ModeIndex{3}), -9.0 * kPi2);
  EXPECT_DOUBLE_EQ(m.frequency(3), 3.0 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(m.density_exponent(), -2.0);
}

TEST(SpectralModel, RejectsTraceBoundary) {
  try {
    (void)SpectralModel::build(1.0, 2.0, 0.25, 1.0);
    FAIL() << "boundary delta accepted";
  } catch (const InvariantViolation& e) {
    EXPECT_NE(std::string(e.what()).find("trace condition"), std::string::npos);
  }
}

TEST(SpectralModel, AcceptsSlowGrowthWithNegativeDelta) {
  const auto m = SpectralModel::build(1.0, 0.5, -1.0, 2.0);
  EXPECT_LT(m.density_exponent(), -1.0);
  EXPECT_DOUBLE_EQ(m.weight_infimum(), 0.0);
}

TEST(SpectralModel, RejectsBadScalars) {
  EXPECT_THROW((void)SpectralModel::build(0.0, 2.0, 0.0, 1.0), InvariantViolation);
  EXPECT_THROW((void)SpectralModel::build(-1.0, 2.0, 0.0, 1.0), InvariantViolation);
  EXPECT_THROW((void)SpectralModel::build(1.0, 0.0, -5.0, 1.0), InvariantViolation);
  EXPECT_THROW((void)SpectralModel::build(1.0, 2.0, 0.0, 0.0), InvariantViolation);
  EXPECT_THROW((void)SpectralModel::build(NAN, 2.0, 0.0, 1.0), InvariantViolation);
  EXPECT_THROW((void)SpectralModel::build(1.0, 2.0, INFINITY, 1.0), InvariantViolation);
  EXPECT_THROW((void)SpectralModel::build(1.0, 2.0, 0.0, -INFINITY), InvariantViolation);
}

TEST(ModeIndex, StartsAtOne) {
  EXPECT_THROW((void)ModeIndex{0}, InvariantViolation);
  EXPECT_EQ(ModeIndex{5}.n, 5u);
}

TEST(EtaToModel, Mapping) {
  const auto half = gwave::eta_to_model(0.5, kPi2, 1.0);
  EXPECT_DOUBLE_EQ(half.p(), 2.0);
  EXPECT_DOUBLE_EQ(half.delta(), 0.0);
  const auto one = gwave::eta_to_model(1.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(one.p(), 1.0);
  EXPECT_DOUBLE_EQ(one.delta(), -0.5);
  const auto quarter = gwave::eta_to_model(0.25, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(quarter.p(), 4.0);
  EXPECT_DOUBLE_EQ(quarter.delta(), 0.25);
  EXPECT_THROW((void)gwave::eta_to_model(0.0, 1.0, 1.0), InvariantViolation);
  EXPECT_THROW((void)gwave::eta_to_model(-1.0, 1.0, 1.0), InvariantViolation);
}

TEST(EtaToModel, ValidAcrossRepresentableRange) {
  for (double e = 1e-6; e < 1e6; e *= 1.7) {
    const auto m = gwave::eta_to_model(e, 2.0, 1.0);
    EXPECT_LT(m.density_exponent(), -1.0) << e;
    EXPECT_NEAR(m.eta(), e, 1e-9 * e) << e;
  }
}

TEST(SpectralModel, RandomSweepInvariants) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double p = 0.2 + 5.0 * u(rng);
    const double limit = 0.5 - 0.5 / p;
    const double delta = limit - 0.01 - 3.0 * u(rng);
    const auto m = SpectralModel::build(0.1 + 10.0 * u(rng), p, delta, 0.1 + 3.0 * u(rng));
    EXPECT_LT(m.density_exponent(), -1.0);
    double prev = 0.0;
    for (std::uint64_t n = 1; n <= 50; ++n) {
      const double lam = m.eigenvalue(ModeIndex{n});
      EXPECT_LT(lam, 0.0);
      if (n > 1) {
        EXPECT_LT(lam, prev);
      }
      prev = lam;
      EXPECT_GT(m.noise_weight(ModeIndex{n}), 0.0);
      EXPECT_NEAR(m.trace_density(n),
                  std::pow(m.noise_weight(ModeIndex{n}), 2) / m.abs_eigenvalue(n),
                  1e-12 * m.trace_density(n));
    }
  }
}

TEST(SpectralModel, ConstantWeights) {
  const auto m = SpectralModel::with_constant_weight(kPi2, 2.0, 1.0, 1.0);
  EXPECT_FALSE(m.has_power_law_weights());
  EXPECT_DOUBLE_EQ(m.weight_infimum(), 1.0);
  EXPECT_DOUBLE_EQ(m.noise_weight(ModeIndex{7}), 1.0);
  EXPECT_THROW((void)SpectralModel::with_constant_weight(1.0, 1.0, 1.0, 1.0), InvariantViolation);
}

TEST(SpectralModel, CustomWeightsOutsideDeclaredBoundsAreCaught) {
  const auto m = SpectralModel::with_weights(
      1.0, 2.0, 1.0, [](std::uint64_t n) { return n < 10 ? 1.0 : 5.0; }, 0.5, 2.0);
  EXPECT_DOUBLE_EQ(m.noise_weight(ModeIndex{3}), 1.0);
  EXPECT_THROW((void)m.noise_weight(ModeIndex{10}), InvariantViolation);
}

TEST(ModelJson, RoundTrip) {
  const auto m = SpectralModel::build(3.7, 2.5, -0.3, 0.9);
  const auto back = gwave::model_from_json(gwave::model_to_json(m));
  EXPECT_EQ(back.c(), m.c());
  EXPECT_EQ(back.p(), m.p());
  EXPECT_EQ(back.delta(), m.delta());
  EXPECT_EQ(back.T(), m.T());
}

TEST(ModelJson, EtaForm) {
  const auto m = gwave::model_from_json({{"eta", 0.5}, {"c", kPi2}, {"T", 1.0}});
  EXPECT_DOUBLE_EQ(m.p(), 2.0);
  EXPECT_DOUBLE_EQ(m.delta(), 0.0);
}

TEST(ModelJson, RejectsAmbiguousOrInvalid) {
  using J = nlohmann::json;
  EXPECT_THROW((void)gwave::model_from_json(J{{"eta", 0.5}, {"p", 2}, {"c", 1}, {"T", 1}}),
               gwave::ConfigError);
  EXPECT_THROW((void)gwave::model_from_json(J{{"p", 2}, {"c", 1}, {"T", 1}}), gwave::ConfigError);
  EXPECT_THROW((void)gwave::model_from_json(J{{"p", 2}, {"delta", 0.25}, {"c", 1}, {"T", 1}}),
               gwave::ConfigError);
  EXPECT_THROW((void)gwave::model_from_json(J{{"p", 2}, {"delta", 0}, {"c", "1"}, {"T", 1}}),
               gwave::ConfigError);
}
