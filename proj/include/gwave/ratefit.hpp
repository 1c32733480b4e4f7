#pragma once

// Empirical convergence orders and the two-sided rate certificate
//   c_low lambda_N^{-eta} <= error_N <= C_high lambda_N^{epsilon - eta}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gwave/model.hpp"

namespace gwave {

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of log y on log x.
inline LogLogFit fit_loglog(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvariantViolation("fit_loglog needs equal lengths");
  if (xs.size() < 2) throw InvariantViolation("fit_loglog needs at least two points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> lx(xs.size());
  std::vector<double> ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw InvariantViolation("fit_loglog needs finite positive inputs");
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double dx = lx[i] - mx;
    const double dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw InvariantViolation("fit_loglog needs at least two distinct x values");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // A flat response is fitted exactly.
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

struct SandwichConstants {
  double c_low = 0.0;
  double C_high = 0.0;
  double epsilon = 0.0;
};

struct RateReport {
  std::vector<std::uint64_t> levels;
  /// |lambda_N| = c N^p.
  std::vector<double> lambda_values;
  std::vector<double> errors;
  /// Half-width of each error's uncertainty interval (0 for exact errors).
  std::vector<double> tolerances;
  /// Fit of log error against log |lambda_N|.
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  /// Fit of log error against log N.
  double slope_in_n = 0.0;
  double eta_expected = 0.0;
  SandwichConstants sandwich;
  /// c_low and C_high restricted to the lower and upper half of the levels.
  SandwichConstants lower_half;
  SandwichConstants upper_half;
  /// max / min of error_N lambda_N^eta over all levels.
  double scaled_spread = 0.0;
  /// c_low > 0 and both inequalities hold at every level.
  bool certified = false;
};

namespace detail {

inline SandwichConstants sandwich_over(std::span<const double> lambdas,
                                       std::span<const double> errors,
                                       std::span<const double> tolerances, double eta,
                                       double epsilon) {
  SandwichConstants s{std::numeric_limits<double>::infinity(), 0.0, epsilon};
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double lo = errors[i] - tolerances[i];
    const double hi = errors[i] + tolerances[i];
    s.c_low = std::min(s.c_low, lo * std::pow(lambdas[i], eta));
    s.C_high = std::max(s.C_high, hi * std::pow(lambdas[i], eta - epsilon));
  }
  return s;
}

}  // namespace detail

/// Builds the rate report for errors observed at `levels`. With nonzero
/// tolerances the worst-case interval endpoints enter the constants.
inline RateReport certify_sandwich(const SpectralModel& model, double eta,
                                   std::span<const std::uint64_t> levels,
                                   std::span<const double> errors, double epsilon,
                                   std::span<const double> tolerances = {}) {
  if (levels.empty()) throw InvariantViolation("certify_sandwich needs at least one level");
  if (errors.size() != levels.size()) throw InvariantViolation("one error per level is required");
  if (!tolerances.empty() && tolerances.size() != levels.size()) {
    throw InvariantViolation("one tolerance per level is required");
  }
  if (!(epsilon > 0.0)) throw InvariantViolation("epsilon must be > 0");
  const double expected = model.eta();
  if (!(std::abs(eta - expected) <= 1e-12 * std::max(1.0, std::abs(expected)))) {
    throw InvariantViolation("eta is inconsistent with the model: expected -(p(2 delta-1)+1)/p");
  }
  RateReport r;
  r.eta_expected = eta;
  r.levels.assign(levels.begin(), levels.end());
  r.errors.assign(errors.begin(), errors.end());
  r.tolerances = tolerances.empty() ? std::vector<double>(levels.size(), 0.0)
                                    : std::vector<double>(tolerances.begin(), tolerances.end());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == 0 || (i > 0 && levels[i] <= levels[i - 1])) {
      throw InvariantViolation("levels must be positive and strictly increasing");
    }
    if (!(errors[i] > 0.0)) throw InvariantViolation("errors must be strictly positive");
    r.lambda_values.push_back(model.abs_eigenvalue(levels[i]));
  }
  r.sandwich = detail::sandwich_over(r.lambda_values, r.errors, r.tolerances, eta, epsilon);
  const std::size_t half = levels.size() / 2;
  if (half > 0) {
    const std::span<const double> lam(r.lambda_values);
    const std::span<const double> err(r.errors);
    const std::span<const double> tol(r.tolerances);
    r.lower_half = detail::sandwich_over(lam.first(half), err.first(half), tol.first(half), eta,
                                         epsilon);
    r.upper_half = detail::sandwich_over(lam.subspan(half), err.subspan(half), tol.subspan(half),
                                         eta, epsilon);
  } else {
    r.lower_half = r.upper_half = r.sandwich;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double scaled = r.errors[i] * std::pow(r.lambda_values[i], eta);
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  r.scaled_spread = hi / lo;
  if (levels.size() >= 2) {
    const LogLogFit in_lambda = fit_loglog(r.lambda_values, r.errors);
    r.slope = in_lambda.slope;
    r.intercept = in_lambda.intercept;
    r.r_squared = in_lambda.r_squared;
    std::vector<double> ns(levels.begin(), levels.end());
    r.slope_in_n = fit_loglog(ns, r.errors).slope;
  } else {
    r.r_squared = 1.0;
  }
  // The constants are extremal by construction; the slack absorbs the
  // rounding of lambda^eta * lambda^-eta.
  constexpr double kSlack = 1.0 + 1e-12;
  bool ok = r.sandwich.c_low > 0.0 && std::isfinite(r.sandwich.C_high);
  for (std::size_t i = 0; ok && i < levels.size(); ++i) {
    const double lam = r.lambda_values[i];
    const double lo_end = r.errors[i] - r.tolerances[i];
    const double hi_end = r.errors[i] + r.tolerances[i];
    ok = r.sandwich.c_low * std::pow(lam, -eta) <= lo_end * kSlack &&
         hi_end <= r.sandwich.C_high * std::pow(lam, epsilon - eta) * kSlack;
  }
  r.certified = ok;
  return r;
}

}  // namespace gwave
