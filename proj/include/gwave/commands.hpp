#pragma once

// Command implementations behind the gwave executable. Each command reads a
// RunConfig, writes its CSV table(s), a JSON mirror and manifest.json into
// the output directory, and returns a process exit code.
//
// Column sets:
//   exact.csv   N, lambda_N, second_moment, gap, gap_width, gap_1, gap_2,
//               bound_delta, bound_delta_ok, bound_inf, bound_inf_ok,
//               exp_error_lower_1, exp_error_lower_2, bound_exp_1, bound_exp_2,
//               exp_chain_1_ok, exp_chain_2_ok
//   mc.csv      N, M, test_function, mean, std_error, n, exact_value,
//               lower_bound, truncation_bias_bound, certified, violated
//   rates.csv   N, lambda_N, error, tolerance, scaled_error, lower_envelope,
//               upper_envelope
//   rates_summary.csv  one row, see kRatesSummaryColumns
//   oracle.csv  mode, K, paths, quantity, closed_form, estimate, std_error,
//               z_score, within_4se

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwave/analytics.hpp"
#include "gwave/config.hpp"
#include "gwave/model.hpp"
#include "gwave/montecarlo.hpp"
#include "gwave/ratefit.hpp"
#include "gwave/report.hpp"
#include "gwave/sampler.hpp"

namespace gwave::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kConfigError = 2, kCertificationFailure = 3, kNumericFault = 4 };

struct CommandOptions {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
  bool plot = false;
};

namespace detail {

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects outputs and writes them together with manifest.json.
class RunWriter {
 public:
  RunWriter(std::string command, const RunConfig& cfg, const CommandOptions& opt)
      : command_(std::move(command)), cfg_(cfg), opt_(opt), started_(utc_now()) {
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    if (ec || !std::filesystem::is_directory(opt.out_dir)) {
      throw ConfigError("cannot create output directory " + opt.out_dir.string());
    }
  }

  void table(const std::string& file, const Table& t) {
    write_text_file(opt_.out_dir / file, t.to_csv());
    outputs_.push_back(file);
    tables_[file] = t.to_json();
  }

  void text(const std::string& file, const std::string& body) {
    write_text_file(opt_.out_dir / file, body);
    outputs_.push_back(file);
  }

  void tolerance(const std::string& key, nlohmann::json value) { tolerances_[key] = std::move(value); }

  int finish(int exit_code) {
    const std::string report_file = command_ + ".json";
    outputs_.push_back(report_file);
    nlohmann::json manifest = {
        {"artifact", "gwave"},
        {"version", kVersion},
        {"command", command_},
        {"config", cfg_.source},
        {"seed", cfg_.seed},
        {"threads", opt_.threads},
        {"started_at", started_},
        {"finished_at", utc_now()},
        {"outputs", outputs_},
        {"tolerances", tolerances_},
        {"exit_code", exit_code},
    };
    nlohmann::json report = {{"manifest", manifest}, {"tables", tables_}};
    write_text_file(opt_.out_dir / report_file, report.dump(2) + "\n");
    write_text_file(opt_.out_dir / "manifest.json", manifest.dump(2) + "\n");
    return exit_code;
  }

 private:
  std::string command_;
  const RunConfig& cfg_;
  const CommandOptions& opt_;
  std::string started_;
  std::vector<std::string> outputs_;
  nlohmann::json tables_ = nlohmann::json::object();
  nlohmann::json tolerances_ = nlohmann::json::object();
};

inline void require_levels(const RunConfig& cfg) {
  if (cfg.levels.empty()) throw ConfigError("'levels' (or 'levels_dyadic') is required and must be non-empty");
}

inline ParallelOptions parallel(const RunConfig& cfg, const CommandOptions& opt) {
  return {opt.threads == 0 ? 1u : opt.threads, cfg.batch_size};
}

/// Reference level for an MC row: the configured one, or the smallest
/// dyadic multiple of N whose bias bound is a fraction of the target bound.
inline std::uint64_t reference_for(const SpectralModel& model, const RunConfig& cfg,
                                   std::uint64_t n, TestFunction f) {
  if (cfg.reference_level) {
    if (*cfg.reference_level <= n) {
      throw ConfigError("reference_level must exceed every level, got M = " +
                        std::to_string(*cfg.reference_level) + " for N = " + std::to_string(n));
    }
    return *cfg.reference_level;
  }
  const double scale = analytic_lower_bound(model, GalerkinLevel{n}, f);
  return choose_reference_level(model, GalerkinLevel{n}, cfg.target_bias_fraction, scale);
}

}  // namespace detail

/// Exact second moments, gaps and every analytic bound per level.
inline int cmd_exact(const RunConfig& cfg, const CommandOptions& opt) {
  detail::require_levels(cfg);
  const SpectralModel model = cfg.model();
  detail::RunWriter out("exact", cfg, opt);
  const std::uint64_t top = cfg.levels.back();
  const TailProfile both(model, Component::both, top);
  const TailProfile first(model, Component::first, top);
  const TailProfile second(model, Component::second, top);
  const double full_1 = first.at(GalerkinLevel{0}).value;
  const double full_2 = second.at(GalerkinLevel{0}).value;
  const bool inf_applicable = model.p() > 1.0 && model.weight_infimum() > 0.0;

  Table t({"N", "lambda_N", "second_moment", "gap", "gap_width", "gap_1", "gap_2", "bound_delta",
           "bound_delta_ok", "bound_inf", "bound_inf_ok", "exp_error_lower_1", "exp_error_lower_2",
           "bound_exp_1", "bound_exp_2", "exp_chain_1_ok", "exp_chain_2_ok"});
  bool all_ok = true;
  for (std::uint64_t n : cfg.levels) {
    const GalerkinLevel level{n};
    const SeriesValue gap = both.at(level);
    const SeriesValue gap1 = first.at(level);
    const SeriesValue gap2 = second.at(level);
    const double gap_lo = gap.value - 0.5 * gap.bracket_width;
    const double bd = bound_delta(model, level);
    const bool bd_ok = gap_lo >= bd;
    Cell bi;
    Cell bi_ok;
    if (inf_applicable) {
      const double v = bound_inf(model, level);
      bi = v;
      bi_ok = gap_lo >= v;
      all_ok = all_ok && gap_lo >= v;
    }
    const double inf1 = inf_sinc(2.0 * std::sqrt(model.c()) * model.T(), -1);
    const double inf2 = inf_sinc(2.0 * std::sqrt(model.c()) * model.T(), +1);
    const double e1 = gap1.value / std::exp(6.0 * full_1);
    const double e2 = gap2.value / std::exp(6.0 * full_2);
    const double b1 = bound_exp(model, level, Component::first);
    const double b2 = bound_exp(model, level, Component::second);
    // component_gap >= (1 + inf) gap / 2 >= (1 + inf) bound_delta / 2, and
    // the exp-error lower bound dominates bound_exp.
    const auto chain_ok = [&](const SeriesValue& g, double inf, double e, double b) {
      const double g_lo = g.value - 0.5 * g.bracket_width;
      const double weighted_hi = (1.0 + inf) * 0.5 * (gap.value + 0.5 * gap.bracket_width);
      const double weighted_lo = (1.0 + inf) * 0.5 * gap_lo;
      const double closed = (1.0 + inf) * 0.5 * bd;
      return g_lo >= weighted_hi && weighted_lo >= closed && e >= b && b > 0.0;
    };
    const bool c1 = chain_ok(gap1, inf1, e1, b1);
    const bool c2 = chain_ok(gap2, inf2, e2, b2);
    all_ok = all_ok && bd_ok && c1 && c2;
    t.add_row({n, model.abs_eigenvalue(n), total_second_moment(model, level), gap.value,
               gap.bracket_width, gap1.value, gap2.value, bd, bd_ok, bi, bi_ok, e1, e2, b1, b2, c1,
               c2});
  }
  out.table("exact.csv", t);
  out.tolerance("series_abs", SeriesOptions{}.abs_tol);
  out.tolerance("series_rel", SeriesOptions{}.rel_tol);
  return out.finish(all_ok ? kOk : kCertificationFailure);
}

/// Coupled Monte Carlo weak errors against their analytic lower bounds.
inline int cmd_mc(const RunConfig& cfg, const CommandOptions& opt) {
  detail::require_levels(cfg);
  if (cfg.num_samples < 2) throw ConfigError("'num_samples' must be >= 2");
  const SpectralModel model = cfg.model();
  const ParallelOptions par = detail::parallel(cfg, opt);
  // Resolve every reference level before any sampling so bad configs fail fast.
  std::vector<std::uint64_t> refs;
  for (std::uint64_t n : cfg.levels) {
    for (TestFunction f : cfg.test_functions) refs.push_back(detail::reference_for(model, cfg, n, f));
  }
  detail::RunWriter out("mc", cfg, opt);
  Table t({"N", "M", "test_function", "mean", "std_error", "n", "exact_value", "lower_bound",
           "truncation_bias_bound", "certified", "violated"});
  bool any_violated = false;
  std::size_t k = 0;
  for (std::uint64_t n : cfg.levels) {
    for (TestFunction f : cfg.test_functions) {
      EstimatorConfig ec;
      ec.num_samples = cfg.num_samples;
      ec.seed = cfg.seed;
      ec.reference_level = refs[k++];
      ec.target_bias_fraction = cfg.target_bias_fraction;
      const WeakErrorReport r = estimate_weak_error_coupled(model, GalerkinLevel{n}, f, ec, par);
      any_violated = any_violated || r.violated();
      t.add_row({n, r.reference_level, std::string(to_string(f)), r.estimate.mean,
                 r.estimate.std_error, r.estimate.n, optional_cell(r.exact_value), r.lower_bound,
                 r.truncation_bias_bound, r.certified(), r.violated()});
    }
  }
  out.table("mc.csv", t);
  out.tolerance("standard_errors", 3);
  out.tolerance("target_bias_fraction", cfg.target_bias_fraction);
  out.tolerance("batch_size", cfg.batch_size);
  return out.finish(any_violated ? kCertificationFailure : kOk);
}

inline const std::vector<std::string>& rates_summary_columns() {
  static const std::vector<std::string> cols{
      "source",          "levels",           "slope_lambda",      "slope_n",
      "expected_slope_n", "slope_tolerance", "slope_ok",          "intercept",
      "r_squared",       "eta",              "epsilon",           "c_low",
      "C_high",          "scaled_spread",    "lower_half_c_low",  "upper_half_c_low",
      "lower_half_C_high", "upper_half_C_high", "sandwich_certified"};
  return cols;
}

/// Convergence order fit and rate sandwich over the configured levels.
inline int cmd_rates(const RunConfig& cfg, const CommandOptions& opt) {
  detail::require_levels(cfg);
  if (cfg.levels.size() < 2) throw ConfigError("rates need at least two levels");
  const SpectralModel model = cfg.model();
  std::vector<double> errors;
  std::vector<double> tolerances;
  if (cfg.rate_source == "synthetic") {
    if (cfg.errors.size() != cfg.levels.size()) {
      throw ConfigError("'errors' must hold one value per level for rate_source = synthetic");
    }
    errors = cfg.errors;
    tolerances.assign(errors.size(), 0.0);
  } else if (cfg.rate_source == "exact") {
    const TailProfile both(model, Component::both, cfg.levels.back());
    for (std::uint64_t n : cfg.levels) {
      const SeriesValue g = both.at(GalerkinLevel{n});
      errors.push_back(g.value);
      tolerances.push_back(0.5 * g.bracket_width);
    }
  } else {
    if (cfg.num_samples < 2) throw ConfigError("'num_samples' must be >= 2");
    const ParallelOptions par = detail::parallel(cfg, opt);
    std::vector<std::uint64_t> refs;
    for (std::uint64_t n : cfg.levels) {
      refs.push_back(detail::reference_for(model, cfg, n, TestFunction::norm_sq));
    }
    for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
      EstimatorConfig ec;
      ec.num_samples = cfg.num_samples;
      ec.seed = cfg.seed;
      ec.reference_level = refs[i];
      const WeakErrorReport r = estimate_weak_error_coupled(model, GalerkinLevel{cfg.levels[i]},
                                                            TestFunction::norm_sq, ec, par);
      errors.push_back(r.estimate.mean);
      tolerances.push_back(3.0 * r.estimate.std_error + r.truncation_bias_bound);
    }
  }
  for (double e : errors) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw ConfigError("rate fitting needs finite positive errors, got " + format_real(e));
    }
  }
  detail::RunWriter out("rates", cfg, opt);
  const RateReport r = certify_sandwich(model, model.eta(), cfg.levels, errors, cfg.epsilon, tolerances);
  const double expected = cfg.expected_slope.value_or(model.density_exponent() + 1.0);
  const bool slope_ok = std::abs(r.slope_in_n - expected) <= cfg.slope_tolerance;
  const double eta = r.eta_expected;

  Table t({"N", "lambda_N", "error", "tolerance", "scaled_error", "lower_envelope",
           "upper_envelope"});
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    const double lam = r.lambda_values[i];
    t.add_row({r.levels[i], lam, r.errors[i], r.tolerances[i], r.errors[i] * std::pow(lam, eta),
               r.sandwich.c_low * std::pow(lam, -eta),
               r.sandwich.C_high * std::pow(lam, r.sandwich.epsilon - eta)});
  }
  out.table("rates.csv", t);

  Table s(rates_summary_columns());
  s.add_row({cfg.rate_source, static_cast<std::uint64_t>(r.levels.size()), r.slope, r.slope_in_n,
             expected, cfg.slope_tolerance, slope_ok, r.intercept, r.r_squared, eta,
             r.sandwich.epsilon, r.sandwich.c_low, r.sandwich.C_high, r.scaled_spread,
             r.lower_half.c_low, r.upper_half.c_low, r.lower_half.C_high, r.upper_half.C_high,
             r.certified});
  out.table("rates_summary.csv", s);

  if (opt.plot) {
    std::vector<double> ns(r.levels.begin(), r.levels.end());
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> fitted;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const double lam = r.lambda_values[i];
      lower.push_back(r.sandwich.c_low * std::pow(lam, -eta));
      upper.push_back(r.sandwich.C_high * std::pow(lam, r.sandwich.epsilon - eta));
      fitted.push_back(std::exp(r.intercept) * std::pow(lam, r.slope));
    }
    char label[64];
    std::snprintf(label, sizeof label, "fit, slope %.4f in N", r.slope_in_n);
    out.text("rates.svg",
             loglog_svg("Weak error vs. level", "N", "error",
                        {{"error (" + cfg.rate_source + ")", ns, r.errors, "#1f77b4", true, false},
                         {label, ns, fitted, "#1f77b4", false, false},
                         {"c_low lambda^-eta", ns, lower, "#2ca02c", false, true},
                         {"C_high lambda^(eps-eta)", ns, upper, "#d62728", false, true}}));
  }
  out.tolerance("slope_tolerance", cfg.slope_tolerance);
  out.tolerance("epsilon", cfg.epsilon);
  return out.finish(slope_ok ? kOk : kCertificationFailure);
}

/// Time-discretised stochastic integrals against the closed-form moments.
inline int cmd_oracle(const RunConfig& cfg, const CommandOptions& opt) {
  if (cfg.paths < 2) throw ConfigError("'paths' must be >= 2");
  if (cfg.time_steps < 1) throw ConfigError("'time_steps' must be >= 1");
  if (cfg.mode < 1) throw ConfigError("'mode' must be >= 1");
  const SpectralModel model = cfg.model();
  const ParallelOptions par = detail::parallel(cfg, opt);
  const PathOracle oracle(model, GalerkinLevel{cfg.mode}, cfg.time_steps);
  detail::RunWriter out("oracle", cfg, opt);
  const MomentPanel panel = sample_moment_panel(oracle, {cfg.mode}, cfg.paths, cfg.seed, par);
  const ModeMoments m = mode_moments(model, ModeIndex{cfg.mode}, true);
  const CoordinateMoments& cm = panel.moments.front();

  Table t({"mode", "K", "paths", "quantity", "closed_form", "estimate", "std_error", "z_score",
           "within_4se"});
  bool all_ok = true;
  const auto row = [&](const char* name, double exact, const RunningStats& s) {
    const Estimate e = to_estimate(s);
    const double z = e.std_error > 0.0 ? (e.mean - exact) / e.std_error
                                       : (e.mean == exact ? 0.0 : std::copysign(INFINITY, e.mean - exact));
    const bool ok = std::abs(z) <= 4.0;
    all_ok = all_ok && ok;
    t.add_row({cfg.mode, cfg.time_steps, cfg.paths, std::string(name), exact, e.mean, e.std_error, z,
               ok});
  };
  row("var1", m.var1, cm.xx);
  row("var2", m.var2, cm.yy);
  row("cov", m.cov, cm.xy);
  out.table("oracle.csv", t);
  out.tolerance("max_abs_z", 4.0);
  return out.finish(all_ok ? kOk : kCertificationFailure);
}

/// Loads the config file (or manifest), runs `command` and maps failures to
/// exit codes. Diagnostics go to `err`.
inline int run(const std::string& command, const std::filesystem::path& config_path,
               std::optional<std::uint64_t> seed, const CommandOptions& opt,
               std::ostream& err = std::cerr) {
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config file " + config_path.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    const RunConfig cfg = parse_config(std::move(doc), seed);
    if (command == "exact") return cmd_exact(cfg, opt);
    if (command == "mc") return cmd_mc(cfg, opt);
    if (command == "rates") return cmd_rates(cfg, opt);
    if (command == "oracle") return cmd_oracle(cfg, opt);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    err << "gwave: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvariantViolation& e) {
    err << "gwave: invariant violation: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericFault& e) {
    err << "gwave: numeric fault: " << e.what() << '\n';
    return kNumericFault;
  } catch (const std::exception& e) {
    err << "gwave: internal error: " << e.what() << '\n';
    return kNumericFault;
  }
}

}  // namespace gwave::cli
