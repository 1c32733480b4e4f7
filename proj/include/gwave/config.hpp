#pragma once

// Run configuration: a single flat JSON object.
//
//   model       c, T and either (p, delta) or eta
//   levels      [N1, N2, ...] or levels_dyadic: [from, to]
//   mc          num_samples, seed, reference_level | target_bias_fraction,
//               test_function ("norm_sq" | "phi_1" | "phi_2" or a list),
//               batch_size
//   rates       rate_source ("exact" | "mc" | "synthetic"), epsilon,
//               slope_tolerance, errors (synthetic), expected_slope
//   oracle      time_steps, paths, mode
//
// A run manifest is accepted as well; its "config" member is used.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwave/model.hpp"
#include "gwave/montecarlo.hpp"

namespace gwave {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  nlohmann::json source;  // flat document after seed override

  double c = 0.0;
  double T = 0.0;
  std::optional<double> p;
  std::optional<double> delta;
  std::optional<double> eta;

  std::vector<std::uint64_t> levels;

  std::uint64_t num_samples = 100000;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> reference_level;
  double target_bias_fraction = 0.01;
  std::vector<TestFunction> test_functions{TestFunction::norm_sq};
  std::uint64_t batch_size = 4096;

  std::string rate_source = "exact";
  double epsilon = 0.05;
  double slope_tolerance = 0.05;
  std::vector<double> errors;
  std::optional<double> expected_slope;

  std::uint64_t time_steps = 16384;
  std::uint64_t paths = 100000;
  std::uint64_t mode = 1;

  [[nodiscard]] SpectralModel model() const {
    if (eta) return eta_to_model(*eta, c, T);
    return SpectralModel::build(c, *p, *delta, T);
  }
};

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "c",           "p",          "delta",          "T",           "eta",
      "levels",      "levels_dyadic", "num_samples", "seed",        "reference_level",
      "target_bias_fraction", "test_function", "batch_size", "rate_source", "epsilon",
      "slope_tolerance", "errors", "expected_slope", "time_steps", "paths",
      "mode"};
  return keys;
}

inline double get_real(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("key '") + key + "' must be a number");
  return v.get<double>();
}

inline std::uint64_t get_count(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(std::string("key '") + key + "' must be a non-negative integer");
}

inline std::vector<std::uint64_t> parse_levels(const nlohmann::json& j) {
  std::vector<std::uint64_t> levels;
  if (j.contains("levels") && j.contains("levels_dyadic")) {
    throw ConfigError("give either 'levels' or 'levels_dyadic', not both");
  }
  if (j.contains("levels")) {
    const auto& arr = j.at("levels");
    if (!arr.is_array()) throw ConfigError("'levels' must be an array of integers");
    for (const auto& v : arr) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        throw ConfigError("'levels' entries must be integers >= 1");
      }
      levels.push_back(v.get<std::uint64_t>());
    }
  } else if (j.contains("levels_dyadic")) {
    const auto& arr = j.at("levels_dyadic");
    if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number_integer() ||
        !arr[1].is_number_integer() || arr[0].get<std::int64_t>() < 1 ||
        arr[1].get<std::int64_t>() < arr[0].get<std::int64_t>()) {
      throw ConfigError("'levels_dyadic' must be [from, to] with 1 <= from <= to");
    }
    const auto to = arr[1].get<std::uint64_t>();
    for (auto n = arr[0].get<std::uint64_t>(); n <= to; n *= 2) levels.push_back(n);
  }
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i] <= levels[i - 1]) throw ConfigError("levels must be strictly increasing");
  }
  return levels;
}

}  // namespace detail

/// Parses and validates a configuration document. `seed_override` replaces
/// the document's seed and is written back into `source`.
inline RunConfig parse_config(nlohmann::json doc, std::optional<std::uint64_t> seed_override = {}) {
  if (doc.is_object() && doc.contains("config") && doc.at("config").is_object()) {
    doc = doc.at("config");
  }
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!detail::known_config_keys().contains(key)) {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
  }
  if (seed_override) doc["seed"] = *seed_override;

  RunConfig cfg;
  try {
    if (!doc.contains("c") || !doc.contains("T")) throw ConfigError("model keys 'c' and 'T' are required");
    cfg.c = detail::get_real(doc, "c");
    cfg.T = detail::get_real(doc, "T");
    const bool has_eta = doc.contains("eta");
    const bool has_p = doc.contains("p");
    const bool has_delta = doc.contains("delta");
    if (has_eta && (has_p || has_delta)) {
      throw ConfigError("give either (p, delta) or eta, not both");
    }
    if (has_eta) {
      cfg.eta = detail::get_real(doc, "eta");
    } else if (has_p && has_delta) {
      cfg.p = detail::get_real(doc, "p");
      cfg.delta = detail::get_real(doc, "delta");
    } else {
      throw ConfigError("model needs both 'p' and 'delta', or 'eta'");
    }
    cfg.levels = detail::parse_levels(doc);
    if (doc.contains("num_samples")) cfg.num_samples = detail::get_count(doc, "num_samples");
    if (doc.contains("seed")) cfg.seed = detail::get_count(doc, "seed");
    if (doc.contains("reference_level")) {
      cfg.reference_level = detail::get_count(doc, "reference_level");
    }
    if (doc.contains("target_bias_fraction")) {
      cfg.target_bias_fraction = detail::get_real(doc, "target_bias_fraction");
      if (!(cfg.target_bias_fraction > 0.0 && cfg.target_bias_fraction < 1.0)) {
        throw ConfigError("'target_bias_fraction' must lie in (0, 1)");
      }
    }
    if (doc.contains("test_function")) {
      const auto& tf = doc.at("test_function");
      std::vector<std::string> names;
      if (tf.is_string()) {
        names.push_back(tf.get<std::string>());
      } else if (tf.is_array()) {
        for (const auto& v : tf) {
          if (!v.is_string()) throw ConfigError("'test_function' entries must be strings");
          names.push_back(v.get<std::string>());
        }
      } else {
        throw ConfigError("'test_function' must be a string or a list of strings");
      }
      cfg.test_functions.clear();
      for (const auto& name : names) {
        const auto f = parse_test_function(name);
        if (!f) throw ConfigError("unknown test function '" + name + "'");
        cfg.test_functions.push_back(*f);
      }
      if (cfg.test_functions.empty()) throw ConfigError("'test_function' list is empty");
    }
    if (doc.contains("batch_size")) {
      cfg.batch_size = detail::get_count(doc, "batch_size");
      if (cfg.batch_size == 0) throw ConfigError("'batch_size' must be >= 1");
    }
    if (doc.contains("rate_source")) {
      if (!doc.at("rate_source").is_string()) throw ConfigError("'rate_source' must be a string");
      cfg.rate_source = doc.at("rate_source").get<std::string>();
      if (cfg.rate_source != "exact" && cfg.rate_source != "mc" && cfg.rate_source != "synthetic") {
        throw ConfigError("'rate_source' must be exact, mc or synthetic");
      }
    }
    if (doc.contains("epsilon")) {
      cfg.epsilon = detail::get_real(doc, "epsilon");
      if (!(cfg.epsilon > 0.0)) throw ConfigError("'epsilon' must be > 0");
    }
    if (doc.contains("slope_tolerance")) {
      cfg.slope_tolerance = detail::get_real(doc, "slope_tolerance");
      if (!(cfg.slope_tolerance >= 0.0)) throw ConfigError("'slope_tolerance' must be >= 0");
    }
    if (doc.contains("errors")) {
      const auto& arr = doc.at("errors");
      if (!arr.is_array()) throw ConfigError("'errors' must be an array of numbers");
      for (const auto& v : arr) {
        if (!v.is_number()) throw ConfigError("'errors' entries must be numbers");
        cfg.errors.push_back(v.get<double>());
      }
    }
    if (doc.contains("expected_slope")) cfg.expected_slope = detail::get_real(doc, "expected_slope");
    if (doc.contains("time_steps")) cfg.time_steps = detail::get_count(doc, "time_steps");
    if (doc.contains("paths")) cfg.paths = detail::get_count(doc, "paths");
    if (doc.contains("mode")) cfg.mode = detail::get_count(doc, "mode");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  // Model invariants are re-validated on load.
  try {
    (void)cfg.model();
  } catch (const InvariantViolation& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
  cfg.source = std::move(doc);
  return cfg;
}

/// Flat model document {c, p, delta, T} (plus eta when it was the input).
inline nlohmann::json model_to_json(const SpectralModel& m) {
  return {{"c", m.c()}, {"p", m.p()}, {"delta", m.delta()}, {"T", m.T()}};
}

inline SpectralModel model_from_json(const nlohmann::json& j) {
  return parse_config(j).model();
}

}  // namespace gwave
