#pragma once

#include "boxcd/harness.hpp"
#include "boxcd/models.hpp"
#include "boxcd/sampler.hpp"

#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace boxcd {

/// Malformed or missing configuration; what() names the offending key.
class ConfigError : public ContractViolation {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : ContractViolation("config key '" + key + "': " + message), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/**
 * Sectioned key-value configuration ("[section]" headers, "key = value"
 * lines, '#' or ';' comments). Keys are addressed as "section.key". List
 * values are comma separated.
 */
class Config {
 public:
  Config() = default;

  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  /// "section.key=value"
  void apply_override(const std::string& assignment);

  std::optional<std::string> find(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::optional<std::vector<double>> find_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

  /// Canonical INI text (sections and keys sorted); parse(to_ini()) round-trips.
  std::string to_ini() const;
  const boost::property_tree::ptree& tree() const { return tree_; }

 private:
  boost::property_tree::ptree tree_;
};

/// [model] section: name, n, predictors, design_seed, nu, sigma (row-major
/// list), phi, n0, sigma2, experiment, support_lower, support_upper.
ModelConfig model_config_from(const Config& config);
/// [model] theta0, defaulting to the study configurations.
ParamVector theta0_from(const Config& config, const ModelConfig& model);
/// [sampler] R, S, seed, store_summaries, support from [model].
SamplerConfig sampler_config_from(const Config& config, const ModelConfig& model);
/// [study] replicates, levels, rule, membership, seed, workers.
CoverageStudySpec study_spec_from(const Config& config);
/// [scaling] sizes, pseudo_samples, R, theta0, seed.
ScalingSpec scaling_spec_from(const Config& config);

/// Default theta0 per model (logistic (-0.25, 0, 0.25), mvt (0, -0.5, 0.5),
/// mixture 0.8, ricker log r = 2 (and sigma^2 = 2), gaussian 0).
ParamVector default_theta0(const ModelConfig& model);

}  // namespace boxcd
