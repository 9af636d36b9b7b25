#include "boxcd/config.hpp"

#include "boxcd/io.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace boxcd {

namespace pt = boost::property_tree;

namespace {

pt::ptree::path_type key_path(const std::string& key) { return pt::ptree::path_type(key, '.'); }

std::string trimmed(std::string s) {
  boost::algorithm::trim(s);
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trimmed(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(key, "cannot parse '" + text + "' as a number");
  return value;
}

Vector<double> to_vector(const std::vector<double>& values) {
  return Eigen::Map<const Vector<double>>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Vector<double> sized_bounds(const Config& config, const std::string& key,
                            const Vector<double>& fallback) {
  const auto values = config.find_doubles(key);
  if (!values) return fallback;
  if (values->size() == 1) return Vector<double>::Constant(fallback.size(), values->front());
  if (static_cast<Eigen::Index>(values->size()) != fallback.size())
    throw ConfigError(key, "expected " + std::to_string(fallback.size()) + " values");
  return to_vector(*values);
}

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, c.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  return c;
}

bool Config::has(const std::string& key) const { return find(key).has_value(); }

void Config::set(const std::string& key, const std::string& value) {
  if (key.find('.') == std::string::npos)
    throw ConfigError(key, "keys must have the form section.key");
  tree_.put(key_path(key), value);
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError(assignment, "override must have the form section.key=value");
  set(trimmed(assignment.substr(0, eq)), trimmed(assignment.substr(eq + 1)));
}

std::optional<std::string> Config::find(const std::string& key) const {
  const auto v = tree_.get_optional<std::string>(key_path(key));
  if (!v) return std::nullopt;
  return trimmed(*v);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

std::string Config::require_string(const std::string& key) const {
  auto v = find(key);
  if (!v || v->empty()) throw ConfigError(key, "required but missing");
  return *v;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto v = find(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  // accept 1e5-style integers
  const double d = parse_number<double>(key, *v);
  if (d != std::floor(d)) throw ConfigError(key, "expected an integer, got '" + *v + "'");
  return static_cast<std::int64_t>(d);
}

std::uint64_t Config::get_seed(const std::string& key, std::uint64_t fallback) const {
  const auto v = find(key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  const std::string s = boost::algorithm::to_lower_copy(*v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + *v + "'");
}

std::optional<std::vector<double>> Config::find_doubles(const std::string& key) const {
  const auto v = find(key);
  if (!v) return std::nullopt;
  std::vector<std::string> parts;
  boost::algorithm::split(parts, *v, boost::is_any_of(","));
  std::vector<double> out;
  for (const auto& part : parts) {
    if (trimmed(part).empty()) continue;
    out.push_back(parse_number<double>(key, part));
  }
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        std::vector<double> fallback) const {
  auto v = find_doubles(key);
  return v ? *v : std::move(fallback);
}

std::string Config::to_ini() const {
  std::map<std::string, std::map<std::string, std::string>> sorted;
  for (const auto& [section, children] : tree_)
    for (const auto& [key, value] : children) sorted[section][key] = trimmed(value.data());
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, entries] : sorted) {
    if (!first) out << '\n';
    first = false;
    out << '[' << section << "]\n";
    for (const auto& [key, value] : entries) out << key << " = " << value << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

ModelConfig model_config_from(const Config& config) {
  ModelConfig m;
  m.name = config.get_string("model.name", m.name);
  if (m.name != "logistic" && m.name != "mvt" && m.name != "mixture" && m.name != "ricker" &&
      m.name != "gaussian")
    throw ConfigError("model.name", "unknown model '" + m.name + "'");

  const std::int64_t default_n = m.name == "logistic"  ? 20
                                 : m.name == "mvt"     ? 10
                                 : m.name == "mixture" ? 10
                                 : m.name == "ricker"  ? 50
                                                       : 10;
  m.n = config.get_int("model.n", default_n);
  m.predictors = config.get_int("model.predictors", 3);
  m.design_seed = config.get_seed("model.design_seed", 1);
  m.nu = config.get_double("model.nu", 10.0);
  if (const auto sigma = config.find_doubles("model.sigma")) {
    const auto dim = static_cast<Eigen::Index>(std::lround(std::sqrt(sigma->size())));
    if (dim * dim != static_cast<Eigen::Index>(sigma->size()))
      throw ConfigError("model.sigma", "expected a square matrix in row-major order");
    m.sigma = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(sigma->data(), dim, dim);
  }
  m.ricker.phi = config.get_double("model.phi", m.ricker.phi);
  m.ricker.n0 = config.get_double("model.n0", m.ricker.n0);
  m.ricker.fixed_sigma2 = config.get_double("model.sigma2", m.ricker.fixed_sigma2);
  const std::string experiment = config.get_string("model.experiment", "growth");
  if (experiment == "growth") {
    m.ricker.experiment = RickerExperiment::GrowthRate;
  } else if (experiment == "growth-variance") {
    m.ricker.experiment = RickerExperiment::GrowthRateAndVariance;
    if (!config.has("model.n")) m.n = 20;
  } else {
    throw ConfigError("model.experiment", "expected 'growth' or 'growth-variance'");
  }
  m.ricker.series_length = m.n;
  if (m.n < 1) throw ConfigError("model.n", "must be positive");

  if (config.has("model.support_lower") || config.has("model.support_upper")) {
    Support defaults = default_support(m);
    Support s{sized_bounds(config, "model.support_lower", defaults.lower),
              sized_bounds(config, "model.support_upper", defaults.upper)};
    try {
      s.validate();
    } catch (const ContractViolation& e) {
      throw ConfigError("model.support_lower", e.what());
    }
    m.support = s;
  }
  return m;
}

ParamVector default_theta0(const ModelConfig& model) {
  ParamVector theta;
  if (model.name == "logistic") {
    theta = ParamVector::Zero(model.predictors);
    if (model.predictors == 3) theta << -0.25, 0.0, 0.25;
  } else if (model.name == "mvt") {
    theta.resize(3);
    theta << 0.0, -0.5, 0.5;
  } else if (model.name == "mixture") {
    theta = ParamVector::Constant(1, 0.8);
  } else if (model.name == "ricker") {
    theta = model.ricker.experiment == RickerExperiment::GrowthRate
                ? ParamVector::Constant(1, 2.0)
                : ParamVector::Constant(2, 2.0);
  } else {
    theta = ParamVector::Zero(1);
  }
  return theta;
}

ParamVector theta0_from(const Config& config, const ModelConfig& model) {
  const auto values = config.find_doubles("model.theta0");
  return values ? to_vector(*values) : default_theta0(model);
}

SamplerConfig sampler_config_from(const Config& config, const ModelConfig& model) {
  SamplerConfig s;
  s.proposals = config.get_int("sampler.R", s.proposals);
  s.pseudo_samples = static_cast<int>(config.get_int("sampler.S", s.pseudo_samples));
  s.seed = config.get_seed("sampler.seed", s.seed);
  s.store_summaries = config.get_bool("sampler.store_summaries", false);
  s.support = model.support;
  try {
    s.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(s.proposals < 1 ? "sampler.R" : "sampler.S", e.what());
  }
  return s;
}

CoverageStudySpec study_spec_from(const Config& config) {
  CoverageStudySpec spec;
  spec.model = model_config_from(config);
  spec.theta0 = theta0_from(config, spec.model);
  spec.sampler = sampler_config_from(config, spec.model);
  spec.replicates = config.get_int("study.replicates", 500);
  spec.levels = config.get_doubles("study.levels", spec.levels);
  if (const auto rule = config.find("study.rule"); rule && *rule != "auto") {
    try {
      spec.rule = parse_rule_kind(*rule);
    } catch (const ContractViolation& e) {
      throw ConfigError("study.rule", e.what());
    }
  }
  try {
    spec.membership = parse_query_mode(config.get_string("study.membership", "knn"));
  } catch (const ContractViolation& e) {
    throw ConfigError("study.membership", e.what());
  }
  spec.seed = config.get_seed("study.seed", 1);
  spec.workers = static_cast<unsigned>(config.get_int("study.workers", 1));
  if (spec.replicates < 1) throw ConfigError("study.replicates", "must be at least 1");
  for (double l : spec.levels)
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("study.levels", "levels must lie inside (0, 1)");
  return spec;
}

ScalingSpec scaling_spec_from(const Config& config) {
  ScalingSpec spec;
  if (const auto sizes = config.find_doubles("scaling.sizes")) {
    spec.sizes.clear();
    for (double n : *sizes) spec.sizes.push_back(static_cast<Eigen::Index>(n));
  }
  if (const auto s = config.find_doubles("scaling.pseudo_samples")) {
    spec.pseudo_samples.clear();
    for (double v : *s) spec.pseudo_samples.push_back(static_cast<int>(v));
  }
  spec.proposals = config.get_int("scaling.R", spec.proposals);
  spec.theta0 = config.get_double("scaling.theta0", spec.theta0);
  spec.observations = static_cast<int>(config.get_int("scaling.observations", spec.observations));
  if (spec.observations < 1) throw ConfigError("scaling.observations", "must be at least 1");
  spec.seed = config.get_seed("scaling.seed", spec.seed);
  if (spec.proposals < 1) throw ConfigError("scaling.R", "must be at least 1");
  for (int s : spec.pseudo_samples)
    if (s < 2 || s % 2 != 0) throw ConfigError("scaling.pseudo_samples", "S must be even and >= 2");
  return spec;
}

}  // namespace boxcd
