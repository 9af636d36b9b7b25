#pragma once

#include "boxcd/depth.hpp"
#include "boxcd/models.hpp"
#include "boxcd/regions.hpp"
#include "boxcd/sampler.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace boxcd {

// ---------------------------------------------------------------------------
// Replicated coverage studies

struct CoverageStudySpec {
  ModelConfig model;
  ParamVector theta0;
  std::int64_t replicates = 500;
  std::vector<double> levels{0.95, 0.90, 0.85, 0.80};
  SamplerConfig sampler;           // R and S; seed and workers are derived per replicate
  std::optional<RuleKind> rule;    // reported first; defaults to default_rule_kind(p)
  QueryMode membership = QueryMode::Knn;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  void validate() const;
  RuleKind primary_rule() const;
};

struct LevelCoverage {
  double level = 0.0;
  std::int64_t covered = 0;
  double coverage = 0.0;
  double standard_error = 0.0;  // sqrt(c (1 - c) / valid)
};

struct RuleCoverage {
  std::string rule;  // rule name, or "lrt"
  std::vector<LevelCoverage> levels;
};

struct ReplicateOutcome {
  bool valid = false;
  std::string failure;
  std::int64_t n_accepted = 0;
  double depth_at_theta0 = 0.0;  // Box-CD; LR statistic for the LRT baseline
  double max_depth = 0.0;
  ParamVector estimate;          // theta-hat (Box-CD) or MLE (LRT)
  /// covered[r][l]: rule r (order of CoverageReport::rules), level l
  std::vector<std::vector<bool>> covered;
};

struct CoverageReport {
  std::string method;  // "box-cd" or "lrt"
  std::string model;
  std::vector<double> levels;
  std::int64_t replicates = 0;
  std::int64_t valid = 0;
  std::vector<std::int64_t> failed;  // replicate indices excluded from coverage
  std::vector<RuleCoverage> rules;   // primary rule first
  std::vector<ReplicateOutcome> outcomes;
  double mean_accepted = 0.0;
  double wall_seconds = 0.0;  // not part of serialized reports

  const RuleCoverage& primary() const { return rules.front(); }
};

/// Observed dataset of replicate `index` (shared by the Box-CD and LRT runs).
DataSet replicate_observation(const Model& model, const ParamVector& theta0,
                              std::uint64_t master_seed, std::int64_t index);
/// Model of replicate `index`; the logistic design is redrawn per replicate.
std::unique_ptr<Model> replicate_model(const ModelConfig& config, std::uint64_t master_seed,
                                       std::int64_t index);

CoverageReport run_coverage_study(const CoverageStudySpec& spec);

/// Likelihood-ratio baseline on the same replicated datasets: theta0 is covered
/// at level l when -2 log lambda <= chi2_p quantile(l).
CoverageReport run_lrt_coverage(const CoverageStudySpec& spec);

/// Aggregates per-replicate flags into coverage and SE.
std::vector<LevelCoverage> aggregate_coverage(const std::vector<ReplicateOutcome>& outcomes,
                                              std::size_t rule_index,
                                              const std::vector<double>& levels);

struct LikelihoodRatio {
  ParamVector mle;
  double max_log_likelihood = 0.0;
  double statistic = 0.0;  // 2 (l(mle) - l(theta0)), >= 0
  bool converged = false;
};

/// MLE over the support by Nelder-Mead with 5 uniform restarts.
LikelihoodRatio likelihood_ratio(const Model& model, const DataSet& data,
                                 const ParamVector& theta0, Rng& rng);

// ---------------------------------------------------------------------------
// Interval lengths (scalar models with likelihood)

struct LengthReport {
  std::vector<double> levels;
  std::int64_t replicates = 0;
  std::int64_t valid = 0;
  std::vector<std::int64_t> failed;
  std::vector<double> boxcd_mean_length;   // equi-tailed rule
  std::vector<double> alpham_mean_length;  // alpha M rule
  std::vector<double> lrt_mean_length;
  std::int64_t multimodal_intervals = 0;
};

/// LR-inversion interval on the 512-point support grid.
std::pair<double, double> lrt_interval(const Model& model, const DataSet& data, double level,
                                       double max_log_likelihood);

LengthReport run_length_study(const CoverageStudySpec& spec);

// ---------------------------------------------------------------------------
// Acceptance scaling in n = d and S (mixture model)

struct ScalingSpec {
  std::vector<Eigen::Index> sizes{10, 15, 20, 25};
  std::vector<int> pseudo_samples{2, 4, 6, 8, 10};
  std::int64_t proposals = 100000;  // per observed sample
  int observations = 1;             // observed samples; counts are summed over them
  double theta0 = 0.8;
  Support support{Vector<double>::Constant(1, 0.0), Vector<double>::Constant(1, 3.0)};
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct ScalingCell {
  Eigen::Index n = 0;
  int pseudo_samples = 0;
  std::int64_t accepted = 0;
  double ratio_to_s2 = 0.0;
};

/// Accepted counts per (n, S). All cells share the observed samples (size n
/// takes the first n values) and the trial streams, so proposals coincide
/// across n and S.
std::vector<ScalingCell> run_scaling_study(const ScalingSpec& spec);

// ---------------------------------------------------------------------------
// Monte Carlo variability of the depth curve across reruns

struct VariabilitySpec {
  ModelConfig model;  // scalar parameter
  DataSet observed;
  std::vector<int> pseudo_samples{4, 10};
  int replications = 5;
  std::int64_t proposals = 10000;
  Vector<double> grid;  // theta grid; must lie inside the support
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct VariabilityFamily {
  int pseudo_samples = 0;
  Matrix<double> curves;        // replications x grid
  Vector<double> pointwise_sd;  // across replications (ddof 1; zero for one replication)
  double mean_sd = 0.0;
};

std::vector<VariabilityFamily> run_s_variability_study(const VariabilitySpec& spec);

// ---------------------------------------------------------------------------
// Dimension scaling of acceptance probabilities

/// P(|t - t_obs| <= eps) = F_{chi2_d}(eps^2 / (v + 1)).
double abc_ball_acceptance(int dim, double eps, double predictive_variance);

struct BoxAcceptance {
  double bound_product = 0.0;    // prod x_j (1 - x_j) <= (1/4)^d
  double factor2_product = 0.0;  // prod 2 x_j (1 - x_j) <= (1/2)^d
};

BoxAcceptance box_acceptance_curve(const Vector<double>& cdf_values);

struct DecayRow {
  int dim = 0;
  double abc = 0.0;
  double box_bound = 0.0;
  double box_factor2 = 0.0;
};

/// Rows d = 1..max_dim with every x_j = x.
std::vector<DecayRow> decay_table(int max_dim, double eps, double predictive_variance,
                                  double x = 0.5);

// ---------------------------------------------------------------------------
// Median unbiasedness of the depth maximizer

enum class EstimatorKind { DepthMax, AcceptedMedian };

struct MedianUnbiasednessReport {
  std::int64_t replicates = 0;
  std::int64_t valid = 0;
  std::int64_t at_or_below = 0;
  double fraction = 0.0;
  double standard_error = 0.0;
  std::vector<double> estimates;
};

MedianUnbiasednessReport run_median_unbiasedness_study(const CoverageStudySpec& spec,
                                                       EstimatorKind estimator =
                                                           EstimatorKind::DepthMax);

}  // namespace boxcd
