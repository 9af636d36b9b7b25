#include "boxcd/harness.hpp"

#include "boxcd/optimize.hpp"
#include "boxcd/parallel.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

namespace boxcd {

namespace {

double chi2_quantile(double dof, double level) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), level);
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<RuleKind> reported_rules(const CoverageStudySpec& spec) {
  const RuleKind primary = spec.primary_rule();
  const RuleKind other = primary == RuleKind::LevelSetAlphaM ? RuleKind::ScalarExactEquitail
                                                             : RuleKind::LevelSetAlphaM;
  return {primary, other};
}

SamplerConfig replicate_sampler(const CoverageStudySpec& spec, std::int64_t index) {
  SamplerConfig cfg = spec.sampler;
  cfg.seed = derive_seed(spec.seed, "sampler", static_cast<std::uint64_t>(index));
  cfg.workers = 1;
  cfg.store_summaries = false;
  return cfg;
}

struct FittedReplicate {
  std::unique_ptr<Model> model;
  DataSet observed;
  std::int64_t n_accepted = 0;
  std::shared_ptr<const DepthSurface> surface;  // null when too few draws
};

FittedReplicate fit_replicate(const CoverageStudySpec& spec, std::int64_t index) {
  FittedReplicate r;
  r.model = replicate_model(spec.model, spec.seed, index);
  r.observed = replicate_observation(*r.model, spec.theta0, spec.seed, index);
  const SummaryVector t_obs = r.model->summarize(r.observed);
  const SamplerConfig cfg = replicate_sampler(spec, index);
  SamplerOutput out = run_sampler(*r.model, t_obs, cfg);
  r.n_accepted = out.n_accepted();
  if (out.n_accepted() >= kMinBandwidthSample) {
    const Support& support = cfg.support ? *cfg.support : r.model->support();
    r.surface = std::make_shared<const DepthSurface>(
        DepthSurface::fit(std::move(out.accepted), support));
  }
  return r;
}

CoverageReport assemble(std::string method, const CoverageStudySpec& spec,
                        std::vector<ReplicateOutcome> outcomes,
                        const std::vector<std::string>& rule_names) {
  CoverageReport report;
  report.method = std::move(method);
  report.model = spec.model.name;
  report.levels = spec.levels;
  report.replicates = spec.replicates;
  double accepted = 0.0;
  for (std::size_t b = 0; b < outcomes.size(); ++b) {
    if (outcomes[b].valid) {
      ++report.valid;
      accepted += static_cast<double>(outcomes[b].n_accepted);
    } else {
      report.failed.push_back(static_cast<std::int64_t>(b));
    }
  }
  report.mean_accepted = report.valid > 0 ? accepted / static_cast<double>(report.valid) : 0.0;
  for (std::size_t r = 0; r < rule_names.size(); ++r)
    report.rules.push_back({rule_names[r], aggregate_coverage(outcomes, r, spec.levels)});
  report.outcomes = std::move(outcomes);
  return report;
}

}  // namespace

// ---------------------------------------------------------------------------

void CoverageStudySpec::validate() const {
  require(replicates >= 1, "study: replicates must be at least 1");
  require(!levels.empty(), "study: at least one level is required");
  for (double l : levels) require(l > 0.0 && l < 1.0, "study: levels must lie inside (0, 1)");
  sampler.validate();
  require(workers >= 1, "study: workers must be at least 1");
  const auto model = make_model(this->model);
  require(theta0.size() == model->param_dim(), "study: theta0 has the wrong dimension");
  require(theta0.allFinite(), "study: theta0 must be finite");
  const Support& box = sampler.support ? *sampler.support : model->support();
  require(box.contains(theta0), "study: theta0 lies outside the support");
}

RuleKind CoverageStudySpec::primary_rule() const {
  if (rule) return *rule;
  return default_rule_kind(theta0.size());
}

std::unique_ptr<Model> replicate_model(const ModelConfig& config, std::uint64_t master_seed,
                                       std::int64_t index) {
  ModelConfig cfg = config;
  if (cfg.name == "logistic")
    cfg.design_seed = derive_seed(master_seed, "design", static_cast<std::uint64_t>(index));
  return make_model(cfg);
}

DataSet replicate_observation(const Model& model, const ParamVector& theta0,
                              std::uint64_t master_seed, std::int64_t index) {
  Rng rng(derive_seed(master_seed, "observed", static_cast<std::uint64_t>(index)));
  return model.simulate(theta0, rng);
}

std::vector<LevelCoverage> aggregate_coverage(const std::vector<ReplicateOutcome>& outcomes,
                                              std::size_t rule_index,
                                              const std::vector<double>& levels) {
  std::vector<LevelCoverage> out;
  std::int64_t valid = 0;
  for (const auto& o : outcomes) valid += o.valid ? 1 : 0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    LevelCoverage c;
    c.level = levels[l];
    for (const auto& o : outcomes)
      if (o.valid && o.covered[rule_index][l]) ++c.covered;
    if (valid > 0) {
      c.coverage = static_cast<double>(c.covered) / static_cast<double>(valid);
      c.standard_error = std::sqrt(c.coverage * (1.0 - c.coverage) / static_cast<double>(valid));
    }
    out.push_back(c);
  }
  return out;
}

CoverageReport run_coverage_study(const CoverageStudySpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::vector<RuleKind> rules = reported_rules(spec);
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(spec.replicates));

  parallel_for(spec.replicates, spec.workers, [&](std::int64_t b) {
    ReplicateOutcome& o = outcomes[static_cast<std::size_t>(b)];
    FittedReplicate r = fit_replicate(spec, b);
    o.n_accepted = r.n_accepted;
    if (!r.surface) {
      o.failure = "only " + std::to_string(r.n_accepted) + " accepted draws";
      return;
    }
    o.valid = true;
    o.depth_at_theta0 = spec.membership == QueryMode::Knn ? r.surface->knn(spec.theta0)
                                                          : r.surface->eval(spec.theta0);
    o.max_depth = r.surface->max_depth();
    o.estimate = r.surface->theta_hat();
    for (RuleKind kind : rules) {
      std::vector<bool> row;
      for (double level : spec.levels)
        row.push_back(o.depth_at_theta0 >= region_threshold(o.max_depth, {kind, 1.0 - level}));
      o.covered.push_back(std::move(row));
    }
  });

  std::vector<std::string> names;
  for (RuleKind k : rules) names.emplace_back(to_string(k));
  CoverageReport report = assemble("box-cd", spec, std::move(outcomes), names);
  report.wall_seconds = elapsed_since(start);
  return report;
}

LikelihoodRatio likelihood_ratio(const Model& model, const DataSet& data,
                                 const ParamVector& theta0, Rng& rng) {
  require(model.has_likelihood(), "likelihood ratio needs a model with a likelihood");
  const auto ll = [&](const ParamVector& theta) { return model.log_likelihood(theta, data); };
  const SimplexResult best = maximize_in_support(ll, model.support(), rng);
  LikelihoodRatio lr;
  lr.converged = best.converged;
  if (!best.converged) return lr;
  lr.mle = best.argmin;
  lr.max_log_likelihood = best.value;
  const double at_null = ll(theta0);
  if (at_null > lr.max_log_likelihood) {
    lr.mle = theta0;
    lr.max_log_likelihood = at_null;
  }
  lr.statistic = 2.0 * (lr.max_log_likelihood - at_null);
  return lr;
}

CoverageReport run_lrt_coverage(const CoverageStudySpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(spec.replicates));
  const auto p = static_cast<double>(spec.theta0.size());
  std::vector<double> critical;
  for (double level : spec.levels) critical.push_back(chi2_quantile(p, level));

  parallel_for(spec.replicates, spec.workers, [&](std::int64_t b) {
    ReplicateOutcome& o = outcomes[static_cast<std::size_t>(b)];
    const auto model = replicate_model(spec.model, spec.seed, b);
    require(model->has_likelihood(),
            "LRT baseline unavailable: model '" + std::string(model->name()) +
                "' has no tractable likelihood");
    const DataSet y = replicate_observation(*model, spec.theta0, spec.seed, b);
    Rng rng(derive_seed(spec.seed, "mle", static_cast<std::uint64_t>(b)));
    const LikelihoodRatio lr = likelihood_ratio(*model, y, spec.theta0, rng);
    if (!lr.converged) {
      o.failure = "optimizer did not converge from 5 restarts";
      return;
    }
    o.valid = true;
    o.depth_at_theta0 = lr.statistic;
    o.estimate = lr.mle;
    std::vector<bool> row;
    for (double c : critical) row.push_back(lr.statistic <= c);
    o.covered.push_back(std::move(row));
  });

  CoverageReport report = assemble("lrt", spec, std::move(outcomes), {"lrt"});
  report.wall_seconds = elapsed_since(start);
  return report;
}

// ---------------------------------------------------------------------------

std::pair<double, double> lrt_interval(const Model& model, const DataSet& data, double level,
                                       double max_log_likelihood) {
  require(model.param_dim() == 1, "LRT interval needs a scalar parameter");
  const Vector<double> grid =
      linspace(model.support().lower(0), model.support().upper(0), kScalarGridPoints);
  const double critical = chi2_quantile(1.0, level);
  Vector<double> ll(grid.size());
  ParamVector theta(1);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    theta(0) = grid(i);
    ll(i) = model.log_likelihood(theta, data);
  }
  const double top = std::max(max_log_likelihood, ll.maxCoeff());
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (2.0 * (top - ll(i)) <= critical) {
      if (!any) lo = grid(i);
      hi = grid(i);
      any = true;
    }
  }
  return {lo, hi};
}

LengthReport run_length_study(const CoverageStudySpec& spec) {
  spec.validate();
  require(spec.theta0.size() == 1, "length study needs a scalar parameter");
  const std::size_t levels = spec.levels.size();
  struct Lengths {
    bool valid = false;
    std::vector<double> boxcd, alpham, lrt;
    std::int64_t multimodal = 0;
  };
  std::vector<Lengths> rows(static_cast<std::size_t>(spec.replicates));

  parallel_for(spec.replicates, spec.workers, [&](std::int64_t b) {
    Lengths& row = rows[static_cast<std::size_t>(b)];
    FittedReplicate r = fit_replicate(spec, b);
    require(r.model->has_likelihood(), "length study needs a model with a likelihood");
    Rng rng(derive_seed(spec.seed, "mle", static_cast<std::uint64_t>(b)));
    const LikelihoodRatio lr = likelihood_ratio(*r.model, r.observed, spec.theta0, rng);
    if (!r.surface || !lr.converged) return;
    row.valid = true;
    for (double level : spec.levels) {
      const ScalarInterval eq =
          scalar_interval(*r.surface, {RuleKind::ScalarExactEquitail, 1.0 - level});
      const ScalarInterval am = scalar_interval(*r.surface, {RuleKind::LevelSetAlphaM, 1.0 - level});
      row.multimodal += eq.multimodal ? 1 : 0;
      row.boxcd.push_back(eq.length());
      row.alpham.push_back(am.length());
      const auto [lo, hi] = lrt_interval(*r.model, r.observed, level, lr.max_log_likelihood);
      row.lrt.push_back(hi - lo);
    }
  });

  LengthReport report;
  report.levels = spec.levels;
  report.replicates = spec.replicates;
  report.boxcd_mean_length.assign(levels, 0.0);
  report.alpham_mean_length.assign(levels, 0.0);
  report.lrt_mean_length.assign(levels, 0.0);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    if (!rows[b].valid) {
      report.failed.push_back(static_cast<std::int64_t>(b));
      continue;
    }
    ++report.valid;
    report.multimodal_intervals += rows[b].multimodal;
    for (std::size_t l = 0; l < levels; ++l) {
      report.boxcd_mean_length[l] += rows[b].boxcd[l];
      report.alpham_mean_length[l] += rows[b].alpham[l];
      report.lrt_mean_length[l] += rows[b].lrt[l];
    }
  }
  if (report.valid > 0) {
    const auto v = static_cast<double>(report.valid);
    for (std::size_t l = 0; l < levels; ++l) {
      report.boxcd_mean_length[l] /= v;
      report.alpham_mean_length[l] /= v;
      report.lrt_mean_length[l] /= v;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

std::vector<ScalingCell> run_scaling_study(const ScalingSpec& spec) {
  require(!spec.sizes.empty() && !spec.pseudo_samples.empty(), "scaling: empty grid");
  require(std::find(spec.pseudo_samples.begin(), spec.pseudo_samples.end(), 2) !=
              spec.pseudo_samples.end(),
          "scaling: the S grid must include S = 2 (reference column)");
  for (int s : spec.pseudo_samples)
    require(s >= 2 && s % 2 == 0, "scaling: S values must be even and >= 2");

  require(spec.observations >= 1, "scaling: observations must be at least 1");
  // observed sample k has the largest size; size n uses its first n values
  const Eigen::Index largest = *std::max_element(spec.sizes.begin(), spec.sizes.end());
  std::vector<DataSet> observed;
  for (int k = 0; k < spec.observations; ++k) {
    Rng obs_rng(derive_seed(spec.seed, "observed", static_cast<std::uint64_t>(k)));
    observed.push_back(simulate_mixture(spec.theta0, largest, obs_rng));
  }

  std::vector<ScalingCell> cells;
  for (Eigen::Index n : spec.sizes) {
    require(n >= 1, "scaling: sample sizes must be positive");
    const MixtureModel model(n, spec.support);
    std::vector<ScalingCell> row;
    std::int64_t reference = 0;
    for (int s : spec.pseudo_samples) {
      ScalingCell cell{n, s, 0, 0.0};
      for (int k = 0; k < spec.observations; ++k) {
        SamplerConfig cfg;
        cfg.proposals = spec.proposals;
        cfg.pseudo_samples = s;
        cfg.seed = derive_seed(spec.seed, "sampler", static_cast<std::uint64_t>(k));
        cfg.workers = spec.workers;
        cell.accepted += run_sampler(model, model.summarize(observed[k].topRows(n)), cfg).n_accepted();
      }
      row.push_back(cell);
      if (s == 2) reference = cell.accepted;
    }
    for (auto& c : row)
      c.ratio_to_s2 = reference > 0 ? static_cast<double>(c.accepted) / static_cast<double>(reference)
                                    : 0.0;
    cells.insert(cells.end(), row.begin(), row.end());
  }
  return cells;
}

std::vector<VariabilityFamily> run_s_variability_study(const VariabilitySpec& spec) {
  require(spec.replications >= 1, "variability: replications must be at least 1");
  require(spec.grid.size() >= 1, "variability: empty theta grid");
  const auto model = make_model(spec.model);
  require(model->param_dim() == 1, "variability study needs a scalar parameter");
  const Support& support = model->support();
  require(spec.grid.minCoeff() >= support.lower(0) && spec.grid.maxCoeff() <= support.upper(0),
          "variability: theta grid extends outside the proposal support [" +
              std::to_string(support.lower(0)) + ", " + std::to_string(support.upper(0)) + "]");
  const SummaryVector t_obs = model->summarize(spec.observed);

  std::vector<VariabilityFamily> families;
  for (int s : spec.pseudo_samples) {
    VariabilityFamily fam;
    fam.pseudo_samples = s;
    fam.curves.resize(spec.replications, spec.grid.size());
    for (int r = 0; r < spec.replications; ++r) {
      SamplerConfig cfg;
      cfg.proposals = spec.proposals;
      cfg.pseudo_samples = s;
      cfg.seed = derive_seed(derive_seed(spec.seed, "rerun", static_cast<std::uint64_t>(r)),
                             static_cast<std::uint64_t>(s));
      cfg.workers = spec.workers;
      SamplerOutput out = run_sampler(*model, t_obs, cfg);
      const DepthSurface surface = DepthSurface::fit(std::move(out.accepted), support);
      ParamVector theta(1);
      for (Eigen::Index i = 0; i < spec.grid.size(); ++i) {
        theta(0) = spec.grid(i);
        fam.curves(r, i) = surface.eval(theta);
      }
    }
    fam.pointwise_sd = Vector<double>::Zero(spec.grid.size());
    if (spec.replications > 1) {
      const Vector<double> mean = fam.curves.colwise().mean().transpose();
      for (Eigen::Index i = 0; i < spec.grid.size(); ++i)
        fam.pointwise_sd(i) = std::sqrt((fam.curves.col(i).array() - mean(i)).square().sum() /
                                        (spec.replications - 1));
    }
    fam.mean_sd = fam.pointwise_sd.mean();
    families.push_back(std::move(fam));
  }
  return families;
}

// ---------------------------------------------------------------------------

double abc_ball_acceptance(int dim, double eps, double predictive_variance) {
  require(dim >= 1, "abc acceptance: dimension must be at least 1");
  require(eps > 0, "abc acceptance: eps must be positive");
  require(predictive_variance >= 0, "abc acceptance: v must be non-negative");
  if (std::isinf(eps)) return 1.0;
  const double x = eps * eps / (predictive_variance + 1.0);
  return boost::math::gamma_p(0.5 * dim, 0.5 * x);
}

BoxAcceptance box_acceptance_curve(const Vector<double>& cdf_values) {
  require(cdf_values.size() >= 1, "box acceptance: empty coordinate list");
  require((cdf_values.array() > 0.0).all() && (cdf_values.array() < 1.0).all(),
          "box acceptance: CDF values must lie in (0, 1)");
  const auto per = cdf_values.array() * (1.0 - cdf_values.array());
  return {per.prod(), (2.0 * per).prod()};
}

std::vector<DecayRow> decay_table(int max_dim, double eps, double predictive_variance,
                                  double x) {
  require(max_dim >= 1, "decay table: max dimension must be at least 1");
  std::vector<DecayRow> rows;
  for (int d = 1; d <= max_dim; ++d) {
    const BoxAcceptance box = box_acceptance_curve(Vector<double>::Constant(d, x));
    rows.push_back({d, abc_ball_acceptance(d, eps, predictive_variance), box.bound_product,
                    box.factor2_product});
  }
  return rows;
}

// ---------------------------------------------------------------------------

MedianUnbiasednessReport run_median_unbiasedness_study(const CoverageStudySpec& spec,
                                                       EstimatorKind estimator) {
  require(spec.replicates >= 1, "median-unbiasedness study: no replicates (B = 0)");
  spec.validate();
  require(spec.theta0.size() == 1, "median-unbiasedness study needs a scalar parameter");
  std::vector<std::optional<double>> estimates(static_cast<std::size_t>(spec.replicates));

  parallel_for(spec.replicates, spec.workers, [&](std::int64_t b) {
    FittedReplicate r = fit_replicate(spec, b);
    if (!r.surface) return;
    if (estimator == EstimatorKind::DepthMax) {
      estimates[static_cast<std::size_t>(b)] = r.surface->theta_hat()(0);
    } else {
      estimates[static_cast<std::size_t>(b)] = quantile_type7(r.surface->sample().col(0), 0.5);
    }
  });

  MedianUnbiasednessReport report;
  report.replicates = spec.replicates;
  for (const auto& e : estimates) {
    if (!e) continue;
    ++report.valid;
    report.estimates.push_back(*e);
    if (*e <= spec.theta0(0)) ++report.at_or_below;
  }
  if (report.valid > 0) {
    const auto v = static_cast<double>(report.valid);
    report.fraction = static_cast<double>(report.at_or_below) / v;
    report.standard_error = std::sqrt(report.fraction * (1.0 - report.fraction) / v);
  }
  return report;
}

}  // namespace boxcd
