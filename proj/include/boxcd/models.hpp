#pragma once

#include "boxcd/random.hpp"
#include "boxcd/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace boxcd {

/**
 * Generative model contract: simulate a dataset at theta, reduce it to a
 * d-dimensional summary, and optionally evaluate the exact log-likelihood.
 *
 * Models are immutable after construction. Every stochastic call takes the
 * random stream explicitly, so one instance can serve many workers.
 */
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string_view name() const = 0;
  virtual Eigen::Index param_dim() const = 0;
  virtual Eigen::Index summary_dim() const = 0;
  /// Rows of a dataset (sample size n, or series length T).
  virtual Eigen::Index sample_size() const = 0;

  virtual DataSet simulate(const ParamVector& theta, Rng& rng) const = 0;
  virtual SummaryVector summarize(const DataSet& data) const = 0;

  virtual bool has_likelihood() const { return false; }
  /// Throws UnsupportedCapability unless has_likelihood().
  virtual double log_likelihood(const ParamVector& theta, const DataSet& data) const;

  /// Fills each column of `out` (d x S) with the summary of a fresh pseudo-sample.
  /// Overridden where per-theta work can be shared across the S draws.
  virtual void simulate_summaries(const ParamVector& theta, Eigen::Ref<Matrix<double>> out,
                                  Rng& rng) const;

  const Support& support() const { return support_; }

 protected:
  explicit Model(Support support);
  void check_theta(const ParamVector& theta) const;

 private:
  Support support_;
};

// ---------------------------------------------------------------------------
// Simulators. Each returns raw data; the owning model class reduces it.

/// n Bernoulli responses with success probability logistic(x_i . beta).
DataSet simulate_logistic(const ParamVector& beta, const Matrix<double>& design, Rng& rng);

/// n draws from a 3-variate Student-t with location mu, scale sigma, nu d.o.f.
DataSet simulate_mvt(const ParamVector& mu, const Matrix<double>& sigma, double nu,
                     Eigen::Index n, Rng& rng);

/// n draws from 0.5 N(-theta, 1) + 0.5 N(theta, 1).
DataSet simulate_mixture(double theta, Eigen::Index n, Rng& rng);

struct RickerPath {
  Vector<double> log_population;  // log N(1..T)
  Vector<double> counts;          // y_1..y_T, non-negative integers
};

/// Latent Ricker recursion on log N with N(0) = n0, Poisson(phi N(t)) observations.
RickerPath simulate_ricker_path(double log_r, double sigma2, double phi, double n0,
                                Eigen::Index series_length, Rng& rng);

/// Count series (T x 1) of simulate_ricker_path.
DataSet simulate_ricker(double log_r, double sigma2, double phi, double n0,
                        Eigen::Index series_length, Rng& rng);

/// Type-7 (linear interpolation) sample quantile.
double quantile_type7(Vector<double> values, double prob);

/// Median of each column.
Vector<double> column_medians(const Matrix<double>& data);

// ---------------------------------------------------------------------------
// Models

/// Logistic regression with fixed design; summary t = X^T y (d = p).
class LogisticModel final : public Model {
 public:
  LogisticModel(Matrix<double> design, Support support);

  std::string_view name() const override { return "logistic"; }
  Eigen::Index param_dim() const override { return design_.cols(); }
  Eigen::Index summary_dim() const override { return design_.cols(); }
  Eigen::Index sample_size() const override { return design_.rows(); }
  DataSet simulate(const ParamVector& theta, Rng& rng) const override;
  SummaryVector summarize(const DataSet& data) const override;
  bool has_likelihood() const override { return true; }
  double log_likelihood(const ParamVector& theta, const DataSet& data) const override;
  void simulate_summaries(const ParamVector& theta, Eigen::Ref<Matrix<double>> out,
                          Rng& rng) const override;

  const Matrix<double>& design() const { return design_; }

 private:
  Matrix<double> design_;
};

/// Multivariate Student-t location model, known scale and d.o.f.;
/// summary = component-wise sample medians.
class MultivariateTModel final : public Model {
 public:
  MultivariateTModel(Matrix<double> sigma, double nu, Eigen::Index n, Support support);

  std::string_view name() const override { return "mvt"; }
  Eigen::Index param_dim() const override { return sigma_.rows(); }
  Eigen::Index summary_dim() const override { return sigma_.rows(); }
  Eigen::Index sample_size() const override { return n_; }
  DataSet simulate(const ParamVector& theta, Rng& rng) const override;
  SummaryVector summarize(const DataSet& data) const override;
  bool has_likelihood() const override { return true; }
  double log_likelihood(const ParamVector& theta, const DataSet& data) const override;
  void simulate_summaries(const ParamVector& theta, Eigen::Ref<Matrix<double>> out,
                          Rng& rng) const override;

  const Matrix<double>& sigma() const { return sigma_; }
  double nu() const { return nu_; }

 private:
  Matrix<double> sigma_;
  Matrix<double> chol_;  // lower factor of sigma
  Matrix<double> chol_inv_;
  double log_det_ = 0.0;
  double nu_;
  Eigen::Index n_;
};

/// Symmetric two-component normal mixture; summary = ascending sorted sample (d = n).
class MixtureModel final : public Model {
 public:
  MixtureModel(Eigen::Index n, Support support);

  std::string_view name() const override { return "mixture"; }
  Eigen::Index param_dim() const override { return 1; }
  Eigen::Index summary_dim() const override { return n_; }
  Eigen::Index sample_size() const override { return n_; }
  DataSet simulate(const ParamVector& theta, Rng& rng) const override;
  SummaryVector summarize(const DataSet& data) const override;
  bool has_likelihood() const override { return true; }
  double log_likelihood(const ParamVector& theta, const DataSet& data) const override;
  void simulate_summaries(const ParamVector& theta, Eigen::Ref<Matrix<double>> out,
                          Rng& rng) const override;

 private:
  Eigen::Index n_;
};

/// Which Ricker parameters are inferred; also fixes the summary statistic.
enum class RickerExperiment {
  /// theta = (log r), sigma^2 fixed; summary = (q0.25, median, q0.75) of counts.
  GrowthRate,
  /// theta = (log r, sigma^2); summary = (y_2, ..., y_T).
  GrowthRateAndVariance,
};

struct RickerOptions {
  RickerExperiment experiment = RickerExperiment::GrowthRate;
  double phi = 10.0;
  double n0 = 1.0;
  Eigen::Index series_length = 50;
  /// Innovation variance when it is not inferred.
  double fixed_sigma2 = 2.0;
};

class RickerModel final : public Model {
 public:
  RickerModel(RickerOptions options, Support support);

  std::string_view name() const override { return "ricker"; }
  Eigen::Index param_dim() const override;
  Eigen::Index summary_dim() const override;
  Eigen::Index sample_size() const override { return options_.series_length; }
  DataSet simulate(const ParamVector& theta, Rng& rng) const override;
  SummaryVector summarize(const DataSet& data) const override;

  const RickerOptions& options() const { return options_; }

 private:
  RickerOptions options_;
};

/// N(theta, 1) observations with the sample mean as summary. The scalar
/// analytic reference model: F_t(t_obs | theta) = Phi(sqrt(n) (t_obs - theta)).
class GaussianLocationModel final : public Model {
 public:
  GaussianLocationModel(Eigen::Index n, Support support);

  std::string_view name() const override { return "gaussian"; }
  Eigen::Index param_dim() const override { return 1; }
  Eigen::Index summary_dim() const override { return 1; }
  Eigen::Index sample_size() const override { return n_; }
  DataSet simulate(const ParamVector& theta, Rng& rng) const override;
  SummaryVector summarize(const DataSet& data) const override;
  bool has_likelihood() const override { return true; }
  double log_likelihood(const ParamVector& theta, const DataSet& data) const override;
  void simulate_summaries(const ParamVector& theta, Eigen::Ref<Matrix<double>> out,
                          Rng& rng) const override;

  /// CDF of the summary at t_obs under theta.
  double summary_cdf(double t_obs, double theta) const;

 private:
  Eigen::Index n_;
};

// ---------------------------------------------------------------------------
// Declarative model construction (configuration files, replicated studies).

struct ModelConfig {
  std::string name = "gaussian";  // logistic | mvt | mixture | ricker | gaussian
  Eigen::Index n = 10;            // sample size, or series length T for ricker
  Eigen::Index predictors = 3;    // logistic p
  std::uint64_t design_seed = 1;  // logistic design X ~ iid N(0, 1)
  Matrix<double> sigma;           // mvt scale; empty -> study default
  double nu = 10.0;
  RickerOptions ricker;
  std::optional<Support> support;  // empty -> model default
};

/// Study defaults: logistic [-6,6]^p, mvt [-5,5]^3, mixture [0,3],
/// ricker log r in [0,5] (sigma^2 in [0,6]), gaussian [-4,4].
Support default_support(const ModelConfig& config);
Matrix<double> default_mvt_sigma();
Matrix<double> standard_normal_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed);

std::unique_ptr<Model> make_model(const ModelConfig& config);

}  // namespace boxcd
