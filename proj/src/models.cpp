#include "boxcd/models.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace boxcd {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 log(2 pi)

double log_logistic(double eta) {
  // log(1 / (1 + e^-eta)) without overflow
  return eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

void sort_column(Eigen::Ref<Vector<double>> column) {
  std::sort(column.data(), column.data() + column.size());
}

}  // namespace

// ---------------------------------------------------------------------------

Model::Model(Support support) : support_(std::move(support)) { support_.validate(); }

double Model::log_likelihood(const ParamVector&, const DataSet&) const {
  throw UnsupportedCapability("model '" + std::string(name()) +
                              "' has no tractable likelihood");
}

void Model::simulate_summaries(const ParamVector& theta, Eigen::Ref<Matrix<double>> out,
                               Rng& rng) const {
  for (Eigen::Index s = 0; s < out.cols(); ++s) out.col(s) = summarize(simulate(theta, rng));
}

void Model::check_theta(const ParamVector& theta) const {
  require(theta.size() == param_dim(), std::string(name()) + ": parameter has length " +
                                           std::to_string(theta.size()) + ", expected " +
                                           std::to_string(param_dim()));
  require(theta.allFinite(), std::string(name()) + ": parameter must be finite");
}

// ---------------------------------------------------------------------------
// Simulators

DataSet simulate_logistic(const ParamVector& beta, const Matrix<double>& design, Rng& rng) {
  require(beta.size() == design.cols(), "logistic: coefficient length does not match design");
  const Vector<double> eta = design * beta;
  DataSet y(design.rows(), 1);
  for (Eigen::Index i = 0; i < eta.size(); ++i) y(i, 0) = rng.uniform() < logistic(eta(i));
  return y;
}

namespace {

// Scale-mixture divisor sqrt(chi2_nu / nu). Integer nu uses a sum of squared
// normals, which is exact and much cheaper than the gamma sampler.
class MixingScale {
 public:
  explicit MixingScale(double nu)
      : nu_(nu), integer_(nu == std::floor(nu) && nu <= 64), chi2_(nu) {}

  template <typename Normal>
  double operator()(Rng& rng, Normal& normal) {
    double c = 0.0;
    if (integer_) {
      for (int k = 0; k < static_cast<int>(nu_); ++k) {
        const double z = normal(rng);
        c += z * z;
      }
    } else {
      c = chi2_(rng);
    }
    return std::sqrt(c / nu_);
  }

 private:
  double nu_;
  bool integer_;
  boost::random::chi_squared_distribution<double> chi2_;
};

// One draw mu + L z / w written to out[0], out[stride], ...
template <typename Normal>
void mvt_draw(const ParamVector& mu, const Matrix<double>& chol, MixingScale& scale,
              Normal& normal, Rng& rng, double* z, double* out, Eigen::Index stride) {
  const Eigen::Index p = mu.size();
  for (Eigen::Index j = 0; j < p; ++j) z[j] = normal(rng);
  const double w = scale(rng, normal);
  for (Eigen::Index j = 0; j < p; ++j) {
    double x = 0.0;
    for (Eigen::Index k = 0; k <= j; ++k) x += chol(j, k) * z[k];
    out[j * stride] = mu(j) + x / w;
  }
}

double median_in_place(double* first, double* last) {
  const auto n = last - first;
  double* mid = first + n / 2;
  std::nth_element(first, mid, last);
  if (n % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(first, mid));
}

DataSet simulate_mvt_factor(const ParamVector& mu, const Matrix<double>& chol, double nu,
                            Eigen::Index n, Rng& rng) {
  const Eigen::Index p = mu.size();
  boost::random::normal_distribution<double> normal;
  MixingScale scale(nu);
  DataSet out(n, p);
  std::vector<double> z(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < n; ++i)
    mvt_draw(mu, chol, scale, normal, rng, z.data(), &out(i, 0), out.outerStride());
  return out;
}

Matrix<double> checked_cholesky(const Matrix<double>& sigma) {
  require(sigma.rows() == sigma.cols() && sigma.rows() > 0, "mvt: scale matrix must be square");
  require(sigma.isApprox(sigma.transpose(), 1e-12), "mvt: scale matrix must be symmetric");
  Eigen::LLT<Matrix<double>> llt(sigma);
  require(llt.info() == Eigen::Success, "mvt: scale matrix must be positive definite");
  return llt.matrixL();
}

}  // namespace

DataSet simulate_mvt(const ParamVector& mu, const Matrix<double>& sigma, double nu,
                     Eigen::Index n, Rng& rng) {
  require(mu.size() == sigma.rows(), "mvt: location length does not match scale matrix");
  require(nu > 0, "mvt: degrees of freedom must be positive");
  return simulate_mvt_factor(mu, checked_cholesky(sigma), nu, n, rng);
}

DataSet simulate_mixture(double theta, Eigen::Index n, Rng& rng) {
  require(n >= 1, "mixture: n must be at least 1");
  boost::random::normal_distribution<double> normal;
  DataSet y(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sign = (rng() >> 63) ? 1.0 : -1.0;
    y(i, 0) = normal(rng) + sign * theta;
  }
  return y;
}

RickerPath simulate_ricker_path(double log_r, double sigma2, double phi, double n0,
                                Eigen::Index series_length, Rng& rng) {
  require(phi > 0, "ricker: phi must be positive");
  require(n0 > 0, "ricker: N(0) must be positive");
  require(sigma2 >= 0, "ricker: innovation variance must be non-negative");
  require(series_length >= 2, "ricker: series length must be at least 2");

  boost::random::normal_distribution<double> normal;
  const double sigma = std::sqrt(sigma2);
  RickerPath path{Vector<double>(series_length), Vector<double>(series_length)};
  double log_n = std::log(n0);
  for (Eigen::Index t = 0; t < series_length; ++t) {
    const double noise = sigma > 0 ? sigma * normal(rng) : 0.0;
    log_n = log_r + log_n - std::exp(log_n) + noise;
    path.log_population(t) = log_n;
    // Poisson means beyond 1e15 are unreachable for sane supports; cap keeps
    // the integer sampler in range.
    const double mean = std::min(phi * std::exp(log_n), 1e15);
    if (mean > 0) {
      boost::random::poisson_distribution<std::int64_t, double> poisson(mean);
      path.counts(t) = static_cast<double>(poisson(rng));
    } else {
      path.counts(t) = 0.0;
    }
  }
  return path;
}

DataSet simulate_ricker(double log_r, double sigma2, double phi, double n0,
                        Eigen::Index series_length, Rng& rng) {
  return simulate_ricker_path(log_r, sigma2, phi, n0, series_length, rng).counts;
}

double quantile_type7(Vector<double> values, double prob) {
  require(values.size() > 0, "quantile of an empty sample");
  require(prob >= 0 && prob <= 1, "quantile probability must be in [0, 1]");
  std::sort(values.data(), values.data() + values.size());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, values.size() - 1);
  return values(lo) + (h - static_cast<double>(lo)) * (values(hi) - values(lo));
}

Vector<double> column_medians(const Matrix<double>& data) {
  const Eigen::Index n = data.rows();
  Vector<double> out(data.cols());
  std::vector<double> buf(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = data(i, j);
    out(j) = median_in_place(buf.data(), buf.data() + n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// LogisticModel

LogisticModel::LogisticModel(Matrix<double> design, Support support)
    : Model(std::move(support)), design_(std::move(design)) {
  require(design_.rows() > 0 && design_.cols() > 0, "logistic: empty design");
  require(this->support().dim() == design_.cols(), "logistic: support dimension != predictors");
}

DataSet LogisticModel::simulate(const ParamVector& theta, Rng& rng) const {
  check_theta(theta);
  return simulate_logistic(theta, design_, rng);
}

SummaryVector LogisticModel::summarize(const DataSet& data) const {
  require(data.rows() == design_.rows() && data.cols() == 1, "logistic: data shape mismatch");
  return design_.transpose() * data.col(0);
}

double LogisticModel::log_likelihood(const ParamVector& theta, const DataSet& data) const {
  check_theta(theta);
  require(data.rows() == design_.rows() && data.cols() == 1, "logistic: data shape mismatch");
  const Vector<double> eta = design_ * theta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    ll += data(i, 0) > 0.5 ? log_logistic(eta(i)) : log_logistic(-eta(i));
  return ll;
}

void LogisticModel::simulate_summaries(const ParamVector& theta, Eigen::Ref<Matrix<double>> out,
                                       Rng& rng) const {
  check_theta(theta);
  const Eigen::Index n = design_.rows();
  Vector<double> prob = design_ * theta;
  for (Eigen::Index i = 0; i < n; ++i) prob(i) = logistic(prob(i));
  for (Eigen::Index s = 0; s < out.cols(); ++s) {
    auto col = out.col(s);
    col.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      if (rng.uniform() < prob(i)) col += design_.row(i).transpose();
  }
}

// ---------------------------------------------------------------------------
// MultivariateTModel

MultivariateTModel::MultivariateTModel(Matrix<double> sigma, double nu, Eigen::Index n,
                                       Support support)
    : Model(std::move(support)), sigma_(std::move(sigma)), nu_(nu), n_(n) {
  require(nu_ > 0, "mvt: degrees of freedom must be positive");
  require(n_ >= 1, "mvt: n must be at least 1");
  chol_ = checked_cholesky(sigma_);
  require(this->support().dim() == sigma_.rows(), "mvt: support dimension != scale dimension");
  chol_inv_ = chol_.triangularView<Eigen::Lower>().solve(
      Matrix<double>::Identity(sigma_.rows(), sigma_.rows()));
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

DataSet MultivariateTModel::simulate(const ParamVector& theta, Rng& rng) const {
  check_theta(theta);
  return simulate_mvt_factor(theta, chol_, nu_, n_, rng);
}

SummaryVector MultivariateTModel::summarize(const DataSet& data) const {
  require(data.cols() == sigma_.rows() && data.rows() == n_, "mvt: data shape mismatch");
  return column_medians(data);
}

void MultivariateTModel::simulate_summaries(const ParamVector& theta,
                                            Eigen::Ref<Matrix<double>> out, Rng& rng) const {
  check_theta(theta);
  const Eigen::Index p = sigma_.rows();
  boost::random::normal_distribution<double> normal;
  MixingScale scale(nu_);
  // column-major n x p, same draw order as simulate()
  std::vector<double> work(static_cast<std::size_t>(n_ * p));
  std::vector<double> z(static_cast<std::size_t>(p));
  for (Eigen::Index s = 0; s < out.cols(); ++s) {
    for (Eigen::Index i = 0; i < n_; ++i)
      mvt_draw(theta, chol_, scale, normal, rng, z.data(), work.data() + i, n_);
    for (Eigen::Index j = 0; j < p; ++j)
      out(j, s) = median_in_place(work.data() + j * n_, work.data() + (j + 1) * n_);
  }
}

double MultivariateTModel::log_likelihood(const ParamVector& theta, const DataSet& data) const {
  check_theta(theta);
  require(data.cols() == sigma_.rows(), "mvt: data shape mismatch");
  const auto p = static_cast<double>(sigma_.rows());
  const double norm = std::lgamma(0.5 * (nu_ + p)) - std::lgamma(0.5 * nu_) -
                      0.5 * p * std::log(nu_ * std::numbers::pi) - 0.5 * log_det_;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Vector<double> z = chol_inv_ * (data.row(i).transpose() - theta);
    ll += norm - 0.5 * (nu_ + p) * std::log1p(z.squaredNorm() / nu_);
  }
  return ll;
}

// ---------------------------------------------------------------------------
// MixtureModel

MixtureModel::MixtureModel(Eigen::Index n, Support support) : Model(std::move(support)), n_(n) {
  require(n_ >= 1, "mixture: n must be at least 1");
  require(this->support().dim() == 1, "mixture: support must be one-dimensional");
}

DataSet MixtureModel::simulate(const ParamVector& theta, Rng& rng) const {
  check_theta(theta);
  return simulate_mixture(theta(0), n_, rng);
}

SummaryVector MixtureModel::summarize(const DataSet& data) const {
  require(data.rows() == n_ && data.cols() == 1, "mixture: data shape mismatch");
  SummaryVector t = data.col(0);
  std::stable_sort(t.data(), t.data() + t.size());
  return t;
}

double MixtureModel::log_likelihood(const ParamVector& theta, const DataSet& data) const {
  check_theta(theta);
  require(data.cols() == 1, "mixture: data shape mismatch");
  const double th = theta(0);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double a = -0.5 * (data(i, 0) + th) * (data(i, 0) + th);
    const double b = -0.5 * (data(i, 0) - th) * (data(i, 0) - th);
    const double hi = std::max(a, b);
    ll += hi + std::log(0.5 * std::exp(a - hi) + 0.5 * std::exp(b - hi)) - kLogSqrt2Pi;
  }
  return ll;
}

void MixtureModel::simulate_summaries(const ParamVector& theta, Eigen::Ref<Matrix<double>> out,
                                      Rng& rng) const {
  check_theta(theta);
  boost::random::normal_distribution<double> normal;
  const double th = theta(0);
  for (Eigen::Index s = 0; s < out.cols(); ++s) {
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double sign = (rng() >> 63) ? 1.0 : -1.0;
      out(i, s) = normal(rng) + sign * th;
    }
    sort_column(out.col(s));
  }
}

// ---------------------------------------------------------------------------
// RickerModel

RickerModel::RickerModel(RickerOptions options, Support support)
    : Model(std::move(support)), options_(options) {
  require(options_.phi > 0, "ricker: phi must be positive");
  require(options_.n0 > 0, "ricker: N(0) must be positive");
  require(options_.series_length >= 2, "ricker: series length must be at least 2");
  require(options_.fixed_sigma2 >= 0, "ricker: innovation variance must be non-negative");
  require(this->support().dim() == param_dim(), "ricker: support dimension mismatch");
}

Eigen::Index RickerModel::param_dim() const {
  return options_.experiment == RickerExperiment::GrowthRate ? 1 : 2;
}

Eigen::Index RickerModel::summary_dim() const {
  return options_.experiment == RickerExperiment::GrowthRate ? 3 : options_.series_length - 1;
}

DataSet RickerModel::simulate(const ParamVector& theta, Rng& rng) const {
  check_theta(theta);
  const double sigma2 =
      options_.experiment == RickerExperiment::GrowthRate ? options_.fixed_sigma2 : theta(1);
  return simulate_ricker(theta(0), std::max(sigma2, 0.0), options_.phi, options_.n0,
                         options_.series_length, rng);
}

SummaryVector RickerModel::summarize(const DataSet& data) const {
  require(data.rows() == options_.series_length && data.cols() == 1,
          "ricker: data shape mismatch");
  if (options_.experiment == RickerExperiment::GrowthRate) {
    const Vector<double> counts = data.col(0);
    SummaryVector t(3);
    t << quantile_type7(counts, 0.25), quantile_type7(counts, 0.5), quantile_type7(counts, 0.75);
    return t;
  }
  return data.col(0).tail(options_.series_length - 1);
}

// ---------------------------------------------------------------------------
// GaussianLocationModel

GaussianLocationModel::GaussianLocationModel(Eigen::Index n, Support support)
    : Model(std::move(support)), n_(n) {
  require(n_ >= 1, "gaussian: n must be at least 1");
  require(this->support().dim() == 1, "gaussian: support must be one-dimensional");
}

DataSet GaussianLocationModel::simulate(const ParamVector& theta, Rng& rng) const {
  check_theta(theta);
  boost::random::normal_distribution<double> normal;
  DataSet y(n_, 1);
  for (Eigen::Index i = 0; i < n_; ++i) y(i, 0) = theta(0) + normal(rng);
  return y;
}

SummaryVector GaussianLocationModel::summarize(const DataSet& data) const {
  require(data.rows() == n_ && data.cols() == 1, "gaussian: data shape mismatch");
  return SummaryVector::Constant(1, data.mean());
}

double GaussianLocationModel::log_likelihood(const ParamVector& theta,
                                             const DataSet& data) const {
  check_theta(theta);
  return -0.5 * (data.array() - theta(0)).square().sum() -
         static_cast<double>(data.size()) * kLogSqrt2Pi;
}

void GaussianLocationModel::simulate_summaries(const ParamVector& theta,
                                               Eigen::Ref<Matrix<double>> out, Rng& rng) const {
  check_theta(theta);
  boost::random::normal_distribution<double> normal;
  for (Eigen::Index s = 0; s < out.cols(); ++s) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) sum += theta(0) + normal(rng);
    out(0, s) = sum / static_cast<double>(n_);
  }
}

double GaussianLocationModel::summary_cdf(double t_obs, double theta) const {
  const boost::math::normal_distribution<double> standard;
  return boost::math::cdf(standard, std::sqrt(static_cast<double>(n_)) * (t_obs - theta));
}

// ---------------------------------------------------------------------------
// Construction

Matrix<double> default_mvt_sigma() {
  Matrix<double> sigma(3, 3);
  sigma << 2.0, -1.0, 0.4, -1.0, 1.6, 0.7, 0.4, 0.7, 1.0;
  return sigma;
}

Matrix<double> standard_normal_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  boost::random::normal_distribution<double> normal;
  Matrix<double> x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = normal(rng);
  return x;
}

Support default_support(const ModelConfig& config) {
  auto box = [](Eigen::Index dim, double lo, double hi) {
    return Support{Vector<double>::Constant(dim, lo), Vector<double>::Constant(dim, hi)};
  };
  if (config.name == "logistic") return box(config.predictors, -6.0, 6.0);
  if (config.name == "mvt") {
    const Eigen::Index dim = config.sigma.size() > 0 ? config.sigma.rows() : 3;
    return box(dim, -5.0, 5.0);
  }
  if (config.name == "mixture") return box(1, 0.0, 3.0);
  if (config.name == "gaussian") return box(1, -4.0, 4.0);
  if (config.name == "ricker") {
    if (config.ricker.experiment == RickerExperiment::GrowthRate) return box(1, 0.0, 5.0);
    Support s = box(2, 0.0, 5.0);
    s.upper(1) = 6.0;
    return s;
  }
  throw ContractViolation("unknown model '" + config.name + "'");
}

std::unique_ptr<Model> make_model(const ModelConfig& config) {
  Support support = config.support ? *config.support : default_support(config);
  if (config.name == "logistic") {
    return std::make_unique<LogisticModel>(
        standard_normal_design(config.n, config.predictors, config.design_seed),
        std::move(support));
  }
  if (config.name == "mvt") {
    Matrix<double> sigma = config.sigma.size() > 0 ? config.sigma : default_mvt_sigma();
    return std::make_unique<MultivariateTModel>(std::move(sigma), config.nu, config.n,
                                                std::move(support));
  }
  if (config.name == "mixture") return std::make_unique<MixtureModel>(config.n, std::move(support));
  if (config.name == "gaussian")
    return std::make_unique<GaussianLocationModel>(config.n, std::move(support));
  if (config.name == "ricker") {
    RickerOptions options = config.ricker;
    options.series_length = config.n;
    return std::make_unique<RickerModel>(options, std::move(support));
  }
  throw ContractViolation("unknown model '" + config.name + "'");
}

}  // namespace boxcd
