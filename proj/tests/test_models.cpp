#include "doctest.h"

#include "boxcd/models.hpp"
#include "oracles.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <vector>

using namespace boxcd;

namespace {

Support box(double lo, double hi, Eigen::Index p) {
  return {Vector<double>::Constant(p, lo), Vector<double>::Constant(p, hi)};
}

ParamVector vec(std::initializer_list<double> values) {
  ParamVector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST_SUITE("logistic") {
  TEST_CASE("zero coefficients give E[t] = column sums / 2") {
    const Matrix<double> X = standard_normal_design(20, 3, 7);
    LogisticModel model(X, box(-6, 6, 3));
    Rng rng(11);
    const int reps = 40000;
    Vector<double> sum = Vector<double>::Zero(3);
    Vector<double> sumsq = Vector<double>::Zero(3);
    for (int r = 0; r < reps; ++r) {
      const SummaryVector t = model.summarize(model.simulate(vec({0, 0, 0}), rng));
      sum += t;
      sumsq += t.cwiseProduct(t);
    }
    const Vector<double> mean = sum / reps;
    const Vector<double> expected = 0.5 * X.colwise().sum().transpose();
    for (int j = 0; j < 3; ++j) {
      const double sd = std::sqrt(sumsq(j) / reps - mean(j) * mean(j));
      CHECK(std::abs(mean(j) - expected(j)) < 3.5 * sd / std::sqrt(reps));
    }
  }

  TEST_CASE("mean of t matches sum_i x_i logistic(x_i1) at beta = (1,0,0)") {
    const Matrix<double> X = standard_normal_design(20, 3, 3);
    LogisticModel model(X, box(-6, 6, 3));
    Vector<double> expected = Vector<double>::Zero(3);
    Vector<double> var = Vector<double>::Zero(3);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double pr = oracle::logistic(X(i, 0));
      for (int j = 0; j < 3; ++j) {
        expected(j) += X(i, j) * pr;
        var(j) += X(i, j) * X(i, j) * pr * (1 - pr);
      }
    }
    Rng rng(5);
    const int reps = 100000;
    Matrix<double> buf(3, 2);
    Vector<double> sum = Vector<double>::Zero(3);
    for (int r = 0; r < reps / 2; ++r) {
      model.simulate_summaries(vec({1, 0, 0}), buf, rng);
      sum += buf.rowwise().sum();
    }
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(sum(j) / reps - expected(j)) < 3.5 * std::sqrt(var(j) / reps));
  }

  TEST_CASE("log-likelihood at beta = 0 is n log 0.5") {
    LogisticModel model(standard_normal_design(20, 3, 1), box(-6, 6, 3));
    Rng rng(2);
    const DataSet y = model.simulate(vec({0.3, -0.2, 0.1}), rng);
    CHECK(model.log_likelihood(vec({0, 0, 0}), y) == doctest::Approx(20 * std::log(0.5)));
  }

  TEST_CASE("log-likelihood matches direct Bernoulli formula") {
    const Matrix<double> X = standard_normal_design(20, 3, 9);
    LogisticModel model(X, box(-6, 6, 3));
    Rng rng(4);
    const ParamVector beta = vec({-0.25, 0, 0.25});
    const DataSet y = model.simulate(beta, rng);
    double ll = 0;
    for (Eigen::Index i = 0; i < 20; ++i) {
      const double pr = oracle::logistic(X.row(i).dot(vec({1.5, -2, 0.5})));
      ll += y(i, 0) > 0.5 ? std::log(pr) : std::log(1 - pr);
    }
    CHECK(model.log_likelihood(vec({1.5, -2, 0.5}), y) == doctest::Approx(ll).epsilon(1e-12));
  }

  TEST_CASE("dimension mismatch is a contract violation") {
    LogisticModel model(standard_normal_design(20, 3, 1), box(-6, 6, 3));
    Rng rng(1);
    CHECK_THROWS_AS(model.simulate(vec({0, 0}), rng), ContractViolation);
    CHECK_THROWS_AS(simulate_logistic(vec({0, 0}), standard_normal_design(5, 3, 1), rng),
                    ContractViolation);
  }

  TEST_CASE("study configuration builds") {
    ModelConfig c;
    c.name = "logistic";
    c.n = 20;
    const auto model = make_model(c);
    CHECK(model->param_dim() == 3);
    CHECK(model->summary_dim() == 3);
    CHECK(model->support().lower(0) == -6.0);
    CHECK(model->support().upper(2) == 6.0);
  }
}

TEST_SUITE("mvt") {
  TEST_CASE("study scale matrix and dimensions") {
    const Matrix<double> S = default_mvt_sigma();
    CHECK(S(0, 0) == 2.0);
    CHECK(S(0, 1) == -1.0);
    CHECK(S(1, 2) == 0.7);
    MultivariateTModel model(S, 10, 10, box(-5, 5, 3));
    Rng rng(1);
    const SummaryVector t = model.summarize(model.simulate(vec({0, -0.5, 0.5}), rng));
    CHECK(t.size() == 3);
  }

  TEST_CASE("medians are symmetric about zero") {
    MultivariateTModel model(Matrix<double>::Identity(3, 3), 10, 10, box(-5, 5, 3));
    Rng rng(21);
    const int reps = 20000;
    for (int j = 0; j < 3; ++j) {
      std::vector<double> meds;
      Rng r2(100 + j);
      for (int r = 0; r < reps; ++r)
        meds.push_back(model.summarize(model.simulate(vec({0, 0, 0}), r2))(j));
      CHECK(std::abs(oracle::mean(meds)) < 3.5 * std::sqrt(oracle::variance(meds) / reps));
    }
  }

  TEST_CASE("medians at location 5 are positive") {
    MultivariateTModel model(Matrix<double>::Identity(3, 3), 10, 10, box(-10, 10, 3));
    Rng rng(8);
    int positive = 0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r)
      positive += (model.summarize(model.simulate(vec({5, 5, 5}), rng)).array() > 0).all();
    CHECK(positive >= 0.999 * reps);
  }

  TEST_CASE("covariance equals nu / (nu - 2) sigma") {
    const Matrix<double> S = default_mvt_sigma();
    Rng rng(33);
    const DataSet x = simulate_mvt(vec({0, 0, 0}), S, 10, 200000, rng);
    const Matrix<double> centered = x.rowwise() - x.colwise().mean();
    const Matrix<double> cov = centered.transpose() * centered / (x.rows() - 1.0);
    const Matrix<double> expected = S * (10.0 / 8.0);
    CHECK((cov - expected).cwiseAbs().maxCoeff() < 0.05);
  }

  TEST_CASE("log-likelihood matches the density written with explicit inverse") {
    const Matrix<double> S = default_mvt_sigma();
    MultivariateTModel model(S, 10, 10, box(-5, 5, 3));
    Rng rng(3);
    const DataSet x = model.simulate(vec({0, -0.5, 0.5}), rng);
    const ParamVector mu = vec({0.2, -0.1, 0.4});
    const Matrix<double> inv = S.inverse();
    const double nu = 10, p = 3;
    double ll = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Vector<double> d = x.row(i).transpose() - mu;
      const double q = d.dot(inv * d);
      ll += std::lgamma((nu + p) / 2) - std::lgamma(nu / 2) - 0.5 * p * std::log(nu * M_PI) -
            0.5 * std::log(S.determinant()) - 0.5 * (nu + p) * std::log1p(q / nu);
    }
    CHECK(model.log_likelihood(mu, x) == doctest::Approx(ll).epsilon(1e-10));
  }

  TEST_CASE("non positive definite scale is rejected") {
    Matrix<double> bad = Matrix<double>::Identity(3, 3);
    bad(0, 0) = -1;
    CHECK_THROWS_AS(MultivariateTModel(bad, 10, 10, box(-5, 5, 3)), ContractViolation);
    Rng rng(1);
    CHECK_THROWS_AS(simulate_mvt(vec({0, 0, 0}), bad, 10, 5, rng), ContractViolation);
  }
}

TEST_SUITE("mixture") {
  TEST_CASE("theta = 0 gives unit variance") {
    Rng rng(1);
    const DataSet y = simulate_mixture(0.0, 100000, rng);
    std::vector<double> v(y.data(), y.data() + y.size());
    CHECK(oracle::variance(v) == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("variance is 1 + theta^2") {
    for (double theta : {0.5, 0.8, 2.0}) {
      Rng rng(static_cast<std::uint64_t>(theta * 10));
      const DataSet y = simulate_mixture(theta, 100000, rng);
      std::vector<double> v(y.data(), y.data() + y.size());
      const double target = 1 + theta * theta;
      // Var of the sample variance is (mu4 - sigma^4) / n; mu4 = 3 + 6 th^2 + th^4
      const double mu4 = 3 + 6 * theta * theta + std::pow(theta, 4);
      const double se = std::sqrt((mu4 - target * target) / 100000.0);
      CHECK(std::abs(oracle::variance(v) - target) < 3.5 * se);
    }
  }

  TEST_CASE("summary is the ascending sorted sample") {
    MixtureModel model(25, box(0, 3, 1));
    Rng rng(4);
    const DataSet y = model.simulate(vec({0.8}), rng);
    const SummaryVector t = model.summarize(y);
    CHECK(t.size() == 25);
    for (Eigen::Index i = 1; i < t.size(); ++i) CHECK(t(i - 1) <= t(i));
    std::vector<double> a(y.data(), y.data() + y.size());
    std::sort(a.begin(), a.end());
    for (Eigen::Index i = 0; i < t.size(); ++i) CHECK(t(i) == a[static_cast<std::size_t>(i)]);
  }

  TEST_CASE("log-likelihood examples") {
    MixtureModel one(1, box(0, 3, 1));
    DataSet y(1, 1);
    y(0, 0) = 0.0;
    CHECK(one.log_likelihood(vec({0}), y) == doctest::Approx(-0.5 * std::log(2 * M_PI)));
    y(0, 0) = 0.3;
    boost::math::normal_distribution<long double> n01;
    const long double direct = std::log(0.5L * boost::math::pdf(n01, 1.3L) +
                                        0.5L * boost::math::pdf(n01, -0.7L));
    CHECK(one.log_likelihood(vec({1}), y) ==
          doctest::Approx(static_cast<double>(direct)).epsilon(1e-13));
  }

  TEST_CASE("sorted summaries under theta and -theta agree in distribution") {
    MixtureModel model(10, box(-3, 3, 1));
    const int reps = 20000;
    std::vector<double> a, b;
    Rng r1(1), r2(2);
    for (int r = 0; r < reps; ++r) {
      a.push_back(model.summarize(model.simulate(vec({0.8}), r1))(2));
      b.push_back(model.summarize(model.simulate(vec({-0.8}), r2))(2));
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    // two-sample KS statistic against its 0.1% critical value
    double ks = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] <= b[j]) ++i; else ++j;
      ks = std::max(ks, std::abs(double(i) / reps - double(j) / reps));
    }
    CHECK(ks < 1.95 * std::sqrt(2.0 / reps));
  }
}

TEST_SUITE("ricker") {
  TEST_CASE("noiseless latent path follows the recursion") {
    Rng rng(1);
    const RickerPath path = simulate_ricker_path(std::log(3.0), 0.0, 10, 1, 30, rng);
    double n = 1;
    for (Eigen::Index t = 0; t < 30; ++t) {
      n = 3.0 * n * std::exp(-n);
      CHECK(std::exp(path.log_population(t)) == doctest::Approx(n).epsilon(1e-12));
    }
  }

  TEST_CASE("counts have Poisson mean phi N(t) on a frozen path") {
    const int reps = 100000;
    Vector<double> sum = Vector<double>::Zero(6);
    Vector<double> n;
    for (int r = 0; r < reps; ++r) {
      Rng rng(derive_seed(99, static_cast<std::uint64_t>(r)));
      const RickerPath path = simulate_ricker_path(2.0, 0.0, 10, 1, 6, rng);
      sum += path.counts;
      n = path.log_population.array().exp();
    }
    for (Eigen::Index t = 0; t < 6; ++t) {
      const double lambda = 10 * n(t);
      CHECK(std::abs(sum(t) / reps - lambda) < 3.5 * std::sqrt(lambda / reps));
    }
  }

  TEST_CASE("positivity and integer counts") {
    Rng rng(12);
    for (int r = 0; r < 200; ++r) {
      const RickerPath path = simulate_ricker_path(4.5, 5.0, 10, 1, 50, rng);
      CHECK(path.log_population.allFinite());
      CHECK((path.counts.array() >= 0).all());
      CHECK((path.counts.array() == path.counts.array().round()).all());
    }
  }

  TEST_CASE("experiment summaries have the documented dimensions") {
    RickerOptions one;
    RickerModel growth(one, box(0, 5, 1));
    CHECK(growth.param_dim() == 1);
    CHECK(growth.summary_dim() == 3);
    RickerOptions two;
    two.experiment = RickerExperiment::GrowthRateAndVariance;
    two.series_length = 20;
    RickerModel full(two, Support{vec({0, 0}), vec({5, 6})});
    CHECK(full.param_dim() == 2);
    CHECK(full.summary_dim() == 19);
    Rng rng(1);
    const DataSet y = full.simulate(vec({2, 2}), rng);
    const SummaryVector t = full.summarize(y);
    CHECK(t.size() == 19);
    for (Eigen::Index i = 0; i < 19; ++i) CHECK(t(i) == y(i + 1, 0));
  }

  TEST_CASE("quantile summary uses linear interpolation") {
    Vector<double> v(4);
    v << 4, 1, 3, 2;
    CHECK(quantile_type7(v, 0.25) == doctest::Approx(1.75));
    CHECK(quantile_type7(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_type7(v, 0.75) == doctest::Approx(3.25));
  }

  TEST_CASE("likelihood is unsupported") {
    RickerModel model(RickerOptions{}, box(0, 5, 1));
    CHECK_FALSE(model.has_likelihood());
    Rng rng(1);
    CHECK_THROWS_AS(model.log_likelihood(vec({2}), model.simulate(vec({2}), rng)),
                    UnsupportedCapability);
  }

  TEST_CASE("invalid constants are rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(simulate_ricker_path(2, 1, 0, 1, 10, rng), ContractViolation);
    CHECK_THROWS_AS(simulate_ricker_path(2, 1, 10, -1, 10, rng), ContractViolation);
  }
}

TEST_SUITE("contracts") {
  TEST_CASE("every model keeps the summary dimension and is deterministic") {
    for (const char* name : {"logistic", "mvt", "mixture", "ricker", "gaussian"}) {
      ModelConfig c;
      c.name = name;
      c.n = std::string(name) == "ricker" ? 50 : 12;
      c.ricker.series_length = 50;
      const auto model = make_model(c);
      const Support& s = model->support();
      for (int k = 0; k < 20; ++k) {
        Rng prng(derive_seed(1, static_cast<std::uint64_t>(k)));
        ParamVector theta(s.dim());
        for (Eigen::Index j = 0; j < s.dim(); ++j)
          theta(j) = s.lower(j) + prng.uniform() * (s.upper(j) - s.lower(j));
        Rng a(77), b(77);
        const DataSet ya = model->simulate(theta, a);
        const DataSet yb = model->simulate(theta, b);
        CHECK(ya == yb);
        const SummaryVector t = model->summarize(ya);
        CHECK(t.size() == model->summary_dim());
        CHECK(t.allFinite());
      }
    }
  }

  TEST_CASE("batched summaries equal summarize(simulate) on the same stream") {
    for (const char* name : {"logistic", "mvt", "mixture", "ricker", "gaussian"}) {
      for (int n : {9, 10}) {
        ModelConfig c;
        c.name = name;
        c.n = std::string(name) == "ricker" ? 50 : n;
        c.ricker.series_length = 50;
        const auto model = make_model(c);
        const ParamVector theta = 0.5 * (model->support().lower + model->support().upper);
        Matrix<double> batch(model->summary_dim(), 4);
        Rng a(5), b(5);
        model->simulate_summaries(theta, batch, a);
        // summation order may differ from summarize()
        for (Eigen::Index s = 0; s < batch.cols(); ++s) {
          const SummaryVector t = model->summarize(model->simulate(theta, b));
          CHECK_MESSAGE(((batch.col(s) - t).array().abs() <=
                         1e-12 * (1.0 + t.array().abs())).all(),
                        std::string(name));
        }
      }
    }
  }

  TEST_CASE("non-integer degrees of freedom still simulate") {
    MultivariateTModel model(default_mvt_sigma(), 2.5, 10, box(-5, 5, 3));
    Rng a(3), b(3);
    Matrix<double> batch(3, 2);
    model.simulate_summaries(vec({0, 0, 0}), batch, a);
    CHECK(batch.col(0) == model.summarize(model.simulate(vec({0, 0, 0}), b)));
  }

  TEST_CASE("parameters outside length or non-finite are rejected") {
    MixtureModel model(5, box(0, 3, 1));
    Rng rng(1);
    CHECK_THROWS_AS(model.simulate(vec({1, 2}), rng), ContractViolation);
    CHECK_THROWS_AS(model.simulate(vec({NAN}), rng), ContractViolation);
  }

  TEST_CASE("gaussian summary cdf") {
    GaussianLocationModel model(4, box(-4, 4, 1));
    CHECK(model.summary_cdf(0.5, 0.0) == doctest::Approx(oracle::normal_cdf(1.0)));
    CHECK(model.log_likelihood(vec({0}), DataSet::Zero(4, 1)) ==
          doctest::Approx(-2 * std::log(2 * M_PI)));
  }

  TEST_CASE("unknown model name") {
    ModelConfig c;
    c.name = "weibull";
    CHECK_THROWS_AS(make_model(c), ContractViolation);
  }
}
