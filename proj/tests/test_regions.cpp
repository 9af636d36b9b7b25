#include "doctest.h"

#include "boxcd/models.hpp"
#include "boxcd/regions.hpp"
#include "boxcd/sampler.hpp"
#include "oracles.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <memory>

using namespace boxcd;

namespace {

ParamVector at(double x) { return ParamVector::Constant(1, x); }

Support interval(double lo, double hi) { return {at(lo), at(hi)}; }

// Gaussian location surface: n = 10, t_obs fixed, large R.
struct GaussianFixture {
  GaussianLocationModel model{10, interval(-4, 4)};
  double t_obs = 0.2;
  std::shared_ptr<const DepthSurface> surface;

  GaussianFixture() {
    SamplerConfig cfg;
    cfg.proposals = 100000;
    cfg.seed = 5;
    SamplerOutput out = run_sampler(model, SummaryVector::Constant(1, t_obs), cfg);
    surface = std::make_shared<const DepthSurface>(
        DepthSurface::fit(std::move(out.accepted), model.support()));
  }
};

Matrix<double> normal_sample(Eigen::Index m, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  boost::random::normal_distribution<double> n01;
  Matrix<double> x(m, p);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n01(rng);
  return x;
}

}  // namespace

TEST_SUITE("thresholds") {
  TEST_CASE("rule values") {
    CHECK(region_threshold(0.25, {RuleKind::LevelSetAlphaM, 0.05}) == doctest::Approx(0.0125));
    CHECK(region_threshold(0.25, {RuleKind::ScalarExactEquitail, 0.05}) ==
          doctest::Approx(0.024375));
    CHECK(region_threshold(0.25, {RuleKind::LevelSetAlphaM, 1e-12}) < 1e-12);
    CHECK(region_threshold(0.25, {RuleKind::ScalarExactEquitail, 1e-12}) < 1e-11);
  }

  TEST_CASE("equi-tail threshold is the law of 4U(1-U)") {
    // Pr(4U(1-U) <= q) = 1 - sqrt(1 - q); the alpha quantile is 1 - (1 - alpha)^2
    Rng rng(1);
    const int n = 200000;
    for (double alpha : {0.05, 0.2, 0.5}) {
      const double q = region_threshold(1.0, {RuleKind::ScalarExactEquitail, alpha});
      int below = 0;
      for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        below += 4 * u * (1 - u) <= q;
      }
      CHECK(std::abs(double(below) / n - alpha) < 3.5 * oracle::binomial_se(alpha, n));
      // the cut sits exactly at F = alpha / 2
      CHECK(4 * (alpha / 2) * (1 - alpha / 2) == doctest::Approx(q));
    }
  }

  TEST_CASE("equi-tail threshold exceeds alpha M") {
    for (double a = 0.01; a < 1; a += 0.01)
      CHECK(region_threshold(1, {RuleKind::ScalarExactEquitail, a}) >
            region_threshold(1, {RuleKind::LevelSetAlphaM, a}));
  }

  TEST_CASE("alpha outside (0, 1) and unknown names") {
    CHECK_THROWS_AS(RegionRule({RuleKind::LevelSetAlphaM, 0.0}).validate(), ContractViolation);
    CHECK_THROWS_AS(RegionRule({RuleKind::LevelSetAlphaM, 1.0}).validate(), ContractViolation);
    CHECK_THROWS_AS(parse_rule_kind("hpd"), ContractViolation);
    CHECK(parse_rule_kind("alpha-m") == RuleKind::LevelSetAlphaM);
    CHECK(parse_rule_kind("equitail") == RuleKind::ScalarExactEquitail);
    CHECK(parse_rule_kind(to_string(RuleKind::ScalarExactEquitail)) ==
          RuleKind::ScalarExactEquitail);
    CHECK(default_rule_kind(1) == RuleKind::ScalarExactEquitail);
    CHECK(default_rule_kind(3) == RuleKind::LevelSetAlphaM);
    CHECK(parse_query_mode("knn") == QueryMode::Knn);
    CHECK_THROWS_AS(parse_query_mode("nearest"), ContractViolation);
  }
}

TEST_SUITE("membership") {
  TEST_CASE("the maximizer belongs at every level") {
    const auto surface =
        std::make_shared<const DepthSurface>(DepthSurface::fit(normal_sample(300, 2, 1)));
    for (RuleKind kind : {RuleKind::LevelSetAlphaM, RuleKind::ScalarExactEquitail})
      for (double a : {0.01, 0.05, 0.2, 0.5, 0.9, 0.999}) {
        const ConfidenceRegion region(surface, {kind, a});
        CHECK(member(region, surface->theta_hat(), QueryMode::Kde));
      }
  }

  TEST_CASE("far points are outside with kde queries") {
    const auto surface =
        std::make_shared<const DepthSurface>(DepthSurface::fit(normal_sample(300, 1, 2)));
    const ConfidenceRegion region(surface, {RuleKind::LevelSetAlphaM, 0.05});
    CHECK_FALSE(member(region, at(50.0), QueryMode::Kde));
  }

  TEST_CASE("gaussian location: equi-tail membership matches the analytic test") {
    const GaussianFixture fx;
    const ConfidenceRegion region(fx.surface, {RuleKind::ScalarExactEquitail, 0.1});
    const double h = fx.surface->coordinate_bandwidths()(0);
    // analytic region alpha/2 <= F <= 1 - alpha/2 with F = Phi(sqrt(n)(t - theta))
    const double z = 1.6448536269514722 / std::sqrt(10.0);
    const double lo = fx.t_obs - z, hi = fx.t_obs + z;
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
      const double theta = -1.5 + 3.0 * i / 199;
      if (std::abs(theta - lo) < 2 * h || std::abs(theta - hi) < 2 * h) continue;
      const double F = fx.model.summary_cdf(fx.t_obs, theta);
      CHECK(member(region, at(theta), QueryMode::Kde) == (F >= 0.05 && F <= 0.95));
      ++checked;
    }
    CHECK(checked > 100);
  }

  TEST_CASE("kde and knn agree on a dense interior grid") {
    const GaussianFixture fx;
    const ConfidenceRegion region(fx.surface, {RuleKind::ScalarExactEquitail, 0.1});
    int agree = 0;
    const int n = 400;
    for (int i = 0; i < n; ++i) {
      const double theta = -0.8 + 2.0 * i / (n - 1);
      agree += member(region, at(theta), QueryMode::Kde) ==
               member(region, at(theta), QueryMode::Knn);
    }
    CHECK(agree >= 0.95 * n);
  }

  TEST_CASE("accepted members reach the threshold") {
    const auto surface =
        std::make_shared<const DepthSurface>(DepthSurface::fit(normal_sample(200, 2, 3)));
    const ConfidenceRegion region(surface, {RuleKind::LevelSetAlphaM, 0.3});
    const auto members = region.accepted_members();
    CHECK(!members.empty());
    std::size_t expected = 0;
    for (Eigen::Index i = 0; i < surface->size(); ++i)
      expected += surface->cached_depths()(i) >= region.threshold();
    CHECK(members.size() == expected);
  }
}

TEST_SUITE("scalar interval") {
  TEST_CASE("matches the analytic equi-tailed interval") {
    const GaussianFixture fx;
    const double h = fx.surface->coordinate_bandwidths()(0);
    const double grid = 8.0 / (kScalarGridPoints - 1);
    for (double alpha : {0.05, 0.2}) {
      const ScalarInterval iv = scalar_interval(*fx.surface, alpha);
      const double z = (alpha == 0.05 ? 1.959963984540054 : 1.2815515655446004) / std::sqrt(10.0);
      CHECK(std::abs(iv.lower - (fx.t_obs - z)) < grid + 2 * h);
      CHECK(std::abs(iv.upper - (fx.t_obs + z)) < grid + 2 * h);
      CHECK_FALSE(iv.multimodal);
    }
  }

  TEST_CASE("nested and containing the maximizer") {
    const GaussianFixture fx;
    const ScalarInterval wide = scalar_interval(*fx.surface, 0.5);
    const ScalarInterval narrow = scalar_interval(*fx.surface, 0.9);
    CHECK(wide.lower <= narrow.lower);
    CHECK(narrow.upper <= wide.upper);
    const double th = fx.surface->theta_hat()(0);
    CHECK(narrow.lower <= th);
    CHECK(th <= narrow.upper);
  }

  TEST_CASE("length shrinks towards zero as alpha approaches 1") {
    const GaussianFixture fx;
    const double grid = 8.0 / (kScalarGridPoints - 1);
    CHECK(scalar_interval(*fx.surface, 0.999999).length() <= 2 * grid);
  }

  TEST_CASE("two separated clusters flag multimodality") {
    Matrix<double> x(400, 1);
    x << (normal_sample(200, 1, 4).array() * 0.3 - 2).matrix(),
        (normal_sample(200, 1, 5).array() * 0.3 + 2).matrix();
    const auto s = DepthSurface::fit(x, interval(-4, 4));
    const ScalarInterval iv = scalar_interval(s, RegionRule{RuleKind::LevelSetAlphaM, 0.3});
    CHECK(iv.multimodal);
    CHECK(iv.lower < -2);
    CHECK(iv.upper > 2);
  }

  TEST_CASE("requires a scalar parameter") {
    const auto s = DepthSurface::fit(normal_sample(50, 2, 6));
    CHECK_THROWS_AS(scalar_interval(s, 0.05), ContractViolation);
  }
}

TEST_SUITE("grid export") {
  TEST_CASE("flags follow the threshold and nest across levels") {
    const Support box{Vector<double>::Constant(2, -4), Vector<double>::Constant(2, 4)};
    const auto surface =
        std::make_shared<const DepthSurface>(DepthSurface::fit(normal_sample(300, 2, 7), box));
    const Lattice lattice = lattice_over(box, 41);
    CHECK(lattice.size() == 41 * 41);
    const ConfidenceRegion r95(surface, {RuleKind::LevelSetAlphaM, 0.05});
    const ConfidenceRegion r80(surface, {RuleKind::LevelSetAlphaM, 0.2});
    const auto a = export_region_grid(r95, lattice);
    const auto b = export_region_grid(r80, lattice);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].in_region) CHECK(a[i].depth >= r95.threshold());
      if (!a[i].in_region) CHECK(a[i].depth < r95.threshold());
      if (b[i].in_region) CHECK(a[i].in_region);
    }
    CHECK(region_components(a, lattice) == 1);
  }

  TEST_CASE("lattice ordering puts the first coordinate slowest") {
    const Support box{Vector<double>::Constant(2, 0), Vector<double>::Constant(2, 1)};
    const Lattice lattice = lattice_over(box, 3);
    CHECK(lattice.point(1)(0) == 0.0);
    CHECK(lattice.point(1)(1) == 0.5);
    CHECK(lattice.point(3)(0) == 0.5);
  }

  TEST_CASE("two islands are two components") {
    Matrix<double> x(400, 2);
    x << (normal_sample(200, 2, 8).array() * 0.3 - 2).matrix(),
        (normal_sample(200, 2, 9).array() * 0.3 + 2).matrix();
    const Support box{Vector<double>::Constant(2, -4), Vector<double>::Constant(2, 4)};
    const auto surface = std::make_shared<const DepthSurface>(DepthSurface::fit(x, box));
    const Lattice lattice = lattice_over(box, 61);
    const ConfidenceRegion region(surface, {RuleKind::LevelSetAlphaM, 0.3});
    CHECK(region_components(export_region_grid(region, lattice), lattice) == 2);
  }

  TEST_CASE("guards") {
    const Support box4{Vector<double>::Constant(4, -3), Vector<double>::Constant(4, 3)};
    const auto s4 = std::make_shared<const DepthSurface>(DepthSurface::fit(normal_sample(50, 4, 1), box4));
    CHECK_THROWS_AS(export_region_grid(ConfidenceRegion(s4, {}), lattice_over(box4, 3)),
                    ContractViolation);

    const auto s1 = std::make_shared<const DepthSurface>(
        DepthSurface::fit(normal_sample(50, 1, 2), interval(-3, 3)));
    Lattice outside = lattice_over(interval(-3, 3), 11);
    outside.upper(0) = 10;
    CHECK_THROWS_AS(export_region_grid(ConfidenceRegion(s1, {}), outside), ContractViolation);
  }
}
