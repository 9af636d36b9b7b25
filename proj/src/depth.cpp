#include "boxcd/depth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace boxcd {

namespace {

// exp(-x) underflows to zero beyond this
constexpr double kExpCutoff = 745.0;

double log_kernel_norm(Eigen::Index p, double h) {
  return -static_cast<double>(p) * (0.5 * std::log(2.0 * std::numbers::pi) + std::log(h));
}

Matrix<double> strided_rows(const Matrix<double>& x, Eigen::Index target) {
  if (x.rows() <= target) return x;
  Matrix<double> out(target, x.cols());
  for (Eigen::Index i = 0; i < target; ++i) out.row(i) = x.row(i * x.rows() / target);
  return out;
}

}  // namespace

std::size_t BandwidthSelection::chosen_index() const {
  return static_cast<std::size_t>(std::find(grid.begin(), grid.end(), chosen) - grid.begin());
}

double normal_reference_bandwidth(Eigen::Index m, Eigen::Index p) {
  const auto pd = static_cast<double>(p);
  return std::pow(4.0 / ((pd + 2.0) * static_cast<double>(m)), 1.0 / (pd + 4.0));
}

Vector<double> standardization_scales(const Matrix<double>& sample) {
  Vector<double> scales(sample.cols());
  const auto m = static_cast<double>(sample.rows());
  for (Eigen::Index j = 0; j < sample.cols(); ++j) {
    const double mean = sample.col(j).mean();
    const double var = m > 1 ? (sample.col(j).array() - mean).square().sum() / (m - 1) : 0.0;
    const double sd = std::sqrt(var);
    scales(j) = (std::isfinite(sd) && sd > 0) ? sd : 1.0;
  }
  return scales;
}

BandwidthSelection select_bandwidth(const Matrix<double>& sample) {
  require(sample.rows() >= kMinBandwidthSample,
          "bandwidth selection needs at least " + std::to_string(kMinBandwidthSample) +
              " accepted draws, got " + std::to_string(sample.rows()) +
              "; increase the number of proposals R");
  require(sample.allFinite(), "bandwidth selection: sample must be finite");

  const Eigen::Index p = sample.cols();
  const Matrix<double> centered = sample.rowwise() - sample.row(0);
  const Vector<double> scales = standardization_scales(centered);
  const Matrix<double> z =
      strided_rows(centered, kMaxCrossValidationSample) * scales.cwiseInverse().asDiagonal();
  const Eigen::Index m = z.rows();

  BandwidthSelection sel;
  sel.reference = normal_reference_bandwidth(m, p);
  for (int g = 0; g < kBandwidthGridSize; ++g) {
    const double mult = std::pow(10.0, -1.0 + 2.0 * g / (kBandwidthGridSize - 1));
    sel.grid.push_back(sel.reference * mult);
  }

  // loo(g, i) = sum over z_k != z_i of exp(-|z_i - z_k|^2 / (2 h_g^2))
  const std::size_t grid_size = sel.grid.size();
  Matrix<double> loo = Matrix<double>::Zero(static_cast<Eigen::Index>(grid_size), m);
  std::vector<double> inv2h2(grid_size);
  for (std::size_t g = 0; g < grid_size; ++g) inv2h2[g] = 0.5 / (sel.grid[g] * sel.grid[g]);

  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = i + 1; k < m; ++k) {
      const double d2 = (z.row(i) - z.row(k)).squaredNorm();
      // exact duplicates are left out together with the held-out point
      if (d2 == 0.0) continue;
      // widest bandwidth first; once a kernel underflows, narrower ones do too
      for (std::size_t g = grid_size; g-- > 0;) {
        const double x = d2 * inv2h2[g];
        if (x > kExpCutoff) break;
        const double kv = std::exp(-x);
        loo(static_cast<Eigen::Index>(g), i) += kv;
        loo(static_cast<Eigen::Index>(g), k) += kv;
      }
    }
  }

  const double log_m1 = std::log(static_cast<double>(m - 1));
  double best = -std::numeric_limits<double>::infinity();
  sel.chosen = sel.grid.back();
  for (std::size_t g = 0; g < grid_size; ++g) {
    double score = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = loo(static_cast<Eigen::Index>(g), i);
      score += v > 0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    }
    score += static_cast<double>(m) * (log_kernel_norm(p, sel.grid[g]) - log_m1);
    sel.scores.push_back(score);
    if (score > best) {
      best = score;
      sel.chosen = sel.grid[g];
    }
  }

  if (sample.rows() > m) {
    // rescale from the cross-validated subsample size to the full sample size
    const double rate = std::pow(static_cast<double>(m) / static_cast<double>(sample.rows()),
                                 1.0 / (static_cast<double>(p) + 4.0));
    for (auto& h : sel.grid) h *= rate;
    sel.reference *= rate;
    sel.chosen *= rate;
  }
  return sel;
}

DepthSurface DepthSurface::fit(Matrix<double> sample, std::optional<Support> support) {
  BandwidthSelection sel = select_bandwidth(sample);
  DepthSurface s = fit_with_bandwidth(std::move(sample), sel.chosen, std::move(support));
  s.selection_ = std::move(sel);
  return s;
}

DepthSurface DepthSurface::fit_with_bandwidth(Matrix<double> sample, double bandwidth,
                                              std::optional<Support> support) {
  require(sample.rows() >= 1 && sample.cols() >= 1, "depth surface needs a non-empty sample");
  require(sample.allFinite(), "depth surface: sample must be finite");
  require(bandwidth > 0 && std::isfinite(bandwidth), "depth surface: bandwidth must be positive");

  DepthSurface s;
  s.sample_ = std::move(sample);
  // centring on the first draw keeps differences exact under joint shifts
  s.origin_ = s.sample_.row(0).transpose();
  const Matrix<double> centered = s.sample_.rowwise() - s.origin_.transpose();
  s.scales_ = standardization_scales(centered);
  s.standardized_ = centered * s.scales_.cwiseInverse().asDiagonal();
  s.bandwidth_ = bandwidth;
  const Eigen::Index p = s.dim();
  s.norm_ = std::exp(log_kernel_norm(p, bandwidth) - std::log(static_cast<double>(s.size())) -
                     s.scales_.array().log().sum());
  if (support) {
    require(support->dim() == p, "depth surface: support dimension mismatch");
    support->validate();
    s.support_ = std::move(*support);
  } else {
    s.support_ = Support{s.sample_.colwise().minCoeff().transpose(),
                         s.sample_.colwise().maxCoeff().transpose()};
    // a degenerate coordinate still needs lower < upper
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!(s.support_.lower(j) < s.support_.upper(j))) {
        s.support_.lower(j) -= s.scales_(j);
        s.support_.upper(j) += s.scales_(j);
      }
    }
  }
  s.finish_fit();
  return s;
}

void DepthSurface::finish_fit() {
  const Eigen::Index m = size();
  const double inv2h2 = 0.5 / (bandwidth_ * bandwidth_);
  Vector<double> sums = Vector<double>::Ones(m);  // self term exp(0)
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = i + 1; k < m; ++k) {
      const double x = (standardized_.row(i) - standardized_.row(k)).squaredNorm() * inv2h2;
      if (x > kExpCutoff) continue;
      const double kv = std::exp(-x);
      sums(i) += kv;
      sums(k) += kv;
    }
  }
  cached_ = sums * norm_;

  Eigen::Index best = 0;
  cached_.maxCoeff(&best);
  ParamVector start = sample_.row(best).transpose();
  for (Eigen::Index j = 0; j < dim(); ++j)
    start(j) = std::clamp(start(j), support_.lower(j), support_.upper(j));
  theta_hat_ = coordinate_search(*this, start, coordinate_bandwidths(), support_);
  max_depth_ = std::max(eval(theta_hat_), cached_(best));
  if (cached_(best) > eval(theta_hat_)) theta_hat_ = sample_.row(best).transpose();
}

double DepthSurface::eval(const ParamVector& theta) const {
  require(theta.size() == dim(), "eval_depth: parameter dimension mismatch");
  const Vector<double> z = (theta - origin_).cwiseQuotient(scales_);
  const double inv2h2 = 0.5 / (bandwidth_ * bandwidth_);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i)
    sum += std::exp(-(standardized_.row(i).transpose() - z).squaredNorm() * inv2h2);
  return sum * norm_;
}

Eigen::Index DepthSurface::nearest(const ParamVector& theta) const {
  require(theta.size() == dim(), "knn_depth: parameter dimension mismatch");
  const Vector<double> z = (theta - origin_).cwiseQuotient(scales_);
  Eigen::Index best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < size(); ++i) {
    const double d2 = (standardized_.row(i).transpose() - z).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

double DepthSurface::knn(const ParamVector& theta) const { return cached_(nearest(theta)); }

ParamVector coordinate_search(const DepthSurface& surface, ParamVector start,
                              const Vector<double>& initial_steps, const Support& support,
                              int iterations) {
  Vector<double> step = initial_steps;
  ParamVector best = std::move(start);
  double best_value = surface.eval(best);
  for (int it = 0; it < iterations; ++it) {
    bool improved = false;
    for (Eigen::Index j = 0; j < best.size(); ++j) {
      for (double dir : {1.0, -1.0}) {
        ParamVector trial = best;
        trial(j) = std::clamp(trial(j) + dir * step(j), support.lower(j), support.upper(j));
        const double v = surface.eval(trial);
        if (v > best_value) {
          best_value = v;
          best = std::move(trial);
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace boxcd
