#pragma once

#include "boxcd/types.hpp"

#include <optional>
#include <vector>

namespace boxcd {

/// Leave-one-out likelihood cross-validation over a geometric grid of
/// multipliers of the normal-reference bandwidth. Bandwidths are expressed in
/// standardized units (each coordinate divided by its sample SD).
struct BandwidthSelection {
  double reference = 0.0;       // normal-reference bandwidth (standardized)
  std::vector<double> grid;     // candidate bandwidths
  std::vector<double> scores;   // LOO log-likelihood per candidate
  double chosen = 0.0;

  std::size_t chosen_index() const;
};

inline constexpr Eigen::Index kMinBandwidthSample = 10;
inline constexpr int kBandwidthGridSize = 20;
/// Larger samples are cross-validated on an evenly strided subsample and the
/// chosen bandwidth is rescaled by the m^{-1/(p+4)} rate.
inline constexpr Eigen::Index kMaxCrossValidationSample = 4000;

/// Normal-reference bandwidth for unit-variance data: (4 / ((p + 2) m))^{1/(p+4)}.
double normal_reference_bandwidth(Eigen::Index m, Eigen::Index p);

/// Rows of `sample` are draws. Throws ContractViolation below 10 rows.
BandwidthSelection select_bandwidth(const Matrix<double>& sample);

/// Per-coordinate sample SD (ddof 1); degenerate coordinates get scale 1.
Vector<double> standardization_scales(const Matrix<double>& sample);

/**
 * Depth surface estimated from accepted draws: a product-Gaussian KDE with one
 * shared bandwidth on standardized coordinates, the KDE cached at every draw
 * for 1-NN prediction, and the polished maximizer.
 *
 * Immutable after fit(); safe for concurrent queries.
 */
class DepthSurface {
 public:
  /// `support` confines the maximizer search; defaults to the sample's bounding box.
  static DepthSurface fit(Matrix<double> sample, std::optional<Support> support = {});
  /// Same as fit() with a fixed standardized bandwidth (skips cross-validation).
  static DepthSurface fit_with_bandwidth(Matrix<double> sample, double bandwidth,
                                         std::optional<Support> support = {});

  Eigen::Index dim() const { return sample_.cols(); }
  Eigen::Index size() const { return sample_.rows(); }

  const Matrix<double>& sample() const { return sample_; }
  const Vector<double>& scales() const { return scales_; }
  /// Shared bandwidth in standardized units.
  double bandwidth() const { return bandwidth_; }
  /// Effective per-coordinate bandwidths in parameter units.
  Vector<double> coordinate_bandwidths() const { return bandwidth_ * scales_; }
  const std::optional<BandwidthSelection>& selection() const { return selection_; }
  const Support& support() const { return support_; }

  const Vector<double>& cached_depths() const { return cached_; }
  const ParamVector& theta_hat() const { return theta_hat_; }
  double max_depth() const { return max_depth_; }

  /// Exact KDE value at theta (density in parameter units).
  double eval(const ParamVector& theta) const;
  /// Cached depth of the nearest draw in standardized Euclidean distance;
  /// ties go to the lowest row (earliest trial).
  double knn(const ParamVector& theta) const;
  Eigen::Index nearest(const ParamVector& theta) const;

 private:
  DepthSurface() = default;
  void finish_fit();

  Matrix<double> sample_;
  Matrix<double> standardized_;  // (sample - origin) / scales
  ParamVector origin_;
  Vector<double> scales_;
  double bandwidth_ = 0.0;
  double norm_ = 0.0;  // 1 / (m h^p (2 pi)^{p/2} prod(scales))
  std::optional<BandwidthSelection> selection_;
  Support support_;
  Vector<double> cached_;
  ParamVector theta_hat_;
  double max_depth_ = 0.0;
};

inline double eval_depth(const DepthSurface& surface, const ParamVector& theta) {
  return surface.eval(theta);
}

inline double knn_depth(const DepthSurface& surface, const ParamVector& theta) {
  return surface.knn(theta);
}

struct DepthMaximum {
  ParamVector theta_hat;
  double max_depth = 0.0;
};

inline DepthMaximum depth_max(const DepthSurface& surface) {
  return {surface.theta_hat(), surface.max_depth()};
}

/// Derivative-free coordinate search from `start`, confined to `support`.
/// Steps start at `initial_steps` and halve whenever no move improves.
ParamVector coordinate_search(const DepthSurface& surface, ParamVector start,
                              const Vector<double>& initial_steps, const Support& support,
                              int iterations = 200);

}  // namespace boxcd
