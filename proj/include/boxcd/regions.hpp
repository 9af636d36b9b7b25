#pragma once

#include "boxcd/depth.hpp"
#include "boxcd/types.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace boxcd {

enum class RuleKind {
  /// {theta : depth >= alpha M}
  LevelSetAlphaM,
  /// {theta : depth >= (1 - (1 - alpha)^2) M}; the equi-tailed set
  /// alpha/2 <= F <= 1 - alpha/2 when depth is proportional to F(1 - F).
  ScalarExactEquitail,
};

std::string_view to_string(RuleKind kind);
/// Accepts "alpha-m" / "level-set-alpham" and "equitail" / "scalar-exact-equitail".
RuleKind parse_rule_kind(std::string_view text);
/// Equi-tailed rule for a scalar parameter, alpha M otherwise.
RuleKind default_rule_kind(Eigen::Index param_dim);

struct RegionRule {
  RuleKind kind = RuleKind::LevelSetAlphaM;
  double alpha = 0.05;

  void validate() const;
};

enum class QueryMode { Kde, Knn };

std::string_view to_string(QueryMode mode);
QueryMode parse_query_mode(std::string_view text);

/// Depth threshold c of the region at rule.alpha for a surface with maximum M.
double region_threshold(double max_depth, const RegionRule& rule);

/// {theta : depth(theta) >= threshold} over a fitted surface.
class ConfidenceRegion {
 public:
  ConfidenceRegion(std::shared_ptr<const DepthSurface> surface, RegionRule rule);

  const DepthSurface& surface() const { return *surface_; }
  const RegionRule& rule() const { return rule_; }
  double threshold() const { return threshold_; }

  bool member(const ParamVector& theta, QueryMode mode) const;
  /// Rows of the accepted sample whose cached depth reaches the threshold.
  std::vector<Eigen::Index> accepted_members() const;

 private:
  std::shared_ptr<const DepthSurface> surface_;
  RegionRule rule_;
  double threshold_;
};

inline bool member(const ConfidenceRegion& region, const ParamVector& theta, QueryMode mode) {
  return region.member(theta, mode);
}

inline constexpr Eigen::Index kScalarGridPoints = 512;

/// Evenly spaced points on [lower, upper], endpoints included.
Vector<double> linspace(double lower, double upper, Eigen::Index count);

struct ScalarInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool multimodal = false;  // in-region grid points are not contiguous

  double length() const { return upper - lower; }
};

/// Interval from the equi-tailed threshold on a 512-point grid over the
/// surface's support. Spans the hull of all in-region grid points and theta-hat.
ScalarInterval scalar_interval(const DepthSurface& surface, double alpha);
/// Same, with an explicit threshold rule.
ScalarInterval scalar_interval(const DepthSurface& surface, const RegionRule& rule);

/// Per-coordinate regular lattice.
struct Lattice {
  Vector<double> lower;
  Vector<double> upper;
  std::vector<Eigen::Index> counts;

  Eigen::Index dim() const { return lower.size(); }
  Eigen::Index size() const;
  ParamVector point(Eigen::Index flat_index) const;
  void validate() const;
};

/// Lattice with `points_per_axis` points spanning the support.
Lattice lattice_over(const Support& support, Eigen::Index points_per_axis);

struct RegionGridRow {
  ParamVector theta;
  double depth = 0.0;
  bool in_region = false;
};

/// KDE depth and membership at every lattice point. Throws for p > 3 and for
/// lattices extending outside the surface's support.
std::vector<RegionGridRow> export_region_grid(const ConfidenceRegion& region,
                                              const Lattice& lattice);

/// Connected components of the in-region lattice points (axis neighbours).
/// More than one component marks a multimodal region.
Eigen::Index region_components(const std::vector<RegionGridRow>& rows, const Lattice& lattice);

}  // namespace boxcd
