#include "boxcd/regions.hpp"

#include <algorithm>
#include <cmath>

namespace boxcd {

std::string_view to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::LevelSetAlphaM:
      return "level-set-alpham";
    case RuleKind::ScalarExactEquitail:
      return "scalar-exact-equitail";
  }
  return "unknown";
}

RuleKind parse_rule_kind(std::string_view text) {
  if (text == "alpha-m" || text == "alpham" || text == "level-set-alpham")
    return RuleKind::LevelSetAlphaM;
  if (text == "equitail" || text == "scalar-exact-equitail") return RuleKind::ScalarExactEquitail;
  throw ContractViolation("unknown region rule '" + std::string(text) + "'");
}

RuleKind default_rule_kind(Eigen::Index param_dim) {
  return param_dim == 1 ? RuleKind::ScalarExactEquitail : RuleKind::LevelSetAlphaM;
}

void RegionRule::validate() const {
  require(alpha > 0.0 && alpha < 1.0, "region rule: alpha must lie strictly inside (0, 1)");
}

std::string_view to_string(QueryMode mode) { return mode == QueryMode::Kde ? "kde" : "knn"; }

QueryMode parse_query_mode(std::string_view text) {
  if (text == "kde") return QueryMode::Kde;
  if (text == "knn") return QueryMode::Knn;
  throw ContractViolation("unknown membership mode '" + std::string(text) + "'");
}

double region_threshold(double max_depth, const RegionRule& rule) {
  rule.validate();
  require(max_depth > 0.0, "region threshold: maximum depth must be positive");
  switch (rule.kind) {
    case RuleKind::LevelSetAlphaM:
      return rule.alpha * max_depth;
    case RuleKind::ScalarExactEquitail: {
      const double keep = 1.0 - rule.alpha;
      return (1.0 - keep * keep) * max_depth;
    }
  }
  return 0.0;
}

ConfidenceRegion::ConfidenceRegion(std::shared_ptr<const DepthSurface> surface, RegionRule rule)
    : surface_(std::move(surface)), rule_(rule) {
  require(surface_ != nullptr, "confidence region needs a fitted surface");
  threshold_ = region_threshold(surface_->max_depth(), rule_);
}

bool ConfidenceRegion::member(const ParamVector& theta, QueryMode mode) const {
  const double depth = mode == QueryMode::Kde ? surface_->eval(theta) : surface_->knn(theta);
  return depth >= threshold_;
}

std::vector<Eigen::Index> ConfidenceRegion::accepted_members() const {
  std::vector<Eigen::Index> rows;
  const auto& cached = surface_->cached_depths();
  for (Eigen::Index i = 0; i < cached.size(); ++i)
    if (cached(i) >= threshold_) rows.push_back(i);
  return rows;
}

Vector<double> linspace(double lower, double upper, Eigen::Index count) {
  require(count >= 2, "linspace needs at least two points");
  Vector<double> grid(count);
  for (Eigen::Index i = 0; i < count; ++i)
    grid(i) = lower + (upper - lower) * static_cast<double>(i) / static_cast<double>(count - 1);
  return grid;
}

ScalarInterval scalar_interval(const DepthSurface& surface, double alpha) {
  return scalar_interval(surface, RegionRule{RuleKind::ScalarExactEquitail, alpha});
}

ScalarInterval scalar_interval(const DepthSurface& surface, const RegionRule& rule) {
  require(surface.dim() == 1, "scalar_interval needs a one-dimensional parameter");
  const double c = region_threshold(surface.max_depth(), rule);
  const Vector<double> grid =
      linspace(surface.support().lower(0), surface.support().upper(0), kScalarGridPoints);

  const double theta_hat = surface.theta_hat()(0);
  ScalarInterval out{theta_hat, theta_hat, false};
  Eigen::Index first = -1;
  Eigen::Index last = -1;
  Eigen::Index runs = 0;
  bool inside_prev = false;
  ParamVector point(1);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    point(0) = grid(i);
    const bool inside = surface.eval(point) >= c;
    if (inside) {
      if (first < 0) first = i;
      last = i;
      if (!inside_prev) ++runs;
    }
    inside_prev = inside;
  }
  if (first >= 0) {
    out.lower = std::min(out.lower, grid(first));
    out.upper = std::max(out.upper, grid(last));
  }
  out.multimodal = runs > 1;
  return out;
}

Eigen::Index Lattice::size() const {
  Eigen::Index total = 1;
  for (auto c : counts) total *= c;
  return total;
}

ParamVector Lattice::point(Eigen::Index flat_index) const {
  ParamVector theta(dim());
  // first coordinate varies slowest
  for (Eigen::Index j = dim(); j-- > 0;) {
    const Eigen::Index c = counts[static_cast<std::size_t>(j)];
    const Eigen::Index k = flat_index % c;
    flat_index /= c;
    theta(j) = c == 1 ? lower(j)
                      : lower(j) + (upper(j) - lower(j)) * static_cast<double>(k) /
                                       static_cast<double>(c - 1);
  }
  return theta;
}

void Lattice::validate() const {
  require(lower.size() == upper.size() && static_cast<std::size_t>(lower.size()) == counts.size(),
          "lattice: inconsistent dimensions");
  require(lower.size() >= 1, "lattice: empty");
  for (Eigen::Index j = 0; j < dim(); ++j) {
    require(counts[static_cast<std::size_t>(j)] >= 1, "lattice: counts must be positive");
    require(lower(j) <= upper(j), "lattice: lower must not exceed upper");
  }
}

Lattice lattice_over(const Support& support, Eigen::Index points_per_axis) {
  return Lattice{support.lower, support.upper,
                 std::vector<Eigen::Index>(static_cast<std::size_t>(support.dim()),
                                           points_per_axis)};
}

std::vector<RegionGridRow> export_region_grid(const ConfidenceRegion& region,
                                              const Lattice& lattice) {
  lattice.validate();
  const DepthSurface& surface = region.surface();
  require(surface.dim() <= 3,
          "lattice export supports at most 3 parameters; use the accepted-draw member subset "
          "for higher dimensions");
  require(lattice.dim() == surface.dim(), "lattice dimension does not match the surface");
  const Support& support = surface.support();
  for (Eigen::Index j = 0; j < lattice.dim(); ++j) {
    const double slack = 1e-9 * (support.upper(j) - support.lower(j));
    if (lattice.lower(j) < support.lower(j) - slack || lattice.upper(j) > support.upper(j) + slack)
      throw ContractViolation("lattice coordinate " + std::to_string(j) +
                              " extends outside the proposal support [" +
                              std::to_string(support.lower(j)) + ", " +
                              std::to_string(support.upper(j)) + "]");
  }

  std::vector<RegionGridRow> rows;
  rows.reserve(static_cast<std::size_t>(lattice.size()));
  for (Eigen::Index k = 0; k < lattice.size(); ++k) {
    RegionGridRow row;
    row.theta = lattice.point(k);
    row.depth = surface.eval(row.theta);
    row.in_region = row.depth >= region.threshold();
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::Index region_components(const std::vector<RegionGridRow>& rows, const Lattice& lattice) {
  require(static_cast<Eigen::Index>(rows.size()) == lattice.size(),
          "region_components: rows do not match the lattice");
  const Eigen::Index p = lattice.dim();
  // strides for first-coordinate-slowest flat indices
  std::vector<Eigen::Index> stride(static_cast<std::size_t>(p), 1);
  for (Eigen::Index j = p - 2; j >= 0; --j)
    stride[static_cast<std::size_t>(j)] =
        stride[static_cast<std::size_t>(j + 1)] * lattice.counts[static_cast<std::size_t>(j + 1)];

  std::vector<char> seen(rows.size(), 0);
  std::vector<Eigen::Index> stack;
  Eigen::Index components = 0;
  for (Eigen::Index start = 0; start < lattice.size(); ++start) {
    if (!rows[static_cast<std::size_t>(start)].in_region || seen[static_cast<std::size_t>(start)])
      continue;
    ++components;
    seen[static_cast<std::size_t>(start)] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const Eigen::Index k = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < p; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const Eigen::Index coord = (k / stride[js]) % lattice.counts[js];
        for (int step : {-1, 1}) {
          const Eigen::Index c = coord + step;
          if (c < 0 || c >= lattice.counts[js]) continue;
          const Eigen::Index next = k + step * stride[js];
          const auto ns = static_cast<std::size_t>(next);
          if (rows[ns].in_region && !seen[ns]) {
            seen[ns] = 1;
            stack.push_back(next);
          }
        }
      }
    }
  }
  return components;
}

}  // namespace boxcd
