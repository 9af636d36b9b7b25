#include "boxcd/optimize.hpp"

#include "boxcd/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace boxcd {

SimplexResult nelder_mead(const Objective& objective, const ParamVector& start,
                          const Vector<double>& initial_step, double tolerance,
                          int max_iterations) {
  const Eigen::Index p = start.size();
  require(p >= 1 && initial_step.size() == p, "nelder_mead: dimension mismatch");

  std::vector<ParamVector> vertex(static_cast<std::size_t>(p + 1), start);
  std::vector<double> value(static_cast<std::size_t>(p + 1));
  for (Eigen::Index j = 0; j < p; ++j) vertex[static_cast<std::size_t>(j + 1)](j) += initial_step(j);
  for (std::size_t i = 0; i < vertex.size(); ++i) value[i] = objective(vertex[i]);

  std::vector<std::size_t> order(vertex.size());
  SimplexResult result;
  for (result.iterations = 0; result.iterations < max_iterations; ++result.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];
    if (std::isfinite(value[worst]) && value[worst] - value[best] <= tolerance) {
      result.converged = true;
      break;
    }

    ParamVector centroid = ParamVector::Zero(p);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += vertex[order[i]];
    centroid /= static_cast<double>(p);

    const ParamVector reflected = centroid + (centroid - vertex[worst]);
    const double f_reflected = objective(reflected);
    if (f_reflected < value[best]) {
      const ParamVector expanded = centroid + 2.0 * (centroid - vertex[worst]);
      const double f_expanded = objective(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        value[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        value[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < value[second]) {
      vertex[worst] = reflected;
      value[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < value[worst];
    const ParamVector contracted = outside ? centroid + 0.5 * (reflected - centroid)
                                           : centroid + 0.5 * (vertex[worst] - centroid);
    const double f_contracted = objective(contracted);
    if (f_contracted < std::min(f_reflected, value[worst])) {
      vertex[worst] = contracted;
      value[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i < vertex.size(); ++i) {
      if (i == best) continue;
      vertex[i] = vertex[best] + 0.5 * (vertex[i] - vertex[best]);
      value[i] = objective(vertex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(value.begin(), value.end()) - value.begin());
  result.argmin = vertex[best];
  result.value = value[best];
  return result;
}

SimplexResult maximize_in_support(const Objective& log_likelihood, const Support& support,
                                  Rng& rng, int restarts, double tolerance) {
  support.validate();
  const auto negated = [&](const ParamVector& theta) {
    if (!support.contains(theta)) return std::numeric_limits<double>::infinity();
    const double ll = log_likelihood(theta);
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
  };

  SimplexResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    const ParamVector start = propose(support, rng);
    Vector<double> step = 0.1 * support.width();
    // step toward the interior so the initial simplex stays feasible
    for (Eigen::Index j = 0; j < step.size(); ++j)
      if (start(j) + step(j) > support.upper(j)) step(j) = -step(j);
    SimplexResult run = nelder_mead(negated, start, step, tolerance);
    if (run.converged && (!best.converged || run.value < best.value)) best = run;
  }
  if (best.converged) best.value = -best.value;
  return best;
}

}  // namespace boxcd
