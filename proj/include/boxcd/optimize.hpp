#pragma once

#include "boxcd/random.hpp"
#include "boxcd/types.hpp"

#include <functional>

namespace boxcd {

struct SimplexResult {
  ParamVector argmin;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

using Objective = std::function<double(const ParamVector&)>;

/// Nelder-Mead minimization. Converged when the spread of objective values
/// across the simplex falls below `tolerance`.
SimplexResult nelder_mead(const Objective& objective, const ParamVector& start,
                          const Vector<double>& initial_step, double tolerance = 1e-8,
                          int max_iterations = 5000);

/// Maximizes a log-likelihood over `support` with Nelder-Mead from `restarts`
/// uniform starting points. Points outside the support score -inf. Returns the
/// best converged run; `converged` is false when no restart converged.
SimplexResult maximize_in_support(const Objective& log_likelihood, const Support& support,
                                  Rng& rng, int restarts = 5, double tolerance = 1e-8);

}  // namespace boxcd
