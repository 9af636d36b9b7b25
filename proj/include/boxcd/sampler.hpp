#pragma once

#include "boxcd/models.hpp"
#include "boxcd/random.hpp"
#include "boxcd/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxcd {

/// Axis-aligned box in summary space spanned by the coordinate-wise extremes
/// of S simulated summaries.
template <typename Scalar>
struct BoxRegion {
  Vector<Scalar> lower;
  Vector<Scalar> upper;

  Eigen::Index dim() const { return lower.size(); }
};

/// Box from the columns of a d x S matrix of summaries (S >= 2).
template <typename Derived>
BoxRegion<typename Derived::Scalar> build_box(const Eigen::MatrixBase<Derived>& summaries) {
  require(summaries.cols() >= 2, "build_box needs at least two summaries");
  require(summaries.rows() >= 1, "build_box needs non-empty summaries");
  return {summaries.rowwise().minCoeff(), summaries.rowwise().maxCoeff()};
}

/// Box from a list of summary vectors (all of equal length).
BoxRegion<double> build_box(std::span<const SummaryVector> summaries);

/// Half-open membership: lower_j <= t_j < upper_j for every coordinate.
/// A zero-width coordinate therefore never contains anything.
template <typename Scalar, typename Derived>
bool contains(const BoxRegion<Scalar>& box, const Eigen::MatrixBase<Derived>& t_obs) {
  require(t_obs.size() == box.dim(), "contains: summary dimension does not match box");
  for (Eigen::Index j = 0; j < box.dim(); ++j)
    if (!(box.lower(j) <= t_obs(j) && t_obs(j) < box.upper(j))) return false;
  return true;
}

/// Uniform draw on the hyper-rectangle `support`.
ParamVector propose(const Support& support, Rng& rng);

/// 1 - F^S - (1 - F)^S: acceptance probability of a scalar summary whose CDF at
/// t_obs is F (S = 2 gives 2F(1 - F)).
double scalar_acceptance_oracle(double cdf_at_obs, int pseudo_samples);

struct SamplerConfig {
  std::int64_t proposals = 10000;  // R
  int pseudo_samples = 2;          // S, even and >= 2
  std::uint64_t seed = 1;
  std::optional<Support> support;  // defaults to the model's support
  bool store_summaries = false;
  unsigned workers = 1;

  void validate() const;
};

/// One propose -> simulate -> box -> test step, retained when store_summaries is set.
struct TrialRecord {
  std::int64_t trial = 0;
  ParamVector theta;
  Matrix<double> summaries;  // d x S
  bool accepted = false;
};

struct CoordinateBoundaryReport {
  double lower_fraction = 0.0;  // share of accepted draws in the lower band
  double upper_fraction = 0.0;
  bool lower_flag = false;
  bool upper_flag = false;
};

struct SupportDiagnostic {
  double band = 0.01;
  double threshold = 0.05;
  std::vector<CoordinateBoundaryReport> coordinates;

  bool any_flag() const;
};

struct SamplerOutput {
  Matrix<double> accepted;                 // n_accepted x p, in trial order
  std::vector<std::int64_t> trial_index;   // trial of each accepted row
  std::int64_t n_proposed = 0;
  SupportDiagnostic boundary_diagnostic;
  std::vector<TrialRecord> records;        // every trial, only with store_summaries

  std::int64_t n_accepted() const { return accepted.rows(); }
  double acceptance_rate() const {
    return n_proposed > 0 ? static_cast<double>(n_accepted()) / static_cast<double>(n_proposed)
                          : 0.0;
  }
};

/// A model simulation failed inside a sampler trial.
class TrialError : public std::runtime_error {
 public:
  TrialError(std::int64_t trial, const std::string& what)
      : std::runtime_error("trial " + std::to_string(trial) + ": " + what), trial_(trial) {}
  std::int64_t trial() const { return trial_; }

 private:
  std::int64_t trial_;
};

/// Random stream of trial `trial` under master seed `seed`.
inline Rng trial_stream(std::uint64_t seed, std::int64_t trial) {
  return Rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
}

/// Simulates S pseudo-samples at theta into `buffer` (d x S) and tests t_obs
/// against their box.
bool accept_at(const Model& model, const ParamVector& theta, const SummaryVector& t_obs,
               Eigen::Ref<Matrix<double>> buffer, Rng& rng);

/// Accept-reject sampler. Trial j draws from trial_stream(seed, j) only, so the
/// output is bit-identical for any worker count.
SamplerOutput run_sampler(const Model& model, const SummaryVector& t_obs,
                          const SamplerConfig& config);

/// Share of accepted draws within the outer `band` fraction of each coordinate's
/// range; a side is flagged when that share exceeds `threshold`.
SupportDiagnostic support_diagnostic(const Matrix<double>& accepted, const Support& support,
                                     double band = 0.01, double threshold = 0.05);

/// Recomputes acceptance of stored trials against t_obs using only the listed
/// summary coordinates (all when empty).
std::vector<bool> acceptance_bits(std::span<const TrialRecord> records,
                                  const SummaryVector& t_obs,
                                  std::span<const Eigen::Index> coordinates = {});

}  // namespace boxcd
