#include "boxcd/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace boxcd {

BoxRegion<double> build_box(std::span<const SummaryVector> summaries) {
  require(summaries.size() >= 2, "build_box needs at least two summaries");
  const Eigen::Index d = summaries.front().size();
  Matrix<double> stacked(d, static_cast<Eigen::Index>(summaries.size()));
  for (std::size_t s = 0; s < summaries.size(); ++s) {
    require(summaries[s].size() == d, "build_box: ragged summaries");
    stacked.col(static_cast<Eigen::Index>(s)) = summaries[s];
  }
  return build_box(stacked);
}

ParamVector propose(const Support& support, Rng& rng) {
  ParamVector theta(support.dim());
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    theta(j) = support.lower(j) + (support.upper(j) - support.lower(j)) * rng.uniform();
  return theta;
}

double scalar_acceptance_oracle(double cdf_at_obs, int pseudo_samples) {
  require(cdf_at_obs >= 0.0 && cdf_at_obs <= 1.0, "CDF value must lie in [0, 1]");
  require(pseudo_samples >= 2 && pseudo_samples % 2 == 0, "S must be an even integer >= 2");
  return 1.0 - std::pow(cdf_at_obs, pseudo_samples) - std::pow(1.0 - cdf_at_obs, pseudo_samples);
}

void SamplerConfig::validate() const {
  require(proposals >= 1, "sampler: R must be at least 1");
  require(pseudo_samples >= 2 && pseudo_samples % 2 == 0,
          "sampler: S must be an even integer >= 2");
  require(workers >= 1, "sampler: workers must be at least 1");
  if (support) support->validate();
}

bool SupportDiagnostic::any_flag() const {
  return std::any_of(coordinates.begin(), coordinates.end(),
                     [](const auto& c) { return c.lower_flag || c.upper_flag; });
}

bool accept_at(const Model& model, const ParamVector& theta, const SummaryVector& t_obs,
               Eigen::Ref<Matrix<double>> buffer, Rng& rng) {
  model.simulate_summaries(theta, buffer, rng);
  return contains(build_box(buffer), t_obs);
}

namespace {

struct Block {
  std::vector<std::int64_t> trials;
  std::vector<ParamVector> thetas;
  std::vector<TrialRecord> records;
  std::exception_ptr error;
};

void run_block(const Model& model, const SummaryVector& t_obs, const SamplerConfig& config,
               const Support& support, std::int64_t begin, std::int64_t end, Block& block) {
  Matrix<double> buffer(model.summary_dim(), config.pseudo_samples);
  std::int64_t trial = begin;
  try {
    for (; trial < end; ++trial) {
      Rng rng = trial_stream(config.seed, trial);
      ParamVector theta = propose(support, rng);
      const bool accepted = accept_at(model, theta, t_obs, buffer, rng);
      if (config.store_summaries) block.records.push_back({trial, theta, buffer, accepted});
      if (accepted) {
        block.trials.push_back(trial);
        block.thetas.push_back(std::move(theta));
      }
    }
  } catch (const std::exception& e) {
    block.error = std::make_exception_ptr(TrialError(trial, e.what()));
  }
}

}  // namespace

SamplerOutput run_sampler(const Model& model, const SummaryVector& t_obs,
                          const SamplerConfig& config) {
  config.validate();
  require(t_obs.size() == model.summary_dim(),
          "sampler: observed summary has length " + std::to_string(t_obs.size()) +
              ", model expects " + std::to_string(model.summary_dim()));
  require(t_obs.allFinite(), "sampler: observed summary must be finite");
  const Support& support = config.support ? *config.support : model.support();
  require(support.dim() == model.param_dim(), "sampler: support dimension != parameter dimension");

  const auto workers = static_cast<std::int64_t>(
      std::min<std::int64_t>(config.workers, config.proposals));
  std::vector<Block> blocks(static_cast<std::size_t>(workers));
  auto bounds = [&](std::int64_t w) { return config.proposals * w / workers; };

  if (workers == 1) {
    run_block(model, t_obs, config, support, 0, config.proposals, blocks[0]);
  } else {
    std::vector<std::thread> threads;
    for (std::int64_t w = 0; w < workers; ++w)
      threads.emplace_back(run_block, std::cref(model), std::cref(t_obs), std::cref(config),
                           std::cref(support), bounds(w), bounds(w + 1),
                           std::ref(blocks[static_cast<std::size_t>(w)]));
    for (auto& t : threads) t.join();
  }
  for (const auto& b : blocks)
    if (b.error) std::rethrow_exception(b.error);

  SamplerOutput out;
  out.n_proposed = config.proposals;
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.thetas.size();
  out.accepted.resize(static_cast<Eigen::Index>(total), model.param_dim());
  out.trial_index.reserve(total);
  Eigen::Index row = 0;
  for (auto& b : blocks) {
    for (std::size_t i = 0; i < b.thetas.size(); ++i) {
      out.accepted.row(row++) = b.thetas[i].transpose();
      out.trial_index.push_back(b.trials[i]);
    }
    if (config.store_summaries)
      out.records.insert(out.records.end(), std::make_move_iterator(b.records.begin()),
                         std::make_move_iterator(b.records.end()));
  }
  out.boundary_diagnostic = support_diagnostic(out.accepted, support);
  return out;
}

SupportDiagnostic support_diagnostic(const Matrix<double>& accepted, const Support& support,
                                     double band, double threshold) {
  require(band > 0.0 && band < 0.5, "support diagnostic: band must lie in (0, 0.5)");
  require(accepted.rows() == 0 || accepted.cols() == support.dim(),
          "support diagnostic: dimension mismatch");
  SupportDiagnostic report;
  report.band = band;
  report.threshold = threshold;
  const auto m = static_cast<double>(accepted.rows());
  for (Eigen::Index j = 0; j < support.dim(); ++j) {
    CoordinateBoundaryReport c;
    if (accepted.rows() > 0) {
      const double edge = band * (support.upper(j) - support.lower(j));
      const auto col = accepted.col(j).array();
      c.lower_fraction = static_cast<double>((col <= support.lower(j) + edge).count()) / m;
      c.upper_fraction = static_cast<double>((col >= support.upper(j) - edge).count()) / m;
      c.lower_flag = c.lower_fraction > threshold;
      c.upper_flag = c.upper_fraction > threshold;
    }
    report.coordinates.push_back(c);
  }
  return report;
}

std::vector<bool> acceptance_bits(std::span<const TrialRecord> records,
                                  const SummaryVector& t_obs,
                                  std::span<const Eigen::Index> coordinates) {
  std::vector<bool> bits;
  bits.reserve(records.size());
  for (const auto& r : records) {
    require(r.summaries.rows() == t_obs.size(), "acceptance_bits: dimension mismatch");
    if (coordinates.empty()) {
      bits.push_back(contains(build_box(r.summaries), t_obs));
      continue;
    }
    Matrix<double> sub(static_cast<Eigen::Index>(coordinates.size()), r.summaries.cols());
    SummaryVector t_sub(sub.rows());
    for (Eigen::Index k = 0; k < sub.rows(); ++k) {
      const Eigen::Index j = coordinates[static_cast<std::size_t>(k)];
      require(j >= 0 && j < t_obs.size(), "acceptance_bits: coordinate out of range");
      sub.row(k) = r.summaries.row(j);
      t_sub(k) = t_obs(j);
    }
    bits.push_back(contains(build_box(sub), t_sub));
  }
  return bits;
}

}  // namespace boxcd
