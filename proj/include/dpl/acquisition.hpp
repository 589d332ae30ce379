#pragma once

#include <span>
#include <vector>

#include "dpl/dpl_surrogate.hpp"
#include "dpl/history.hpp"

namespace dpl {

struct Candidate {
  ConfigId config_id = 0;
  std::vector<double> scaled_vector;
};

struct Incumbent {
  ConfigId config_id = 0;
  double value = 0.0;
};

/// Expected improvement below f_best for a Gaussian N(mean, std^2):
///   (f_best - mean) * Phi(z) + std * phi(z),  z = (f_best - mean) / std
/// and max(f_best - mean, 0) when std == 0. Never negative.
double expected_improvement(double mean, double std, double f_best);

/// Lowest loss in the history at any budget; the earliest record wins ties.
/// Throws std::invalid_argument on an empty history.
Incumbent best_observed(const History& history);

/// Index of the candidate with the largest EI given its final-budget
/// posterior; ties go to the lowest config_id.
std::size_t select_by_expected_improvement(std::span<const Candidate> candidates,
                                           std::span<const Posterior> final_posteriors,
                                           double f_best);

/// Exhaustive EI scan of the pool using the ensemble posterior at b_norm = 1.
const Candidate& select_next(std::span<const Candidate> candidates, const DplEnsemble& ensemble,
                             const History& history);

/// b_step for an unseen config, otherwise its largest observed budget plus
/// b_step, capped at b_max. Throws FullyEvaluatedError when the config is
/// already at b_max.
int next_budget(ConfigId selected, const History& history, int b_step, int b_max);

}  // namespace dpl
