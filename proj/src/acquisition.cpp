#include "dpl/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dpl/errors.hpp"
#include "dpl/stats.hpp"

namespace dpl {

double expected_improvement(double mean, double std, double f_best) {
  if (std < 0.0) throw std::invalid_argument("expected_improvement: std must be >= 0");
  const double improvement = f_best - mean;
  if (std == 0.0) return std::max(improvement, 0.0);
  const double z = improvement / std;
  const double ei = improvement * normal_cdf(z) + std * normal_pdf(z);
  return std::max(ei, 0.0);
}

Incumbent best_observed(const History& history) {
  if (history.empty()) throw std::invalid_argument("best_observed: empty history");
  const Observation* best = &history.observations().front();
  for (const auto& obs : history.observations()) {
    if (obs.loss < best->loss) best = &obs;
  }
  return {best->config_id, best->loss};
}

std::size_t select_by_expected_improvement(std::span<const Candidate> candidates,
                                           std::span<const Posterior> final_posteriors,
                                           double f_best) {
  if (candidates.empty()) throw std::invalid_argument("select_next: empty candidate pool");
  if (candidates.size() != final_posteriors.size()) {
    throw ShapeError("select_next: one posterior per candidate expected");
  }
  std::size_t best = 0;
  double best_ei = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& post = final_posteriors[i];
    const double ei = expected_improvement(post.mean, std::sqrt(std::max(post.variance, 0.0)), f_best);
    if (ei > best_ei || (ei == best_ei && candidates[i].config_id < candidates[best].config_id)) {
      best = i;
      best_ei = ei;
    }
  }
  return best;
}

const Candidate& select_next(std::span<const Candidate> candidates, const DplEnsemble& ensemble,
                             const History& history) {
  if (candidates.empty()) throw std::invalid_argument("select_next: empty candidate pool");
  const Eigen::Index dim = static_cast<Eigen::Index>(candidates.front().scaled_vector.size());
  Matrix configs(dim, static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (static_cast<Eigen::Index>(candidates[i].scaled_vector.size()) != dim) {
      throw ShapeError("select_next: candidate dimensions differ");
    }
    configs.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Vector>(candidates[i].scaled_vector.data(), dim);
  }
  const auto posteriors = posterior_batch(ensemble, configs, 1.0);
  return candidates[select_by_expected_improvement(candidates, posteriors,
                                                   best_observed(history).value)];
}

int next_budget(ConfigId selected, const History& history, int b_step, int b_max) {
  if (b_step < 1) throw std::invalid_argument("next_budget: b_step must be >= 1");
  const auto seen = history.max_budget(selected);
  if (!seen) return std::min(b_step, b_max);
  if (*seen >= b_max) {
    throw FullyEvaluatedError("config " + std::to_string(selected) + " is already at b_max");
  }
  return std::min(*seen + b_step, b_max);
}

}  // namespace dpl
