#pragma once

// Comparison methods on the same step-budget accounting as run_dpl:
// Random Search, Successive Halving, Hyperband and a single-worker ASHA.
// Training always resumes from the last budget a config reached, and ranking
// ties go to the lowest config id.

#include <vector>

#include "dpl/benchmarks.hpp"
#include "dpl/hpo_loop.hpp"

namespace dpl {

/// Budget ladder min, min*eta, min*eta^2, ... below max, then max itself.
std::vector<int> geometric_rungs(int min_budget, int max_budget, int eta);

struct ShSchedule {
  int eta = 3;
  int min_budget = 1;
  int max_budget = 0;  // 0: b_max
  int n_initial = 0;   // 0: eta^(rungs - 1)
  int brackets = 0;    // 0: repeat until the budget or the configs run out

  std::vector<int> rungs(int b_max) const;
};

/// Samples untried configs uniformly and trains each to b_max.
Trajectory run_random_search(const BenchmarkTable& table, const RunSettings& settings);

/// Repeated SH brackets of fresh configs: all start at rung 0 and the best
/// max(1, floor(n / eta)) by current loss move up each rung.
Trajectory run_successive_halving(const BenchmarkTable& table, const RunSettings& settings,
                                  const ShSchedule& schedule = {});

struct HyperbandBracket {
  int s = 0;
  int n = 0;                // configs entering the bracket
  std::vector<int> rungs;   // budgets, first is the starting budget
};

/// s_max = floor(log_eta b_max); bracket s (s_max down to 0) starts
/// ceil((s_max + 1) / (s + 1) * eta^s) configs at budget b_max * eta^-s.
std::vector<HyperbandBracket> hyperband_brackets(int b_max, int eta);

/// Cycles through the brackets until the budget or the configs run out.
Trajectory run_hyperband(const BenchmarkTable& table, const RunSettings& settings, int eta = 3);

/// Each tick promotes the best not-yet-promoted config from the highest rung
/// where it ranks in the top floor(completions / eta); otherwise a fresh
/// config is trained to rung 0.
Trajectory run_asha(const BenchmarkTable& table, const RunSettings& settings, int eta = 3);

}  // namespace dpl
