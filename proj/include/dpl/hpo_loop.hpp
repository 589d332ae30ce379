#pragma once

// Multi-fidelity HPO on tabular benchmarks: shared step-budget accounting,
// trajectory recording and the DPL-driven loop.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpl/acquisition.hpp"
#include "dpl/benchmarks.hpp"
#include "dpl/dpl_surrogate.hpp"
#include "dpl/history.hpp"

namespace dpl {

struct RunSettings {
  int total_step_budget = 0;  // 0: 20 * b_max
  int b_step = 1;
  std::uint64_t seed = 0;
  bool measure_time = false;  // wall_time_s stays 0 when off, keeping output byte-stable
  EnsembleConfig ensemble;
  std::optional<TrainerSchedule> schedule;  // default: for_curve_length(b_max)

  int resolved_budget(const BenchmarkTable& table) const;
};

struct TrajectoryPoint {
  int steps = 0;
  double wall_time_s = 0.0;
  double incumbent_loss = 0.0;
  double regret = 0.0;
  double normalized_regret = 0.0;  // NaN when the table has zero span
};

struct Trajectory {
  std::string method;
  std::string dataset;
  std::uint64_t seed = 0;
  std::vector<TrajectoryPoint> points;
  bool terminated_early = false;
  std::string termination_reason;
  History history;

  int steps_consumed() const { return points.empty() ? 0 : points.back().steps; }
};

/// Best loss at any budget minus the table oracle. Throws
/// std::invalid_argument on an empty history.
double incumbent_regret(const History& history, const BenchmarkTable& table);

/// Step-budget counter shared by every method. Each advance() trains one
/// config from its last budget towards a target, observes every
/// intermediate step, and records one trajectory point.
class EvaluationSession {
 public:
  EvaluationSession(const BenchmarkTable& table, int total_step_budget, bool measure_time = false);

  const BenchmarkTable& table() const { return *table_; }
  int total_budget() const { return total_; }
  int consumed() const { return consumed_; }
  int remaining() const { return total_ - consumed_; }
  bool exhausted() const { return consumed_ >= total_; }

  /// Budget reached so far by `id` (0 if never evaluated).
  int trained_budget(ConfigId id) const;
  /// Loss at trained_budget(id). Throws std::out_of_range if unseen.
  double current_loss(ConfigId id) const;

  /// Advances `id` to min(target, trained + remaining). Returns the budget
  /// reached. No-op (returning the trained budget) when target is not above
  /// it or the budget is spent.
  int advance(ConfigId id, int target);

  const History& history() const { return history_; }
  const std::vector<TrajectoryPoint>& points() const { return points_; }

  /// Moves the recorded history and points into a Trajectory.
  Trajectory finish(std::string method, std::uint64_t seed, std::string reason = {});

 private:
  const BenchmarkTable* table_;
  int total_;
  int consumed_ = 0;
  bool measure_time_;
  double oracle_;
  double span_;
  double incumbent_ = 0.0;
  History history_;
  std::vector<TrajectoryPoint> points_;
  std::chrono::steady_clock::time_point start_;
};

/// Model interface for the loop; lets tests substitute an exact oracle.
class Surrogate {
 public:
  virtual ~Surrogate() = default;
  /// Called once per HPO iteration (0-based) with the whole history;
  /// `newest` indexes the most recent observation.
  virtual void update(const TrainingSet& data, std::size_t newest, int iteration) = 0;
  /// Posterior of each candidate's loss at b_max.
  virtual std::vector<Posterior> predict_final(std::span<const Candidate> candidates) = 0;
};

/// Deep Power Law ensemble with the initial-phase / refine / restart schedule.
class DplSurrogate final : public Surrogate {
 public:
  DplSurrogate(int input_dim, const EnsembleConfig& config, const TrainerSchedule& schedule,
               std::uint64_t seed);

  void update(const TrainingSet& data, std::size_t newest, int iteration) override;
  std::vector<Posterior> predict_final(std::span<const Candidate> candidates) override;

  const DplEnsemble& ensemble() const { return ensemble_; }
  const TrainerSchedule& schedule() const { return schedule_; }
  int restarts() const { return restarts_; }

 private:
  DplEnsemble ensemble_;
  TrainerSchedule schedule_;
  std::uint64_t seed_;
  int restarts_ = 0;
};

/// Training triples from a history: scaled config, budget / b_max, loss.
TrainingSet training_set(const History& history, const BenchmarkTable& table);

/// One random config for b_step steps, then: update the surrogate, pick the
/// EI-maximizing config from those not yet at b_max, advance it by b_step.
/// Stops when the budget is spent or every config is at b_max.
Trajectory run_model_based(const BenchmarkTable& table, const RunSettings& settings,
                           Surrogate& surrogate, const std::string& method);

Trajectory run_dpl(const BenchmarkTable& table, const RunSettings& settings);

}  // namespace dpl
