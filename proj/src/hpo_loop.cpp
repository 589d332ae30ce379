#include "dpl/hpo_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpl/rng.hpp"

namespace dpl {

int RunSettings::resolved_budget(const BenchmarkTable& table) const {
  const int budget = total_step_budget > 0 ? total_step_budget : 20 * table.b_max();
  if (b_step < 1) throw std::invalid_argument("b_step must be >= 1");
  if (budget < std::min(b_step, table.b_max())) {
    throw std::invalid_argument("total step budget is below the initial design cost");
  }
  return budget;
}

double incumbent_regret(const History& history, const BenchmarkTable& table) {
  return best_observed(history).value - oracle(table);
}

// ---------------------------------------------------------------------------

EvaluationSession::EvaluationSession(const BenchmarkTable& table, int total_step_budget,
                                     bool measure_time)
    : table_(&table),
      total_(total_step_budget),
      measure_time_(measure_time),
      oracle_(oracle(table)),
      span_(worst_best_loss(table) - oracle_),
      start_(std::chrono::steady_clock::now()) {
  if (total_step_budget < 1) throw std::invalid_argument("total step budget must be >= 1");
}

int EvaluationSession::trained_budget(ConfigId id) const {
  return history_.max_budget(id).value_or(0);
}

double EvaluationSession::current_loss(ConfigId id) const {
  const int b = trained_budget(id);
  if (b == 0) throw std::out_of_range("config " + std::to_string(id) + " has not been evaluated");
  return table_->config(id).curve.at_step(static_cast<std::size_t>(b));
}

int EvaluationSession::advance(ConfigId id, int target) {
  const int from = trained_budget(id);
  const int to = std::min({target, table_->b_max(), from + remaining()});
  if (to <= from) return from;
  for (int b = from + 1; b <= to; ++b) {
    const double loss = evaluate(*table_, id, b, b - 1).loss;
    history_.append({id, b, loss});
    incumbent_ = history_.size() == 1 ? loss : std::min(incumbent_, loss);
  }
  consumed_ += evaluate(*table_, id, to, from).step_cost;

  TrajectoryPoint point;
  point.steps = consumed_;
  if (measure_time_) {
    point.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  point.incumbent_loss = incumbent_;
  point.regret = incumbent_ - oracle_;
  point.normalized_regret = span_ > 0.0 ? std::max(point.regret / span_, 0.0)
                                        : std::numeric_limits<double>::quiet_NaN();
  points_.push_back(point);
  return to;
}

Trajectory EvaluationSession::finish(std::string method, std::uint64_t seed, std::string reason) {
  Trajectory t;
  t.method = std::move(method);
  t.dataset = table_->name();
  t.seed = seed;
  t.points = std::move(points_);
  t.history = std::move(history_);
  t.terminated_early = !reason.empty();
  t.termination_reason = std::move(reason);
  points_.clear();
  history_ = History{};
  return t;
}

// ---------------------------------------------------------------------------

DplSurrogate::DplSurrogate(int input_dim, const EnsembleConfig& config,
                           const TrainerSchedule& schedule, std::uint64_t seed)
    : ensemble_(input_dim, config), schedule_(schedule), seed_(seed) {}

void DplSurrogate::update(const TrainingSet& data, std::size_t newest, int iteration) {
  const auto it = static_cast<std::uint64_t>(iteration);
  if (iteration < schedule_.initial_phase_iterations) {
    fit_initial(ensemble_, data, schedule_, derive_seed(seed_, it));
    return;
  }
  const double loss = refine(ensemble_, data, newest, schedule_);
  if (should_restart(schedule_, loss)) {
    ++restarts_;
    fit_initial(ensemble_, data, schedule_, derive_seed(derive_seed(seed_, it), 0x7265));
    schedule_.reset_stagnation();
  }
}

std::vector<Posterior> DplSurrogate::predict_final(std::span<const Candidate> candidates) {
  const auto dim = static_cast<Eigen::Index>(ensemble_.input_dim());
  Matrix configs(dim, static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    configs.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Vector>(candidates[i].scaled_vector.data(), dim);
  }
  return posterior_batch(ensemble_, configs, 1.0);
}

TrainingSet training_set(const History& history, const BenchmarkTable& table) {
  TrainingSet data;
  const auto n = static_cast<Eigen::Index>(history.size());
  const auto dim = static_cast<Eigen::Index>(table.dim());
  data.configs.resize(dim, n);
  data.budgets.reserve(history.size());
  data.targets.reserve(history.size());
  const double b_max = table.b_max();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& obs = history.observations()[static_cast<std::size_t>(i)];
    const auto& scaled = table.config(obs.config_id).scaled_values;
    data.configs.col(i) = Eigen::Map<const Vector>(scaled.data(), dim);
    data.budgets.push_back(obs.budget / b_max);
    data.targets.push_back(obs.loss);
  }
  return data;
}

Trajectory run_model_based(const BenchmarkTable& table, const RunSettings& settings,
                           Surrogate& surrogate, const std::string& method) {
  EvaluationSession session(table, settings.resolved_budget(table), settings.measure_time);
  Rng rng(derive_seed(settings.seed, 0));

  std::vector<Candidate> pool;
  pool.reserve(table.size());
  for (const auto& c : table.configs()) pool.push_back({c.id, c.scaled_values});

  auto drop_if_full = [&](ConfigId id) {
    if (session.trained_budget(id) < table.b_max()) return;
    std::erase_if(pool, [id](const Candidate& c) { return c.config_id == id; });
  };

  const ConfigId first = pool[uniform_index(rng, pool.size())].config_id;
  session.advance(first, next_budget(first, session.history(), settings.b_step, table.b_max()));
  drop_if_full(first);

  for (int iteration = 0; !session.exhausted() && !pool.empty(); ++iteration) {
    const TrainingSet data = training_set(session.history(), table);
    surrogate.update(data, data.size() - 1, iteration);
    const auto posteriors = surrogate.predict_final(pool);
    const double f_best = best_observed(session.history()).value;
    const ConfigId id = pool[select_by_expected_improvement(pool, posteriors, f_best)].config_id;
    session.advance(id, next_budget(id, session.history(), settings.b_step, table.b_max()));
    drop_if_full(id);
  }
  return session.finish(method, settings.seed,
                        session.exhausted() ? "" : "every configuration is at b_max");
}

Trajectory run_dpl(const BenchmarkTable& table, const RunSettings& settings) {
  const TrainerSchedule schedule =
      settings.schedule.value_or(TrainerSchedule::for_curve_length(table.b_max()));
  DplSurrogate surrogate(static_cast<int>(table.dim()), settings.ensemble, schedule,
                         derive_seed(settings.seed, 1));
  return run_model_based(table, settings, surrogate, "dpl");
}

}  // namespace dpl
