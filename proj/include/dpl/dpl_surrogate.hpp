#pragma once

// Deep Power Law surrogate: an ensemble of networks g(config) -> (alpha, beta,
// gamma) whose prediction at normalized budget b in (0, 1] is
//
//   alpha + beta * b^-gamma
//
// The body emits five raw units; beta and gamma are gated pairs
// (beta = raw1 * sigmoid(raw2), gamma = raw3 * sigmoid(raw4)) and alpha = raw0
// is left unconstrained. The budget never enters the body network.

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dpl/curve_models.hpp"
#include "dpl/neural_core.hpp"
#include "dpl/rng.hpp"
#include "json.hpp"

namespace dpl {

inline constexpr int kRawHeadOutputs = 5;

/// Largest exponent -gamma*ln(b) the head will exponentiate; beyond it the
/// power term saturates (and its gamma-gradient is zero) instead of
/// overflowing.
inline constexpr double kMaxHeadLogFactor = 60.0;

PowerLawCoefficients head_coefficients(std::span<const double, kRawHeadOutputs> raw);
double head_predict(std::span<const double, kRawHeadOutputs> raw, double b_norm);
/// d(prediction)/d(raw) for the five raw units.
std::array<double, kRawHeadOutputs> head_gradient(std::span<const double, kRawHeadOutputs> raw,
                                                  double b_norm);

/// Training triples (config, b_norm, loss); configs are stored column-wise.
struct TrainingSet {
  Matrix configs;  // dim x n
  std::vector<double> budgets;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
  int dim() const { return static_cast<int>(configs.rows()); }
};

struct SurrogateArchitecture {
  std::vector<int> hidden{128, 128};
  double leaky_slope = kDefaultLeakySlope;
};

class DplNetwork {
 public:
  DplNetwork() = default;
  DplNetwork(int input_dim, const SurrogateArchitecture& arch = {});

  const DenseNetwork& body() const { return body_; }
  DenseNetwork& body() { return body_; }
  int input_dim() const { return body_.input_dim(); }

  PowerLawCoefficients coefficients(std::span<const double> config) const;

  /// Predictions for each column of `configs` at the matching budget.
  Vector predict(const Eigen::Ref<const Matrix>& configs, std::span<const double> b_norm) const;

  /// Mean absolute error over the batch and its parameter gradient.
  double loss_and_gradient(const Eigen::Ref<const Matrix>& configs, std::span<const double> b_norm,
                           std::span<const double> targets, GradientBundle& grads) const;

 private:
  DenseNetwork body_;
};

double predict_member(const DplNetwork& member, std::span<const double> config, double b_norm);

/// Ablation model: plain regression on [config, b_norm] with a single linear
/// output and no power-law head.
class ConditionedNetwork {
 public:
  ConditionedNetwork() = default;
  /// `config_dim` excludes the appended budget input.
  ConditionedNetwork(int config_dim, const SurrogateArchitecture& arch = {});

  const DenseNetwork& body() const { return body_; }
  DenseNetwork& body() { return body_; }
  int config_dim() const { return body_.input_dim() - 1; }

  Vector predict(const Eigen::Ref<const Matrix>& configs, std::span<const double> b_norm) const;
  double loss_and_gradient(const Eigen::Ref<const Matrix>& configs, std::span<const double> b_norm,
                           std::span<const double> targets, GradientBundle& grads) const;

 private:
  DenseNetwork body_;
};

/// `input` must already carry the budget as its last entry
/// (length == config_dim + 1); throws ShapeError otherwise.
double predict_conditioned_nn(const ConditionedNetwork& net, std::span<const double> input);
double predict_conditioned_nn(const ConditionedNetwork& net, std::span<const double> config,
                              double b_norm);

struct TrainerSchedule {
  int initial_epochs = 250;
  int refine_epochs = 20;
  int initial_phase_iterations = 10;
  int restart_threshold_iterations = 1;
  int batch_size = 64;
  int iterations_since_improvement = 0;
  double best_fit_loss = std::numeric_limits<double>::infinity();

  /// Threshold = ceil(1.2 * lc_length): the curve length plus a 20% buffer.
  static TrainerSchedule for_curve_length(int lc_length);
  void reset_stagnation();
};

/// Ticks the stagnation counter with this iteration's fit loss. True when the
/// loss is non-finite or has not improved (by more than 1e-9) for more than
/// restart_threshold_iterations consecutive calls.
bool should_restart(TrainerSchedule& schedule, double current_fit_loss);

/// Receives (member index, history indices of one mini-batch).
using BatchObserver = std::function<void(std::size_t, std::span<const std::size_t>)>;

/// Generic mini-batch trainer state for one network.
template <typename Net>
struct Trainee {
  Net net;
  AdamState adam;
  Rng rng;
  std::uint64_t seed = 0;
};

struct EnsembleConfig {
  int members = 5;
  SurrogateArchitecture architecture;
  double learning_rate = 1e-3;
};

class DplEnsemble {
 public:
  DplEnsemble() = default;
  DplEnsemble(int input_dim, const EnsembleConfig& config = {});

  std::size_t size() const { return members_.size(); }
  int input_dim() const { return input_dim_; }
  const EnsembleConfig& config() const { return config_; }

  const DplNetwork& member(std::size_t k) const { return members_.at(k).net; }
  DplNetwork& member(std::size_t k) { return members_.at(k).net; }
  std::vector<Trainee<DplNetwork>>& trainees() { return members_; }
  const std::vector<Trainee<DplNetwork>>& trainees() const { return members_; }

 private:
  int input_dim_ = 0;
  EnsembleConfig config_;
  std::vector<Trainee<DplNetwork>> members_;
};

/// Seed of member k for a given ensemble seed.
std::uint64_t member_seed(std::uint64_t ensemble_seed, std::size_t k);

/// Re-draws every member from init_weights(member_seed(seed, k)), resets its
/// Adam state and its batch-order stream.
void reset_members(DplEnsemble& ensemble, std::uint64_t seed);

/// Fresh initialization plus schedule.initial_epochs of mini-batch Adam on the
/// L1 loss; each member shuffles with its own stream. Returns the
/// member-averaged MAE over `data` after training (NaN on divergence).
double fit_initial(DplEnsemble& ensemble, const TrainingSet& data, const TrainerSchedule& schedule,
                   std::uint64_t seed, const BatchObserver& observer = {});

/// schedule.refine_epochs of training; sample `newest` is appended to every
/// mini-batch. Returns the member-averaged MAE after training.
double refine(DplEnsemble& ensemble, const TrainingSet& data, std::size_t newest,
              const TrainerSchedule& schedule, const BatchObserver& observer = {});

/// Member-averaged MAE over `data`.
double fit_loss(const DplEnsemble& ensemble, const TrainingSet& data);

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and population variance (divisor K) of member predictions.
Posterior posterior_from_predictions(std::span<const double> predictions);
Posterior posterior(const DplEnsemble& ensemble, std::span<const double> config, double b_norm);
/// One posterior per column of `configs`, all at the same budget.
std::vector<Posterior> posterior_batch(const DplEnsemble& ensemble,
                                       const Eigen::Ref<const Matrix>& configs, double b_norm);

/// Trains a single network for `epochs` epochs (forecasting experiments).
template <typename Net>
double train_network(Trainee<Net>& trainee, const TrainingSet& data, int epochs, int batch_size,
                     std::optional<std::size_t> newest = std::nullopt,
                     const BatchObserver& observer = {}, std::size_t member_index = 0);

template <typename Net>
double mean_absolute_error(const Net& net, const TrainingSet& data);

/// Versioned checkpoint document: architecture, schedule counters, per-member
/// seeds, RNG streams, Adam moments and flattened parameters.
nlohmann::json ensemble_to_json(const DplEnsemble& ensemble, const TrainerSchedule& schedule);
std::pair<DplEnsemble, TrainerSchedule> ensemble_from_json(const nlohmann::json& doc);

}  // namespace dpl
