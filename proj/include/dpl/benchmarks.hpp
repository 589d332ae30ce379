#pragma once

// Tabular learning-curve benchmarks.
//
// File format (UTF-8 JSON):
//   {
//     "name": string,
//     "metric": "loss" | "accuracy",
//     "b_max": integer,
//     "hyperparameters": [{"name": string, "min": number, "max": number}, ...],
//     "configs": [{"id": integer, "values": [number x hp count],
//                  "curve": [number x b_max]}, ...],
//     "generator": {"coefficients": [[alpha, beta, gamma] per config]}   (optional)
//   }
//
// Accuracy curves are stored as loss = 1 - accuracy (values assumed in
// [0, 1]); every other metric passes through. Converters for real data are
// expected to do any trimming themselves (LCBench exports, for example, drop
// the first and last logged epoch).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpl/curve_models.hpp"
#include "dpl/history.hpp"
#include "json.hpp"

namespace dpl {

enum class MetricDirection { loss, accuracy };

struct HyperparameterBound {
  std::string name;
  double min = 0.0;
  double max = 1.0;
};

struct BenchmarkConfig {
  ConfigId id = 0;
  std::vector<double> values;         // raw hyperparameter values
  std::vector<double> scaled_values;  // min-max scaled to [0, 1]
  std::vector<double> raw_curve;      // as stored in the file
  LearningCurve curve;                // loss-oriented view of raw_curve
};

/// Immutable after construction.
class BenchmarkTable {
 public:
  /// Validates `doc` against the schema; throws DataError naming the field.
  static BenchmarkTable from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;

  const std::string& name() const { return name_; }
  MetricDirection metric() const { return metric_; }
  int b_max() const { return b_max_; }
  const std::vector<HyperparameterBound>& hyperparameters() const { return hyperparameters_; }
  std::size_t dim() const { return hyperparameters_.size(); }
  const std::vector<BenchmarkConfig>& configs() const { return configs_; }
  std::size_t size() const { return configs_.size(); }

  bool contains(ConfigId id) const { return index_.contains(id); }
  /// Throws std::out_of_range for an unknown id.
  const BenchmarkConfig& config(ConfigId id) const;

  const std::optional<std::vector<PowerLawCoefficients>>& generator_coefficients() const {
    return generator_;
  }

 private:
  BenchmarkTable() = default;

  std::string name_;
  MetricDirection metric_ = MetricDirection::loss;
  int b_max_ = 0;
  std::vector<HyperparameterBound> hyperparameters_;
  std::vector<BenchmarkConfig> configs_;
  std::unordered_map<ConfigId, std::size_t> index_;
  std::optional<std::vector<PowerLawCoefficients>> generator_;
};

BenchmarkTable load_benchmark(const std::filesystem::path& path);
BenchmarkTable parse_benchmark(const std::string& text);
std::string serialize_benchmark(const BenchmarkTable& table);
void save_benchmark(const BenchmarkTable& table, const std::filesystem::path& path);

/// Min-max scaling with the declared bounds; a degenerate dimension
/// (min == max) maps to 0. Throws DomainError for out-of-bounds values.
std::vector<double> scale_config(const BenchmarkTable& table, std::span<const double> raw_values);
std::vector<double> scale_config(std::span<const HyperparameterBound> bounds,
                                 std::span<const double> raw_values);

struct Evaluation {
  double loss = 0.0;
  int step_cost = 0;  // budget - previously_evaluated
};

/// Stored loss of `id` after `budget` steps. Throws std::out_of_range for an
/// unknown id or a budget outside [1, b_max] (or below previously_evaluated).
Evaluation evaluate(const BenchmarkTable& table, ConfigId id, int budget,
                    int previously_evaluated = 0);

/// Lowest loss over every config and budget.
double oracle(const BenchmarkTable& table);
/// Largest per-config best loss (the worst configuration's best value).
double worst_best_loss(const BenchmarkTable& table);

/// regret / (worst best - oracle), clamped at 0. Throws DomainError for a
/// table whose span is zero.
double normalized_regret(double regret, const BenchmarkTable& table);

struct SyntheticSpec {
  std::uint64_t seed = 0;
  int n_configs = 200;
  int hp_dim = 4;
  int b_max = 20;
  double noise_std = 0.0;
};

/// Configs uniform in [0,1]^hp_dim; a seeded smooth map sends each to
/// alpha in [0.05, 0.5], beta in [0.3, 1], gamma in [0.3, 3]. The curve is
///   f(step) = alpha + beta * (1 - alpha) * step^-gamma   (so f(1) <= 1)
/// plus clipped Gaussian noise. The stored generator coefficients are the
/// same curve in normalized-budget form, (alpha, beta*(1-alpha)*b_max^-gamma,
/// gamma), so with zero noise curve[i] == eval_power_law(coef, (i+1)/b_max)
/// exactly.
BenchmarkTable generate_synthetic(const SyntheticSpec& spec);

}  // namespace dpl
