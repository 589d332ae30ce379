#pragma once

// Learning-curve forecasting: train on the first part of every curve in a
// table and predict each config's final value.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dpl/benchmarks.hpp"
#include "dpl/curve_models.hpp"
#include "dpl/dpl_surrogate.hpp"

namespace dpl {

enum class ForecastModel {
  dpl,             // one power-law network shared across configs
  power_law,       // a separate power-law fit per curve
  conditioned_nn,  // network on [config, budget] without the power-law head
};

std::string_view to_string(ForecastModel model);
/// Accepts "dpl", "pl", "condnn". Throws std::invalid_argument otherwise.
ForecastModel parse_forecast_model(std::string_view name);

struct ForecastSettings {
  int epochs = 250;
  int batch_size = 64;
  double learning_rate = 1e-3;
  SurrogateArchitecture architecture;
  FitConfig fit;  // per-curve model; its seed is replaced by the run seed
};

struct ForecastReport {
  ForecastModel model = ForecastModel::dpl;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  int observed_steps = 0;
  std::vector<ConfigId> config_ids;
  std::vector<double> predicted;
  std::vector<double> actual;
  double spearman = 0.0;  // 0 when the predictions are all equal
  double mean_abs_rel_error = 0.0;
};

/// Observes the first ceil(fraction * b_max) steps of every curve.
/// Throws std::invalid_argument unless 0 < fraction < 1.
ForecastReport run_forecast_experiment(const BenchmarkTable& table, double fraction,
                                       ForecastModel model, std::uint64_t seed,
                                       const ForecastSettings& settings = {});

inline constexpr std::string_view kForecastHeader = "model,fraction,seed,spearman,mean_abs_rel_error";

void write_forecast_csv(std::ostream& out, const std::vector<ForecastReport>& reports);

struct ForecastRow {
  std::string model;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  double spearman = 0.0;
  double mean_abs_rel_error = 0.0;
};

/// Throws DataError on a bad header or row.
std::vector<ForecastRow> read_forecast_csv(std::istream& in, const std::string& source = {});

}  // namespace dpl
