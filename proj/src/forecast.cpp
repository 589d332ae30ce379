#include "dpl/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "dpl/errors.hpp"
#include "dpl/rng.hpp"
#include "dpl/stats.hpp"
#include "dpl/trajectory_io.hpp"

namespace dpl {

std::string_view to_string(ForecastModel model) {
  switch (model) {
    case ForecastModel::dpl: return "dpl";
    case ForecastModel::power_law: return "pl";
    case ForecastModel::conditioned_nn: return "condnn";
  }
  return "?";
}

ForecastModel parse_forecast_model(std::string_view name) {
  if (name == "dpl") return ForecastModel::dpl;
  if (name == "pl") return ForecastModel::power_law;
  if (name == "condnn") return ForecastModel::conditioned_nn;
  throw std::invalid_argument("unknown forecast model '" + std::string(name) + "'");
}

namespace {

TrainingSet prefix_training_set(const BenchmarkTable& table, int observed) {
  TrainingSet data;
  const auto dim = static_cast<Eigen::Index>(table.dim());
  const auto n = static_cast<Eigen::Index>(table.size()) * observed;
  data.configs.resize(dim, n);
  data.budgets.reserve(static_cast<std::size_t>(n));
  data.targets.reserve(static_cast<std::size_t>(n));
  Eigen::Index col = 0;
  for (const auto& c : table.configs()) {
    const Eigen::Map<const Vector> x(c.scaled_values.data(), dim);
    for (int step = 1; step <= observed; ++step) {
      data.configs.col(col++) = x;
      data.budgets.push_back(static_cast<double>(step) / table.b_max());
      data.targets.push_back(c.curve.at_step(static_cast<std::size_t>(step)));
    }
  }
  return data;
}

Matrix scaled_configs(const BenchmarkTable& table) {
  const auto dim = static_cast<Eigen::Index>(table.dim());
  Matrix out(dim, static_cast<Eigen::Index>(table.size()));
  for (std::size_t i = 0; i < table.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Vector>(table.configs()[i].scaled_values.data(), dim);
  }
  return out;
}

template <typename Net>
std::vector<double> train_and_predict(Net net, const BenchmarkTable& table, const TrainingSet& data,
                                      std::uint64_t seed, const ForecastSettings& settings) {
  Trainee<Net> trainee;
  trainee.seed = seed;
  trainee.net = std::move(net);
  trainee.net.body() = init_weights(std::move(trainee.net.body()), seed);
  trainee.adam = AdamState(trainee.net.body().parameter_count(), settings.learning_rate);
  trainee.rng = Rng(derive_seed(seed, 1));
  train_network(trainee, data, settings.epochs, settings.batch_size);
  const std::vector<double> final_budget(table.size(), 1.0);
  const Vector preds = trainee.net.predict(scaled_configs(table), final_budget);
  return {preds.data(), preds.data() + preds.size()};
}

}  // namespace

ForecastReport run_forecast_experiment(const BenchmarkTable& table, double fraction,
                                       ForecastModel model, std::uint64_t seed,
                                       const ForecastSettings& settings) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("forecast fraction must lie in (0, 1)");
  }
  ForecastReport report;
  report.model = model;
  report.fraction = fraction;
  report.seed = seed;
  // The small tolerance keeps e.g. 0.3 * 10 from rounding up to 4.
  const double exact = fraction * table.b_max();
  report.observed_steps = std::clamp(static_cast<int>(std::ceil(exact - 1e-9)), 1, table.b_max());

  for (const auto& c : table.configs()) {
    report.config_ids.push_back(c.id);
    report.actual.push_back(c.curve.final_value());
  }

  const std::uint64_t model_seed = derive_seed(seed, 0x666f7265ULL);
  switch (model) {
    case ForecastModel::power_law: {
      FitConfig fit = settings.fit;
      fit.seed = model_seed;
      for (const auto& c : table.configs()) {
        const std::span<const double> prefix(c.curve.values.data(),
                                             static_cast<std::size_t>(report.observed_steps));
        // a single point cannot pin three coefficients; carry it forward
        if (prefix.size() < 2) {
          report.predicted.push_back(prefix.back());
          continue;
        }
        const auto result =
            fit_single_curve(prefix, c.curve.max_budget(), Formulation::power_law, fit);
        report.predicted.push_back(eval_power_law(result.coefficients.power_law(), 1.0));
      }
      break;
    }
    case ForecastModel::dpl: {
      const auto data = prefix_training_set(table, report.observed_steps);
      report.predicted = train_and_predict(
          DplNetwork(static_cast<int>(table.dim()), settings.architecture), table, data,
          model_seed, settings);
      break;
    }
    case ForecastModel::conditioned_nn: {
      const auto data = prefix_training_set(table, report.observed_steps);
      report.predicted = train_and_predict(
          ConditionedNetwork(static_cast<int>(table.dim()), settings.architecture), table, data,
          model_seed, settings);
      break;
    }
  }

  const bool constant =
      std::all_of(report.predicted.begin(), report.predicted.end(),
                  [&](double p) { return p == report.predicted.front(); });
  const bool constant_truth =
      std::all_of(report.actual.begin(), report.actual.end(),
                  [&](double a) { return a == report.actual.front(); });
  report.spearman = (constant || constant_truth || table.size() < 2)
                        ? 0.0
                        : spearman(report.predicted, report.actual);

  double total = 0.0;
  for (std::size_t i = 0; i < report.actual.size(); ++i) {
    total += std::abs(report.predicted[i] - report.actual[i]) / std::abs(report.actual[i]);
  }
  report.mean_abs_rel_error = total / static_cast<double>(report.actual.size());
  return report;
}

void write_forecast_csv(std::ostream& out, const std::vector<ForecastReport>& reports) {
  out << kForecastHeader << '\n';
  for (const auto& r : reports) {
    out << to_string(r.model) << ',' << format_double(r.fraction) << ',' << r.seed << ','
        << format_double(r.spearman) << ',' << format_double(r.mean_abs_rel_error) << '\n';
  }
}

std::vector<ForecastRow> read_forecast_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source, "empty forecast file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kForecastHeader) throw DataError(source, "unexpected forecast header");
  std::vector<ForecastRow> rows;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty() || line == "\r") continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw DataError(where, "expected 5 fields, got " + std::to_string(f.size()));
    try {
      ForecastRow row;
      row.model = std::string(to_string(parse_forecast_model(f[0])));
      row.fraction = parse_double(f[1]);
      std::size_t used = 0;
      row.seed = std::stoull(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("seed");
      row.spearman = parse_double(f[3]);
      row.mean_abs_rel_error = parse_double(f[4]);
      if (row.spearman < -1.0 || row.spearman > 1.0) throw std::invalid_argument("spearman range");
      rows.push_back(std::move(row));
    } catch (const std::logic_error& e) {
      throw DataError(where, std::string("malformed row: ") + e.what());
    }
  }
  return rows;
}

}  // namespace dpl
