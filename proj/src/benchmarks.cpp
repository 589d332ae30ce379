#include "dpl/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "dpl/errors.hpp"
#include "dpl/rng.hpp"

namespace dpl {

namespace {

using json = nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

std::string field(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

std::string element(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

double require_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw DataError(path, "expected a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) throw DataError(path, "expected a finite number");
  return x;
}

std::vector<double> require_numbers(const json& value, const std::string& path) {
  if (!value.is_array()) throw DataError(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(require_number(value[i], element(path, i)));
  return out;
}

std::string require_string(const json& value, const std::string& path) {
  if (!value.is_string()) throw DataError(path, "expected a string");
  return value.get<std::string>();
}

}  // namespace

BenchmarkTable BenchmarkTable::from_json(const json& doc) {
  if (!doc.is_object()) throw DataError("", "benchmark document must be a JSON object");
  BenchmarkTable table;
  table.name_ = require_string(require(doc, "name", ""), "name");

  const std::string metric = require_string(require(doc, "metric", ""), "metric");
  if (metric == "loss") {
    table.metric_ = MetricDirection::loss;
  } else if (metric == "accuracy") {
    table.metric_ = MetricDirection::accuracy;
  } else {
    throw DataError("metric", "expected \"loss\" or \"accuracy\", got \"" + metric + "\"");
  }

  const json& b_max = require(doc, "b_max", "");
  if (!b_max.is_number_integer() || b_max.get<std::int64_t>() < 1 ||
      b_max.get<std::int64_t>() > std::numeric_limits<int>::max()) {
    throw DataError("b_max", "expected a positive integer");
  }
  table.b_max_ = b_max.get<int>();

  const json& hps = require(doc, "hyperparameters", "");
  if (!hps.is_array()) throw DataError("hyperparameters", "expected an array");
  for (std::size_t i = 0; i < hps.size(); ++i) {
    const std::string path = element("hyperparameters", i);
    if (!hps[i].is_object()) throw DataError(path, "expected an object");
    HyperparameterBound bound;
    bound.name = require_string(require(hps[i], "name", path), field(path, "name"));
    bound.min = require_number(require(hps[i], "min", path), field(path, "min"));
    bound.max = require_number(require(hps[i], "max", path), field(path, "max"));
    if (bound.min > bound.max) throw DataError(path, "min exceeds max");
    table.hyperparameters_.push_back(std::move(bound));
  }

  const json& configs = require(doc, "configs", "");
  if (!configs.is_array()) throw DataError("configs", "expected an array");
  if (configs.empty()) throw DataError("configs", "at least one config is required");
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const std::string path = element("configs", i);
    const json& c = configs[i];
    if (!c.is_object()) throw DataError(path, "expected an object");
    const json& id = require(c, "id", path);
    if (!id.is_number_integer()) throw DataError(field(path, "id"), "expected an integer");

    BenchmarkConfig cfg;
    cfg.id = id.get<ConfigId>();
    const std::string id_text = " (config id " + std::to_string(cfg.id) + ")";
    if (table.index_.contains(cfg.id)) {
      throw DataError(field(path, "id"), "duplicate config id " + std::to_string(cfg.id));
    }
    cfg.values = require_numbers(require(c, "values", path), field(path, "values"));
    if (cfg.values.size() != table.hyperparameters_.size()) {
      throw DataError(field(path, "values"),
                      "expected " + std::to_string(table.hyperparameters_.size()) +
                          " values, got " + std::to_string(cfg.values.size()) + id_text);
    }
    for (std::size_t k = 0; k < cfg.values.size(); ++k) {
      const auto& bound = table.hyperparameters_[k];
      if (cfg.values[k] < bound.min || cfg.values[k] > bound.max) {
        throw DataError(element(field(path, "values"), k),
                        "value outside the bounds of '" + bound.name + "'" + id_text);
      }
    }
    cfg.scaled_values = scale_config(table.hyperparameters_, cfg.values);

    cfg.raw_curve = require_numbers(require(c, "curve", path), field(path, "curve"));
    if (cfg.raw_curve.size() != static_cast<std::size_t>(table.b_max_)) {
      throw DataError(field(path, "curve"),
                      "curve length " + std::to_string(cfg.raw_curve.size()) +
                          " does not match b_max " + std::to_string(table.b_max_) + id_text);
    }
    cfg.curve.values = cfg.raw_curve;
    if (table.metric_ == MetricDirection::accuracy) {
      for (double& v : cfg.curve.values) v = 1.0 - v;
    }
    table.index_.emplace(cfg.id, table.configs_.size());
    table.configs_.push_back(std::move(cfg));
  }

  if (auto gen = doc.find("generator"); gen != doc.end()) {
    if (!gen->is_object()) throw DataError("generator", "expected an object");
    const json& coefs = require(*gen, "coefficients", "generator");
    if (!coefs.is_array() || coefs.size() != table.configs_.size()) {
      throw DataError("generator.coefficients", "expected one [alpha, beta, gamma] per config");
    }
    std::vector<PowerLawCoefficients> out;
    for (std::size_t i = 0; i < coefs.size(); ++i) {
      const auto path = element("generator.coefficients", i);
      const auto triple = require_numbers(coefs[i], path);
      if (triple.size() != 3) throw DataError(path, "expected [alpha, beta, gamma]");
      out.push_back({triple[0], triple[1], triple[2]});
    }
    table.generator_ = std::move(out);
  }
  return table;
}

nlohmann::ordered_json BenchmarkTable::to_json() const {
  nlohmann::ordered_json doc;
  doc["name"] = name_;
  doc["metric"] = metric_ == MetricDirection::loss ? "loss" : "accuracy";
  doc["b_max"] = b_max_;
  auto& hps = doc["hyperparameters"];
  hps = nlohmann::ordered_json::array();
  for (const auto& hp : hyperparameters_) {
    hps.push_back({{"name", hp.name}, {"min", hp.min}, {"max", hp.max}});
  }
  auto& configs = doc["configs"];
  configs = nlohmann::ordered_json::array();
  for (const auto& c : configs_) {
    configs.push_back({{"id", c.id}, {"values", c.values}, {"curve", c.raw_curve}});
  }
  if (generator_) {
    auto coefs = nlohmann::ordered_json::array();
    for (const auto& g : *generator_) coefs.push_back({g.alpha, g.beta, g.gamma});
    doc["generator"] = {{"coefficients", std::move(coefs)}};
  }
  return doc;
}

const BenchmarkConfig& BenchmarkTable::config(ConfigId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown config id " + std::to_string(id));
  return configs_[it->second];
}

BenchmarkTable parse_benchmark(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError("", std::string("invalid JSON: ") + e.what());
  }
  return BenchmarkTable::from_json(doc);
}

BenchmarkTable load_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("", "cannot open benchmark file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_benchmark(buffer.str());
  } catch (const DataError& e) {
    throw DataError(e.path(), std::string(e.what()) + " [" + path.string() + "]");
  }
}

std::string serialize_benchmark(const BenchmarkTable& table) { return table.to_json().dump() + "\n"; }

void save_benchmark(const BenchmarkTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_benchmark(table);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<double> scale_config(std::span<const HyperparameterBound> bounds,
                                 std::span<const double> raw_values) {
  if (bounds.size() != raw_values.size()) throw ShapeError("scale_config: dimension mismatch");
  std::vector<double> out(raw_values.size());
  for (std::size_t k = 0; k < raw_values.size(); ++k) {
    const auto& b = bounds[k];
    const double v = raw_values[k];
    if (v < b.min || v > b.max) {
      throw DomainError("scale_config: '" + b.name + "' value out of bounds");
    }
    out[k] = b.max == b.min ? 0.0 : (v - b.min) / (b.max - b.min);
  }
  return out;
}

std::vector<double> scale_config(const BenchmarkTable& table, std::span<const double> raw_values) {
  return scale_config(table.hyperparameters(), raw_values);
}

Evaluation evaluate(const BenchmarkTable& table, ConfigId id, int budget, int previously_evaluated) {
  const auto& cfg = table.config(id);
  if (budget < 1 || budget > table.b_max()) {
    throw std::out_of_range("budget " + std::to_string(budget) + " outside [1, " +
                            std::to_string(table.b_max()) + "]");
  }
  if (previously_evaluated < 0 || previously_evaluated > budget) {
    throw std::out_of_range("budget below the previously evaluated budget");
  }
  return {cfg.curve.at_step(static_cast<std::size_t>(budget)), budget - previously_evaluated};
}

double oracle(const BenchmarkTable& table) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : table.configs()) {
    best = std::min(best, *std::min_element(c.curve.values.begin(), c.curve.values.end()));
  }
  return best;
}

double worst_best_loss(const BenchmarkTable& table) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : table.configs()) {
    worst = std::max(worst, *std::min_element(c.curve.values.begin(), c.curve.values.end()));
  }
  return worst;
}

double normalized_regret(double regret, const BenchmarkTable& table) {
  const double span = worst_best_loss(table) - oracle(table);
  if (!(span > 0.0)) {
    throw DomainError("normalized_regret: table '" + table.name() + "' has zero span");
  }
  return std::max(regret / span, 0.0);
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

// s(x) = tanh(w . (x - 1/2) + sum_j a_j sin(2 pi w_j x_j + phi_j)), mapped to [lo, hi]
struct SmoothMap {
  std::vector<double> weights, amplitudes, frequencies, phases;
  double lo = 0.0, hi = 1.0;

  static SmoothMap draw(Rng& rng, int dim, double lo, double hi) {
    SmoothMap m;
    m.lo = lo;
    m.hi = hi;
    const double scale = 2.0 / std::sqrt(static_cast<double>(dim));
    for (int j = 0; j < dim; ++j) {
      m.weights.push_back(scale * standard_normal(rng));
      m.amplitudes.push_back(uniform(rng, 0.0, 0.6));
      m.frequencies.push_back(uniform(rng, 0.5, 1.5));
      m.phases.push_back(uniform(rng, 0.0, 2.0 * std::numbers::pi));
    }
    return m;
  }

  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      s += weights[j] * (x[j] - 0.5);
      s += amplitudes[j] * std::sin(2.0 * std::numbers::pi * frequencies[j] * x[j] + phases[j]);
    }
    return lo + (hi - lo) * 0.5 * (1.0 + std::tanh(s));
  }
};

}  // namespace

BenchmarkTable generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_configs < 1) throw std::invalid_argument("generate_synthetic: n_configs must be >= 1");
  if (spec.hp_dim < 1) throw std::invalid_argument("generate_synthetic: hp_dim must be >= 1");
  if (spec.b_max < 1) throw std::invalid_argument("generate_synthetic: b_max must be >= 1");
  if (!(spec.noise_std >= 0.0)) throw std::invalid_argument("generate_synthetic: noise_std < 0");

  Rng map_rng(derive_seed(spec.seed, 1));
  const SmoothMap alpha_map = SmoothMap::draw(map_rng, spec.hp_dim, 0.05, 0.5);
  const SmoothMap beta_map = SmoothMap::draw(map_rng, spec.hp_dim, 0.3, 1.0);
  const SmoothMap gamma_map = SmoothMap::draw(map_rng, spec.hp_dim, 0.3, 3.0);

  Rng config_rng(derive_seed(spec.seed, 2));
  Rng noise_rng(derive_seed(spec.seed, 3));
  constexpr double kLowest = 1e-6;
  constexpr double kHighest = 1.5 - 1e-6;

  json doc;
  doc["name"] = "synthetic-s" + std::to_string(spec.seed) + "-n" + std::to_string(spec.n_configs) +
                "-d" + std::to_string(spec.hp_dim) + "-b" + std::to_string(spec.b_max);
  doc["metric"] = "loss";
  doc["b_max"] = spec.b_max;
  doc["hyperparameters"] = json::array();
  for (int j = 0; j < spec.hp_dim; ++j) {
    doc["hyperparameters"].push_back({{"name", "x" + std::to_string(j)}, {"min", 0.0}, {"max", 1.0}});
  }
  json configs = json::array();
  json coefficients = json::array();
  for (int i = 0; i < spec.n_configs; ++i) {
    std::vector<double> x(static_cast<std::size_t>(spec.hp_dim));
    for (double& v : x) v = uniform01(config_rng);
    const double alpha = alpha_map(x);
    const double beta = beta_map(x);
    const double gamma = gamma_map(x);
    const PowerLawCoefficients normalized{
        alpha, beta * (1.0 - alpha) * std::pow(static_cast<double>(spec.b_max), -gamma), gamma};

    std::vector<double> curve(static_cast<std::size_t>(spec.b_max));
    for (int step = 1; step <= spec.b_max; ++step) {
      double y = eval_power_law(normalized, static_cast<double>(step) / spec.b_max);
      if (spec.noise_std > 0.0) {
        y = std::clamp(y + spec.noise_std * standard_normal(noise_rng), kLowest, kHighest);
      }
      curve[static_cast<std::size_t>(step - 1)] = y;
    }
    configs.push_back({{"id", i}, {"values", x}, {"curve", curve}});
    coefficients.push_back({normalized.alpha, normalized.beta, normalized.gamma});
  }
  doc["configs"] = std::move(configs);
  doc["generator"] = {{"coefficients", std::move(coefficients)}};
  return BenchmarkTable::from_json(doc);
}

}  // namespace dpl
