#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "dpl/benchmarks.hpp"
#include "dpl/errors.hpp"
#include "oracles.hpp"

using namespace dpl;
using nlohmann::json;

namespace {

json minimal_doc() {
  return json::parse(R"({
    "name": "tiny", "metric": "loss", "b_max": 2,
    "hyperparameters": [{"name": "lr", "min": 0.0, "max": 2.0}],
    "configs": [{"id": 5, "values": [1.0], "curve": [0.5, 0.25]}]
  })");
}

std::string error_path(const json& doc) {
  try {
    BenchmarkTable::from_json(doc);
  } catch (const DataError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("minimal benchmark loads") {
  const auto t = BenchmarkTable::from_json(minimal_doc());
  CHECK(t.name() == "tiny");
  CHECK(t.b_max() == 2);
  CHECK(t.size() == 1);
  CHECK(t.config(5).curve.values == std::vector<double>{0.5, 0.25});
  CHECK(t.config(5).scaled_values == std::vector<double>{0.5});
  CHECK_FALSE(t.generator_coefficients().has_value());
}

TEST_CASE("accuracy curves become losses") {
  auto doc = minimal_doc();
  doc["metric"] = "accuracy";
  doc["configs"][0]["curve"] = {0.6, 0.8};
  const auto t = BenchmarkTable::from_json(doc);
  CHECK(t.config(5).curve.values[0] == doctest::Approx(0.4));
  CHECK(t.config(5).curve.values[1] == doctest::Approx(0.2));
  CHECK(t.config(5).raw_curve == std::vector<double>{0.6, 0.8});
}

TEST_CASE("schema violations name the field") {
  auto bad_len = minimal_doc();
  bad_len["configs"][0]["curve"] = {0.5};
  CHECK(error_path(bad_len) == "configs[0].curve");
  try {
    BenchmarkTable::from_json(bad_len);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("config id 5") != std::string::npos);
  }

  auto out_of_bounds = minimal_doc();
  out_of_bounds["configs"][0]["values"] = {3.0};
  CHECK(error_path(out_of_bounds) == "configs[0].values[0]");

  auto missing = minimal_doc();
  missing.erase("b_max");
  CHECK(error_path(missing) == "b_max");

  auto metric = minimal_doc();
  metric["metric"] = "reward";
  CHECK(error_path(metric) == "metric");

  auto dup = minimal_doc();
  dup["configs"].push_back(dup["configs"][0]);
  CHECK(error_path(dup) == "configs[1].id");

  auto empty = minimal_doc();
  empty["configs"] = json::array();
  CHECK(error_path(empty) == "configs");

  auto wrong_type = minimal_doc();
  wrong_type["hyperparameters"][0]["min"] = "zero";
  CHECK(error_path(wrong_type) == "hyperparameters[0].min");

  CHECK_THROWS_AS(parse_benchmark("{not json"), DataError);
  CHECK_THROWS_AS(load_benchmark("/nonexistent/file.json"), DataError);
}

TEST_CASE("load, serialize, load round-trips bit-exactly") {
  const auto t = generate_synthetic({.seed = 3, .n_configs = 20, .hp_dim = 3, .b_max = 7,
                                     .noise_std = 0.01});
  const std::string text = serialize_benchmark(t);
  const auto back = parse_benchmark(text);
  CHECK(serialize_benchmark(back) == text);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back.configs()[i].curve.values == t.configs()[i].curve.values);
    CHECK(back.configs()[i].values == t.configs()[i].values);
  }
  const auto path = std::filesystem::temp_directory_path() / "dplhpo_roundtrip.json";
  save_benchmark(t, path);
  CHECK(serialize_benchmark(load_benchmark(path)) == text);
  std::filesystem::remove(path);
}

TEST_CASE("scaling") {
  const std::vector<HyperparameterBound> bounds{{"a", 2.0, 4.0}, {"b", 1.0, 1.0}};
  CHECK(scale_config(bounds, std::vector<double>{2.0, 1.0}) == std::vector<double>{0.0, 0.0});
  CHECK(scale_config(bounds, std::vector<double>{4.0, 1.0}) == std::vector<double>{1.0, 0.0});
  CHECK(scale_config(bounds, std::vector<double>{3.0, 1.0}) == std::vector<double>{0.5, 0.0});
  CHECK_THROWS_AS(scale_config(bounds, std::vector<double>{5.0, 1.0}), DomainError);
  CHECK_THROWS_AS(scale_config(bounds, std::vector<double>{3.0}), ShapeError);
  // affine and order preserving
  const auto lo = scale_config(bounds, std::vector<double>{2.5, 1.0})[0];
  const auto hi = scale_config(bounds, std::vector<double>{3.5, 1.0})[0];
  CHECK(lo < hi);
  CHECK(hi - lo == doctest::Approx(0.5));
}

TEST_CASE("evaluate is a pure lookup") {
  const auto t = BenchmarkTable::from_json(minimal_doc());
  CHECK(evaluate(t, 5, 2).loss == 0.25);
  CHECK(evaluate(t, 5, 2).loss == evaluate(t, 5, 2).loss);
  CHECK(evaluate(t, 5, 2, 1).step_cost == 1);
  CHECK(evaluate(t, 5, 2).step_cost == 2);
  CHECK_THROWS_AS(evaluate(t, 5, 0), std::out_of_range);
  CHECK_THROWS_AS(evaluate(t, 5, 3), std::out_of_range);
  CHECK_THROWS_AS(evaluate(t, 6, 1), std::out_of_range);
}

TEST_CASE("oracle and normalized regret") {
  auto doc = minimal_doc();
  doc["configs"].push_back({{"id", 6}, {"values", {0.5}}, {"curve", {0.2, 0.3}}});
  const auto t = BenchmarkTable::from_json(doc);
  CHECK(oracle(t) == 0.2);
  CHECK(worst_best_loss(t) == 0.25);
  CHECK(normalized_regret(0.025, t) == doctest::Approx(0.5));
  CHECK(normalized_regret(0.0, t) == 0.0);
  CHECK(normalized_regret(-0.1, t) == 0.0);

  auto flat = minimal_doc();
  CHECK_THROWS_AS(normalized_regret(0.1, BenchmarkTable::from_json(flat)), DomainError);

  auto span_doc = minimal_doc();
  span_doc["configs"][0]["curve"] = {0.9, 0.7};
  span_doc["configs"].push_back({{"id", 6}, {"values", {0.5}}, {"curve", {0.2, 0.4}}});
  CHECK(normalized_regret(0.05, BenchmarkTable::from_json(span_doc)) == doctest::Approx(0.1));
}

TEST_CASE("oracle equals brute force on random tables") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = testing::random_table(s, 50, 20);
    CHECK(oracle(t) == testing::brute_force_oracle(t));
  }
}

TEST_CASE("synthetic generator") {
  const SyntheticSpec spec{.seed = 4, .n_configs = 50, .hp_dim = 3, .b_max = 15, .noise_std = 0.0};
  const auto t = generate_synthetic(spec);
  CHECK(t.size() == 50);
  CHECK(t.dim() == 3);
  REQUIRE(t.generator_coefficients().has_value());
  const auto& coefs = *t.generator_coefficients();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& curve = t.configs()[i].curve.values;
    CHECK(curve.front() <= 1.0);
    for (std::size_t s = 0; s < curve.size(); ++s) {
      CHECK(curve[s] == eval_power_law(coefs[i], static_cast<double>(s + 1) / spec.b_max));
      if (s > 0) CHECK(curve[s] <= curve[s - 1]);
    }
    CHECK(coefs[i].alpha >= 0.05);
    CHECK(coefs[i].alpha <= 0.5);
    CHECK(coefs[i].gamma >= 0.3);
    CHECK(coefs[i].gamma <= 3.0);
  }
  CHECK(serialize_benchmark(generate_synthetic(spec)) == serialize_benchmark(t));
  CHECK(oracle(t) == testing::brute_force_oracle(t));

  const auto noisy = generate_synthetic({.seed = 4, .n_configs = 50, .hp_dim = 3, .b_max = 15,
                                         .noise_std = 0.5});
  for (const auto& c : noisy.configs()) {
    for (double v : c.curve.values) {
      CHECK(v > 0.0);
      CHECK(v < 1.5);
    }
  }
  CHECK_THROWS(generate_synthetic({.n_configs = 0}));
}
