#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "dpl/baselines.hpp"
#include "oracles.hpp"

using namespace dpl;
using nlohmann::json;

namespace {

BenchmarkTable constant_table(int n, int b_max, double loss_scale = 1.0) {
  json doc;
  doc["name"] = "flat";
  doc["metric"] = "loss";
  doc["b_max"] = b_max;
  doc["hyperparameters"] = {{{"name", "x"}, {"min", 0.0}, {"max", 1.0}}};
  doc["configs"] = json::array();
  for (int i = 0; i < n; ++i) {
    doc["configs"].push_back({{"id", i}, {"values", {0.5}}, {"curve", std::vector<double>(b_max, 0.5 * loss_scale)}});
  }
  return BenchmarkTable::from_json(doc);
}

/// Budget reached per config, from the history.
std::map<ConfigId, int> reached(const Trajectory& t) {
  std::map<ConfigId, int> out;
  for (const auto& o : t.history.observations()) out[o.config_id] = o.budget;
  return out;
}

RunSettings budget(int steps, std::uint64_t seed = 0) {
  RunSettings s;
  s.total_step_budget = steps;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("rung ladders") {
  CHECK(geometric_rungs(1, 9, 3) == std::vector<int>{1, 3, 9});
  CHECK(geometric_rungs(1, 20, 3) == std::vector<int>{1, 3, 9, 20});
  CHECK(geometric_rungs(1, 1, 3) == std::vector<int>{1});
  CHECK_THROWS(geometric_rungs(1, 9, 1));
  CHECK(ShSchedule{}.rungs(27) == std::vector<int>{1, 3, 9, 27});
}

TEST_CASE("random search fully evaluates budget / b_max configs") {
  const auto t = generate_synthetic({.seed = 1, .n_configs = 50, .hp_dim = 2, .b_max = 10});
  const auto traj = run_random_search(t, budget(200, 3));
  CHECK(traj.steps_consumed() == 200);
  const auto r = reached(traj);
  CHECK(r.size() == 20);
  for (const auto& [id, b] : r) CHECK(b == 10);
  const auto again = run_random_search(t, budget(200, 3));
  CHECK(again.history.configs() == traj.history.configs());
  CHECK(run_random_search(t, budget(200, 4)).history.configs() != traj.history.configs());
}

TEST_CASE("random search on one config flags the unused budget") {
  const auto t = constant_table(1, 5);
  const auto traj = run_random_search(t, budget(100));
  CHECK(traj.steps_consumed() == 5);
  CHECK(traj.terminated_early);
  CHECK_FALSE(traj.termination_reason.empty());
}

TEST_CASE("successive halving incremental accounting") {
  const auto t = generate_synthetic({.seed = 2, .n_configs = 30, .hp_dim = 2, .b_max = 9});
  ShSchedule sched;
  sched.n_initial = 9;
  sched.brackets = 1;
  const auto traj = run_successive_halving(t, budget(1000), sched);
  CHECK(traj.steps_consumed() == 21);
  std::map<int, int> at_budget;
  for (const auto& [id, b] : reached(traj)) ++at_budget[b];
  CHECK(at_budget[1] == 6);
  CHECK(at_budget[3] == 2);
  CHECK(at_budget[9] == 1);
}

TEST_CASE("successive halving promotes the best by rung loss") {
  const auto t = generate_synthetic({.seed = 5, .n_configs = 9, .hp_dim = 2, .b_max = 9});
  ShSchedule sched;
  sched.brackets = 1;
  const auto traj = run_successive_halving(t, budget(1000), sched);
  const auto r = reached(traj);
  std::vector<std::pair<double, ConfigId>> rung0;
  for (const auto& [id, b] : r) rung0.push_back({t.config(id).curve.at_step(1), id});
  std::sort(rung0.begin(), rung0.end());
  for (std::size_t i = 0; i < rung0.size(); ++i) CHECK((r.at(rung0[i].second) >= 3) == (i < 3));
}

TEST_CASE("successive halving ties go to the lowest id") {
  const auto t = constant_table(9, 9);
  ShSchedule sched;
  sched.brackets = 1;
  const auto r = reached(run_successive_halving(t, budget(100), sched));
  CHECK(r.at(0) == 9);
  CHECK(r.at(1) == 3);
  CHECK(r.at(2) == 3);
  for (ConfigId id = 3; id < 9; ++id) CHECK(r.at(id) == 1);
}

TEST_CASE("successive halving with one config trains it to the top rung") {
  const auto t = constant_table(4, 9);
  ShSchedule sched;
  sched.n_initial = 1;
  sched.brackets = 1;
  const auto traj = run_successive_halving(t, budget(100), sched);
  CHECK(reached(traj).size() == 1);
  CHECK(traj.steps_consumed() == 9);
}

TEST_CASE("successive halving promotion is scale invariant") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto base = generate_synthetic({.seed = seed, .n_configs = 27, .hp_dim = 2, .b_max = 9});
    json doc = base.to_json();
    for (auto& c : doc["configs"]) {
      for (auto& v : c["curve"]) v = v.get<double>() * 3.5;
    }
    const auto scaled = BenchmarkTable::from_json(doc);
    const auto a = run_successive_halving(base, budget(150, seed));
    const auto b = run_successive_halving(scaled, budget(150, seed));
    CHECK(reached(a) == reached(b));
  }
}

TEST_CASE("hyperband brackets") {
  const auto b = hyperband_brackets(27, 3);
  REQUIRE(b.size() == 4);
  const std::vector<int> sizes{27, 12, 6, 4};
  const std::vector<int> starts{1, 3, 9, 27};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(b[i].n == sizes[i]);
    CHECK(b[i].rungs.front() == starts[i]);
    CHECK(b[i].rungs.back() == 27);
  }
  CHECK(b[0].rungs == std::vector<int>{1, 3, 9, 27});
  const auto one = hyperband_brackets(1, 3);
  REQUIRE(one.size() == 1);
  CHECK(one[0].n == 1);
  CHECK(one[0].rungs == std::vector<int>{1});
  for (const auto& br : hyperband_brackets(20, 3)) {
    CHECK(std::is_sorted(br.rungs.begin(), br.rungs.end()));
    CHECK(std::adjacent_find(br.rungs.begin(), br.rungs.end()) == br.rungs.end());
  }
}

TEST_CASE("hyperband step count equals the closed-form sum") {
  const auto t = generate_synthetic({.seed = 9, .n_configs = 200, .hp_dim = 2, .b_max = 27});
  // One full cycle of brackets, computed by hand from the schedule.
  int analytic = 0;
  for (const auto& br : hyperband_brackets(27, 3)) {
    int n = br.n;
    int prev = 0;
    for (std::size_t r = 0; r < br.rungs.size(); ++r) {
      analytic += n * (br.rungs[r] - prev);
      prev = br.rungs[r];
      n = std::max(1, n / 3);
    }
  }
  CHECK(analytic == 27 * 1 + 9 * 2 + 3 * 6 + 1 * 18 + 12 * 3 + 4 * 6 + 1 * 18 + 6 * 9 + 2 * 18 +
                        4 * 27);
  const auto traj = run_hyperband(t, budget(analytic));
  CHECK(traj.steps_consumed() == analytic);
  CHECK(reached(traj).size() == 27 + 12 + 6 + 4);
}

TEST_CASE("hyperband with b_max 1 is random search") {
  const auto t = constant_table(10, 1);
  const auto traj = run_hyperband(t, budget(6));
  CHECK(reached(traj).size() == 6);
}

TEST_CASE("asha promotion rules") {
  const auto t = generate_synthetic({.seed = 3, .n_configs = 40, .hp_dim = 2, .b_max = 9});
  // first tick samples a config at rung 0
  const auto first = run_asha(t, budget(1));
  CHECK(first.history.size() == 1);
  CHECK(first.history.back().budget == 1);
  // after three rung-0 completions, the best of them is promoted next
  const auto four = run_asha(t, budget(5));
  const auto& obs = four.history.observations();
  REQUIRE(obs.size() == 5);
  ConfigId best = obs[0].config_id;
  for (int i = 0; i < 3; ++i) {
    if (obs[i].loss < t.config(best).curve.at_step(1)) best = obs[i].config_id;
  }
  CHECK(obs[3].config_id == best);
  CHECK(obs[3].budget == 2);
  CHECK(obs[4].config_id == best);
  CHECK(obs[4].budget == 3);
  const auto again = run_asha(t, budget(100, 7));
  CHECK(again.history.observations() == run_asha(t, budget(100, 7)).history.observations());
}

TEST_CASE("no method exceeds the step budget") {
  const auto t = generate_synthetic({.seed = 6, .n_configs = 60, .hp_dim = 2, .b_max = 20});
  for (int steps : {1, 7, 19, 20, 21, 133, 400, 5000}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      for (const auto& traj : {run_random_search(t, budget(steps, seed)),
                               run_successive_halving(t, budget(steps, seed)),
                               run_hyperband(t, budget(steps, seed)), run_asha(t, budget(steps, seed))}) {
        CHECK(traj.steps_consumed() <= steps);
        CHECK(static_cast<int>(traj.history.size()) == traj.steps_consumed());
        CHECK((traj.steps_consumed() == steps || traj.terminated_early));
        for (std::size_t i = 1; i < traj.points.size(); ++i) {
          CHECK(traj.points[i].incumbent_loss <= traj.points[i - 1].incumbent_loss);
        }
      }
    }
  }
}
