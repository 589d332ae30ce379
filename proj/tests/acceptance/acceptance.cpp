// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "dpl/acquisition.hpp"
#include "dpl/baselines.hpp"
#include "dpl/benchmarks.hpp"
#include "dpl/curve_models.hpp"
#include "dpl/dpl_surrogate.hpp"
#include "dpl/forecast.hpp"
#include "dpl/hpo_loop.hpp"
#include "dpl/stats.hpp"
#include "oracles.hpp"

using namespace dpl;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Accumulates failures; the first few messages end up in the detail.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, summary + "; " + std::to_string(failures_) + " failure(s): " + messages_};
  }

 private:
  int failures_ = 0;
  std::string messages_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// 1 -------------------------------------------------------------------------
Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  SurrogateArchitecture arch;
  arch.hidden = {32, 32};
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    worst = std::max(worst, testing::dpl_gradient_check(seed, 4, arch, 8).max_relative_error);
  }
  const double elapsed = seconds_since(t0);
  Checker c;
  c.expect(worst < 1e-5, "max relative error " + fmt(worst));
  c.expect(elapsed < 10.0, "runtime " + fmt(elapsed) + " s");
  return c.outcome("max relative error " + fmt(worst) + " over 100 seeds in " + fmt(elapsed) + " s");
}

// 2 -------------------------------------------------------------------------
Outcome curve_identities() {
  Rng rng(2024);
  double worst = 0.0;
  const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (int i = 0; i < 10000; ++i) {
    ExtendedCoefficients c;
    c.alpha = uniform(rng, -1, 1);
    c.beta = uniform(rng, -2, 2);
    c.gamma = uniform(rng, 0, 3);
    c.d = uniform(rng, 0.01, 2);
    c.f = uniform(rng, 0.1, 3);
    const double b = uniform(rng, 1e-3, 1.0);
    c.e = 1.0;
    worst = std::max(worst, rel(eval_candidate2(c, b), eval_candidate1(c, b)));
    c.c = 0.0;
    worst = std::max(worst, rel(eval_broken_law(c, b), eval_power_law(c.power_law(), b)));

    std::array<double, kRawHeadOutputs> raw;
    for (double& r : raw) r = uniform(rng, -4, 4);
    const auto coeff = head_coefficients(raw);
    worst = std::max(worst, rel(head_predict(raw, 1.0), coeff.alpha + coeff.beta));
  }
  Checker c;
  c.expect(worst <= 1e-12, "worst relative deviation " + fmt(worst));
  return c.outcome("worst relative deviation " + fmt(worst) + " over 10000 draws");
}

// 3 -------------------------------------------------------------------------
Outcome posterior_statistics() {
  Checker c;
  const auto a = posterior_from_predictions(std::vector<double>{0.2, 0.4});
  c.expect(std::abs(a.mean - 0.3) <= 1e-12 && std::abs(a.variance - 0.01) <= 1e-12, "{0.2,0.4}");
  const auto b = posterior_from_predictions(std::vector<double>{1, 2, 3});
  c.expect(std::abs(b.mean - 2.0) <= 1e-12 && std::abs(b.variance - 2.0 / 3.0) <= 1e-12, "{1,2,3}");
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = uniform(rng, -10, 10);
    const std::vector<double> same(1 + i % 7, v);
    c.expect(posterior_from_predictions(same).variance == 0.0, "identical members");
  }
  return c.outcome("fixed examples exact to 1e-12, identical members give variance 0");
}

// 4 -------------------------------------------------------------------------
Outcome ei_analytics() {
  Checker c;
  const double at_best = expected_improvement(0.5, 1.0, 0.5);
  c.expect(std::abs(at_best - 1.0 / std::sqrt(2.0 * std::numbers::pi)) <= 1e-9,
           "EI at f_best = " + fmt(at_best));
  constexpr int n = 100;
  const double f_best = 0.0;
  std::vector<double> means(n), stds(n);
  for (int i = 0; i < n; ++i) {
    means[i] = -3.0 + 6.0 * i / (n - 1);
    stds[i] = 1e-3 + 3.0 * i / (n - 1);
  }
  std::vector<std::vector<double>> grid(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) grid[i][j] = expected_improvement(means[i], stds[j], f_best);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      c.expect(grid[i][j] >= 0.0, "negative EI");
      if (i > 0) c.expect(grid[i][j] <= grid[i - 1][j], "EI increases with mean");
      if (j > 0) c.expect(grid[i][j] >= grid[i][j - 1], "EI decreases with std");
    }
  }
  return c.outcome("EI(f_best, 1) = " + fmt(at_best) + ", 100x100 grid non-negative and monotone");
}

// 5 -------------------------------------------------------------------------
Outcome fit_recovery() {
  const auto t0 = Clock::now();
  const auto table = generate_synthetic({.seed = 5, .n_configs = 100, .hp_dim = 2, .b_max = 50});
  int good = 0;
  for (const auto& cfg : table.configs()) {
    const auto fit = fit_single_curve(std::span(cfg.curve.values).first(10), 50, Formulation::power_law);
    const double predicted = eval_power_law(fit.coefficients.power_law(), 1.0);
    if (std::abs(predicted - cfg.curve.final_value()) <= 1e-2) ++good;
  }
  const double elapsed = seconds_since(t0);
  Checker c;
  c.expect(good >= 95, std::to_string(good) + "/100 within 1e-2");
  c.expect(elapsed < 60.0, "runtime " + fmt(elapsed) + " s");
  return c.outcome(std::to_string(good) + "/100 final values within 1e-2 in " + fmt(elapsed) + " s");
}

// 6 -------------------------------------------------------------------------
double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome forecasting() {
  const auto t0 = Clock::now();
  const auto table = generate_synthetic({.seed = 6, .n_configs = 200, .hp_dim = 4, .b_max = 20});
  const auto pl = run_forecast_experiment(table, 0.5, ForecastModel::power_law, 0);
  std::vector<double> dpl, cond;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    dpl.push_back(run_forecast_experiment(table, 0.2, ForecastModel::dpl, seed).spearman);
    cond.push_back(run_forecast_experiment(table, 0.2, ForecastModel::conditioned_nn, seed).spearman);
  }
  const double md = median(dpl), mc = median(cond);
  Checker c;
  c.expect(pl.spearman >= 0.99, "PL Spearman " + fmt(pl.spearman));
  c.expect(md >= mc, "DPL median " + fmt(md) + " < CondNN median " + fmt(mc));
  return c.outcome("PL@0.5 Spearman " + fmt(pl.spearman) + "; median Spearman@0.2 DPL " + fmt(md) +
                   " vs CondNN " + fmt(mc) + " (" + fmt(seconds_since(t0)) + " s)");
}

// 7 and part of 8 -----------------------------------------------------------
std::vector<Trajectory> g_all_runs;  // every run, checked against its budget in 8

double final_nr(const Trajectory& t) { return t.points.back().normalized_regret; }

Outcome hpo_superiority() {
  const auto t0 = Clock::now();
  const auto table = generate_synthetic(
      {.seed = 0, .n_configs = 200, .hp_dim = 4, .b_max = 20, .noise_std = 0.01});
  int wins = 0;
  double sum_dpl = 0.0, sum_rs = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RunSettings s;
    s.seed = seed;
    const auto dpl = run_dpl(table, s);
    const auto rs = run_random_search(table, s);
    g_all_runs.push_back(dpl);
    g_all_runs.push_back(rs);
    const double a = final_nr(dpl), b = final_nr(rs);
    if (a <= b) ++wins;
    sum_dpl += a;
    sum_rs += b;
    per_seed += (per_seed.empty() ? "" : " ") + fmt(a) + "/" + fmt(b);
  }
  const double elapsed = seconds_since(t0);
  Checker c;
  c.expect(wins >= 8, std::to_string(wins) + "/10 paired wins");
  c.expect(sum_dpl < sum_rs, "mean DPL " + fmt(sum_dpl / 10) + " not below RS " + fmt(sum_rs / 10));
  c.expect(elapsed < 900.0, "runtime " + fmt(elapsed) + " s");
  return c.outcome("DPL<=RS on " + std::to_string(wins) + "/10 seeds, mean final normalized regret " +
                   fmt(sum_dpl / 10) + " vs " + fmt(sum_rs / 10) + " in " + fmt(elapsed) +
                   " s [dpl/rs: " + per_seed + "]");
}

// 8 -------------------------------------------------------------------------
Outcome scheduler_accounting() {
  Checker c;
  const auto sh_table = generate_synthetic({.seed = 8, .n_configs = 30, .hp_dim = 2, .b_max = 9});
  ShSchedule sched;
  sched.n_initial = 9;
  sched.brackets = 1;
  RunSettings big;
  big.total_step_budget = 1000;
  const auto sh = run_successive_halving(sh_table, big, sched);
  c.expect(sched.rungs(9) == std::vector<int>{1, 3, 9}, "SH rungs");
  c.expect(sh.steps_consumed() == 21, "SH consumed " + std::to_string(sh.steps_consumed()));

  // hand-derived: s_max = 3, n = ceil(4 * 3^s / (s + 1)) for s = 3..0
  const auto brackets = hyperband_brackets(27, 3);
  std::vector<int> sizes;
  for (const auto& b : brackets) sizes.push_back(b.n);
  c.expect(sizes == std::vector<int>{27, 12, 6, 4}, "HB bracket sizes");
  const std::vector<std::vector<int>> rungs{{1, 3, 9, 27}, {3, 9, 27}, {9, 27}, {27}};
  for (std::size_t i = 0; i < brackets.size() && i < rungs.size(); ++i) {
    c.expect(brackets[i].rungs == rungs[i], "HB rungs of bracket " + std::to_string(i));
  }

  const auto table = generate_synthetic({.seed = 81, .n_configs = 60, .hp_dim = 3, .b_max = 20});
  int runs = 0;
  for (int steps : {1, 7, 20, 21, 133, 400, 2000}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      RunSettings s;
      s.total_step_budget = steps;
      s.seed = seed;
      for (const auto& t : {run_random_search(table, s), run_successive_halving(table, s),
                            run_hyperband(table, s), run_asha(table, s)}) {
        c.expect(t.steps_consumed() <= steps, t.method + " overran " + std::to_string(steps));
        ++runs;
      }
    }
  }
  for (const auto& t : g_all_runs) {
    c.expect(t.steps_consumed() <= 20 * 20, t.method + " overran the HPO budget");
    ++runs;
  }
  return c.outcome("SH used " + std::to_string(sh.steps_consumed()) + " steps; HB sizes {27,12,6,4}; " +
                   std::to_string(runs) + " runs within budget");
}

// 9 -------------------------------------------------------------------------
Outcome regret_oracle() {
  Checker c;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto table = testing::random_table(seed, 3 + static_cast<int>(seed % 8), 1 + static_cast<int>(seed % 6));
    c.expect(oracle(table) == testing::brute_force_oracle(table), "oracle, table " + std::to_string(seed));
    Rng rng(derive_seed(seed, 9));
    History h;
    std::map<ConfigId, int> reached;
    for (int k = 0; k < 20; ++k) {
      const auto& cfg = table.configs()[uniform_index(rng, table.size())];
      int& b = reached[cfg.id];
      if (b == table.b_max()) continue;
      ++b;
      h.append({cfg.id, b, cfg.curve.at_step(static_cast<std::size_t>(b))});
      c.expect(incumbent_regret(h, table) == testing::brute_force_regret(h, table),
               "regret, table " + std::to_string(seed));
    }
  }
  return c.outcome("50 random tables match brute-force scans exactly");
}

// 10 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// All regular files under `dir`, relative path -> bytes.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

int shell(const std::string& cmd) { return std::system(cmd.c_str()); }

Outcome cli_determinism() {
  Checker c;
  const fs::path root = fs::temp_directory_path() / "dplhpo_acceptance_cli";
  const std::string cli = DPL_CLI_PATH;
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    // same directory both times: stdout echoes the output paths
    const fs::path dir = root;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string();
    const std::string bench = d + "/bench.json";
    const std::vector<std::pair<std::string, std::string>> commands{
        {"synth", cli + " synth --seed 3 --configs 25 --hp-dim 2 --b-max 8 --noise 0.02 --out " + bench +
                      " > " + d + "/synth.stdout"},
        {"run", cli + " run --benchmarks " + bench + " --methods dpl rs sh hb asha --seeds 0 1 --out " +
                    d + "/runs > " + d + "/run.stdout"},
        {"forecast", cli + " forecast --benchmark " + bench +
                         " --fractions 0.25 0.5 --models dpl pl condnn --seeds 0 --out " + d +
                         "/forecast.csv > " + d + "/forecast.stdout"},
        {"report", cli + " report --in " + d + "/runs --out " + d + "/report.csv > " + d +
                       "/report.stdout"},
    };
    for (const auto& [name, cmd] : commands) {
      c.expect(shell(cmd) == 0, name + " exited non-zero");
    }
    const auto snap = snapshot(dir);
    if (pass == 0) {
      first = snap;
    } else {
      c.expect(snap.size() == first.size(), "different file sets");
      for (const auto& [path, bytes] : snap) {
        const auto it = first.find(path);
        c.expect(it != first.end() && it->second == bytes, path + " differs");
      }
    }
  }
  const auto files = first.size();
  fs::remove_all(root);
  return c.outcome("synth/run/forecast/report re-run byte-identical over " + std::to_string(files) +
                   " output files");
}

// 11 ------------------------------------------------------------------------
Outcome min_smoothing() {
  Checker c;
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(1 + uniform_index(rng, 60));
    for (double& x : v) x = uniform(rng, -1, 2);
    const auto s = min_smooth(v);
    double running = std::numeric_limits<double>::infinity();
    bool prefix = s.size() == v.size();
    for (std::size_t k = 0; prefix && k < v.size(); ++k) {
      running = std::min(running, v[k]);
      prefix = s[k] == running;
    }
    c.expect(prefix, "not the prefix minimum");
    c.expect(min_smooth(s) == s, "not idempotent");
  }
  return c.outcome("1000 random curves: prefix minimum, idempotent");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"curve-model identities", curve_identities},
      {"posterior statistics", posterior_statistics},
      {"EI analytics", ei_analytics},
      {"per-curve fit recovery", fit_recovery},
      {"forecasting ranks", forecasting},
      {"HPO vs random search", hpo_superiority},
      {"scheduler accounting", scheduler_accounting},
      {"regret and oracle", regret_oracle},
      {"CLI determinism", cli_determinism},
      {"min-smoothing", min_smoothing},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
