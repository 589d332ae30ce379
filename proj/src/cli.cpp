#include "dpl/cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "dpl/baselines.hpp"
#include "dpl/benchmarks.hpp"
#include "dpl/errors.hpp"
#include "dpl/forecast.hpp"
#include "dpl/hpo_loop.hpp"
#include "dpl/trajectory_io.hpp"

namespace dpl {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kMethods{"dpl", "rs", "sh", "hb", "asha"};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string file_token(std::string text) {
  for (char& ch : text) {
    const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.';
    if (!keep) ch = '_';
  }
  return text;
}

Trajectory run_method(const std::string& method, const BenchmarkTable& table,
                      const RunSettings& settings) {
  if (method == "dpl") return run_dpl(table, settings);
  if (method == "rs") return run_random_search(table, settings);
  if (method == "sh") return run_successive_halving(table, settings);
  if (method == "hb") return run_hyperband(table, settings);
  if (method == "asha") return run_asha(table, settings);
  throw UsageError("unknown method '" + method + "'");
}

/// Runs task(i) for i in [0, n) on `jobs` threads; rethrows the first error.
template <typename Task>
void parallel_for(std::size_t n, int jobs, Task task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

struct RunOptions {
  std::vector<std::string> benchmarks;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds{0};
  int budget_multiplier = 20;
  std::string out;
  int jobs = 1;
  bool measure_time = false;
};

int cmd_run(const RunOptions& opt, std::ostream& out) {
  for (const auto& m : opt.methods) {
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) {
      throw UsageError("unknown method '" + m + "' (expected dpl, rs, sh, hb or asha)");
    }
  }
  std::vector<BenchmarkTable> tables;
  std::vector<std::string> tokens;
  for (const auto& path : opt.benchmarks) {
    tables.push_back(load_benchmark(path));
    tokens.push_back(file_token(fs::path(path).stem().string()));
  }
  fs::create_directories(opt.out);

  struct Task {
    std::size_t table;
    std::string method;
    std::uint64_t seed;
    fs::path file;
  };
  std::vector<Task> tasks;
  for (std::size_t b = 0; b < tables.size(); ++b) {
    for (const auto& m : opt.methods) {
      for (auto seed : opt.seeds) {
        const auto name = m + "_" + tokens[b] + "_seed" + std::to_string(seed) + ".csv";
        tasks.push_back({b, m, seed, fs::path(opt.out) / name});
      }
    }
  }

  parallel_for(tasks.size(), opt.jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    const BenchmarkTable& table = tables[t.table];
    RunSettings settings;
    settings.seed = t.seed;
    settings.total_step_budget = opt.budget_multiplier * table.b_max();
    settings.measure_time = opt.measure_time;
    write_trajectory_csv(t.file, run_method(t.method, table, settings));
  });

  std::vector<TrajectoryRow> rows;
  for (const auto& t : tasks) {
    auto part = read_trajectory_csv(t.file);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const fs::path aggregate_path = fs::path(opt.out) / "aggregate.csv";
  write_aggregate_csv(aggregate_path, aggregate_trajectories(rows));
  out << "wrote " << tasks.size() << " trajectories and " << aggregate_path.string() << '\n';
  return kExitOk;
}

struct ForecastOptions {
  std::string benchmark;
  std::vector<double> fractions;
  std::vector<std::string> models{"dpl", "pl", "condnn"};
  std::vector<std::uint64_t> seeds{0};
  std::string out;
  int jobs = 1;
};

int cmd_forecast(const ForecastOptions& opt, std::ostream& out) {
  for (double f : opt.fractions) {
    if (!(f > 0.0 && f < 1.0)) throw UsageError("fractions must lie in (0, 1)");
  }
  std::vector<ForecastModel> models;
  for (const auto& m : opt.models) {
    try {
      models.push_back(parse_forecast_model(m));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const BenchmarkTable table = load_benchmark(opt.benchmark);

  struct Job {
    ForecastModel model;
    double fraction;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto m : models) {
    for (double f : opt.fractions) {
      for (auto s : opt.seeds) jobs.push_back({m, f, s});
    }
  }
  std::vector<ForecastReport> reports(jobs.size());
  parallel_for(jobs.size(), opt.jobs, [&](std::size_t i) {
    reports[i] = run_forecast_experiment(table, jobs[i].fraction, jobs[i].model, jobs[i].seed);
  });

  std::ofstream file(opt.out, std::ios::binary);
  if (!file) throw DataError(opt.out, "cannot write forecast report");
  write_forecast_csv(file, reports);
  if (!file) throw DataError(opt.out, "write failed");
  out << "wrote " << reports.size() << " forecast rows to " << opt.out << '\n';
  return kExitOk;
}

int cmd_synth(const SyntheticSpec& spec, const std::string& path, std::ostream& out) {
  const BenchmarkTable table = generate_synthetic(spec);
  save_benchmark(table, path);
  out << "oracle " << format_double(oracle(table)) << '\n';
  return kExitOk;
}

int cmd_report(const std::string& in, const std::string& path, std::ostream& out) {
  const Aggregate agg = report_directory(in, path);
  out << "wrote " << agg.rows.size() << " aggregate rows to " << path << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-fidelity hyperparameter optimization with Deep Power Law ensembles",
               "dplhpo"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run HPO methods on benchmarks and aggregate regret");
  run_cmd->add_option("--benchmarks", run.benchmarks, "Benchmark JSON files")->required();
  run_cmd->add_option("--methods", run.methods, "Methods: dpl rs sh hb asha")->required();
  run_cmd->add_option("--seeds", run.seeds, "Seeds")->capture_default_str();
  run_cmd->add_option("--budget-multiplier", run.budget_multiplier,
                      "Step budget in multiples of b_max")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--jobs", run.jobs, "Parallel runs")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--measure-time", run.measure_time, "Record wall-clock time per point");

  ForecastOptions fc;
  auto* fc_cmd = app.add_subcommand("forecast", "Learning-curve forecasting experiment");
  fc_cmd->add_option("--benchmark", fc.benchmark, "Benchmark JSON file")->required();
  fc_cmd->add_option("--fractions", fc.fractions, "Observed curve fractions in (0, 1)")
      ->required();
  fc_cmd->add_option("--models", fc.models, "Models: dpl pl condnn")->capture_default_str();
  fc_cmd->add_option("--seeds", fc.seeds, "Seeds")->capture_default_str();
  fc_cmd->add_option("--out", fc.out, "Output CSV")->required();
  fc_cmd->add_option("--jobs", fc.jobs, "Parallel experiments")->check(CLI::PositiveNumber);

  SyntheticSpec spec;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic power-law benchmark");
  synth_cmd->add_option("--seed", spec.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--configs", spec.n_configs, "Number of configurations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--hp-dim", spec.hp_dim, "Hyperparameter dimensions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--b-max", spec.b_max, "Curve length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--noise", spec.noise_std, "Gaussian noise std")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output JSON file")->required();

  std::string report_in, report_out;
  auto* report_cmd = app.add_subcommand("report", "Aggregate trajectory CSVs in a directory");
  report_cmd->add_option("--in", report_in, "Directory of trajectory CSVs")->required();
  report_cmd->add_option("--out", report_out, "Output CSV")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*fc_cmd) return cmd_forecast(fc, out);
    if (*synth_cmd) return cmd_synth(spec, synth_out, out);
    if (*report_cmd) return cmd_report(report_in, report_out, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error";
    if (!e.path().empty()) err << " at " << e.path();
    err << ": " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace dpl
