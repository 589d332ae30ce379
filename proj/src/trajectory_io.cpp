#include "dpl/trajectory_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dpl/errors.hpp"
#include "dpl/stats.hpp"

namespace dpl {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return {buf, end};
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  return fields;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char ch : value) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << kTrajectoryHeader << '\n';
  const std::string prefix = std::to_string(trajectory.seed) + "," + csv_field(trajectory.method) +
                             "," + csv_field(trajectory.dataset) + ",";
  for (const auto& p : trajectory.points) {
    out << prefix << p.steps << ',' << format_double(p.wall_time_s) << ','
        << format_double(p.incumbent_loss) << ',' << format_double(p.regret) << ','
        << format_double(p.normalized_regret) << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trajectory_csv(out, trajectory);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source, "empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) throw DataError(source, "unexpected trajectory header");

  std::vector<TrajectoryRow> rows;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty() || line == "\r") continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw DataError(where, "expected 8 fields, got " + std::to_string(f.size()));
    try {
      TrajectoryRow row;
      std::size_t used = 0;
      row.seed = std::stoull(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument("seed");
      row.method = f[1];
      row.dataset = f[2];
      row.point.steps = std::stoi(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument("steps");
      row.point.wall_time_s = parse_double(f[4]);
      row.point.incumbent_loss = parse_double(f[5]);
      row.point.regret = parse_double(f[6]);
      row.point.normalized_regret = parse_double(f[7]);
      rows.push_back(std::move(row));
    } catch (const std::logic_error& e) {
      throw DataError(where, std::string("malformed row: ") + e.what());
    }
  }
  return rows;
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string(), "cannot open trajectory file");
  return read_trajectory_csv(in, path.string());
}

std::vector<std::filesystem::path> find_trajectory_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw DataError(dir.string(), "not a directory");
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::string first;
    if (!std::getline(in, first)) continue;
    if (!first.empty() && first.back() == '\r') first.pop_back();
    if (first == kTrajectoryHeader) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

struct Run {
  std::vector<int> steps;
  std::vector<double> regret;
  std::vector<double> time;
};

// Index of the last point at or before `step`, or -1.
std::ptrdiff_t lvcf(const std::vector<int>& steps, int step) {
  const auto it = std::upper_bound(steps.begin(), steps.end(), step);
  return static_cast<std::ptrdiff_t>(it - steps.begin()) - 1;
}

}  // namespace

Aggregate aggregate_trajectories(const std::vector<TrajectoryRow>& rows) {
  // method -> dataset -> seed -> run
  std::map<std::string, std::map<std::string, std::map<std::uint64_t, Run>>> runs;
  Aggregate agg;
  for (const auto& r : rows) {
    Run& run = runs[r.method][r.dataset][r.seed];
    if (!run.steps.empty() && r.point.steps <= run.steps.back()) {
      throw DataError(r.method + "/" + r.dataset + "/" + std::to_string(r.seed),
                      "steps must be strictly increasing within a trajectory");
    }
    run.steps.push_back(r.point.steps);
    run.regret.push_back(r.point.normalized_regret);
    run.time.push_back(r.point.wall_time_s);
    if (r.point.wall_time_s > 0.0) agg.has_time = true;
  }

  // Random Search total time per (dataset, seed), for the relative-time column.
  std::map<std::pair<std::string, std::uint64_t>, double> rs_time;
  if (auto rs = runs.find("rs"); agg.has_time && rs != runs.end()) {
    for (const auto& [dataset, seeds] : rs->second) {
      for (const auto& [seed, run] : seeds) rs_time[{dataset, seed}] = run.time.back();
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (const auto& [method, datasets] : runs) {
    std::set<int> grid;
    for (const auto& [dataset, seeds] : datasets) {
      for (const auto& [seed, run] : seeds) grid.insert(run.steps.begin(), run.steps.end());
    }
    for (int step : grid) {
      std::vector<double> dataset_means, dataset_times, seed_values;
      int contributing = 0;
      for (const auto& [dataset, seeds] : datasets) {
        std::vector<double> values, times;
        for (const auto& [seed, run] : seeds) {
          const auto i = lvcf(run.steps, step);
          if (i < 0) continue;
          values.push_back(run.regret[static_cast<std::size_t>(i)]);
          auto rs = rs_time.find({dataset, seed});
          times.push_back(rs != rs_time.end() && rs->second > 0.0
                              ? run.time[static_cast<std::size_t>(i)] / rs->second
                              : nan);
        }
        if (values.empty()) continue;
        contributing += static_cast<int>(values.size());
        dataset_means.push_back(mean(values));
        dataset_times.push_back(mean(times));
        seed_values = values;  // used only when a single dataset contributes
      }
      if (dataset_means.empty()) continue;
      AggregateRow row;
      row.method = method;
      row.steps = step;
      row.mean_normalized_regret = mean(dataset_means);
      row.stderr_normalized_regret =
          dataset_means.size() >= 2 ? standard_error(dataset_means) : standard_error(seed_values);
      row.runs = contributing;
      row.mean_relative_time = agg.has_time ? mean(dataset_times) : 0.0;
      agg.rows.push_back(std::move(row));
    }
  }
  return agg;
}

void write_aggregate_csv(std::ostream& out, const Aggregate& aggregate) {
  out << "method,steps,mean_normalized_regret,stderr_normalized_regret,runs";
  if (aggregate.has_time) out << ",mean_relative_time";
  out << '\n';
  for (const auto& r : aggregate.rows) {
    out << csv_field(r.method) << ',' << r.steps << ',' << format_double(r.mean_normalized_regret)
        << ',' << format_double(r.stderr_normalized_regret) << ',' << r.runs;
    if (aggregate.has_time) out << ',' << format_double(r.mean_relative_time);
    out << '\n';
  }
}

void write_aggregate_csv(const std::filesystem::path& path, const Aggregate& aggregate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_aggregate_csv(out, aggregate);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Aggregate report_directory(const std::filesystem::path& dir, const std::filesystem::path& out) {
  const auto files = find_trajectory_files(dir);
  if (files.empty()) throw DataError(dir.string(), "no trajectory CSV files found");
  std::vector<TrajectoryRow> rows;
  for (const auto& f : files) {
    auto part = read_trajectory_csv(f);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }
  Aggregate agg = aggregate_trajectories(rows);
  write_aggregate_csv(out, agg);
  return agg;
}

}  // namespace dpl
