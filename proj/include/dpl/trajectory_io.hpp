#pragma once

// Trajectory CSV files and their aggregation across seeds and datasets.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dpl/hpo_loop.hpp"

namespace dpl {

inline constexpr std::string_view kTrajectoryHeader =
    "seed,method,dataset,steps,wall_time_s,incumbent_loss,regret,normalized_regret";

/// Shortest text that parses back to the same double ("nan", "inf" for
/// non-finite values).
std::string format_double(double value);
/// Throws std::invalid_argument unless the whole field is a number.
double parse_double(std::string_view text);

/// Splits one CSV record; double-quoted fields may contain commas and "".
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_field(std::string_view value);

struct TrajectoryRow {
  std::uint64_t seed = 0;
  std::string method;
  std::string dataset;
  TrajectoryPoint point;
};

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);

/// Throws DataError when the header or a row is malformed.
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in, const std::string& source = {});
std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path);

/// Regular files under `dir` whose first line is the trajectory header,
/// sorted by path.
std::vector<std::filesystem::path> find_trajectory_files(const std::filesystem::path& dir);

struct AggregateRow {
  std::string method;
  int steps = 0;
  double mean_normalized_regret = 0.0;
  double stderr_normalized_regret = 0.0;
  int runs = 0;               // trajectories contributing at this step
  double mean_relative_time = 0.0;  // wall time over the same run's RS total
};

struct Aggregate {
  std::vector<AggregateRow> rows;  // grouped by method (sorted), then steps
  bool has_time = false;
};

/// Per method, every trajectory is read as a step function (last value
/// carried forward) on the union of its method's step counts. Normalized
/// regret is averaged over seeds within a dataset, then over datasets. The
/// standard error is taken over dataset means when there are two or more
/// datasets, otherwise over seeds. A run contributes only from its first
/// recorded step on.
Aggregate aggregate_trajectories(const std::vector<TrajectoryRow>& rows);

void write_aggregate_csv(std::ostream& out, const Aggregate& aggregate);
void write_aggregate_csv(const std::filesystem::path& path, const Aggregate& aggregate);

/// find_trajectory_files + aggregate + write. Throws DataError when the
/// directory holds no trajectory file.
Aggregate report_directory(const std::filesystem::path& dir, const std::filesystem::path& out);

}  // namespace dpl
