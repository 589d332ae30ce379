#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dpl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInternal = 4;

/// Entry point of the `dplhpo` tool; `args` excludes the program name.
/// Subcommands: run, forecast, synth, report.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dpl
