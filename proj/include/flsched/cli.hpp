#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace flsched {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitIo = 4;

struct CliInvocation {
  std::string subcommand;  // run, sweep, plot, validate-config
  std::string config_path;  // optional for run/sweep/validate-config; metrics CSV for plot
  std::string output;       // output directory (run/sweep) or SVG path (plot)
  std::vector<std::string> overrides;  // dotted.key=value
  std::size_t threads = 0;             // 0 = auto
};

int execute(const CliInvocation& inv, std::ostream& out, std::ostream& err);

// Parses argv (CLI11) and FLSCHED_THREADS, then executes.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace flsched
