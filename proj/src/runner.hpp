#pragma once

#include <string>

#include "config.hpp"
#include "plap/flow.hpp"
#include "plap/grid.hpp"

namespace plap {

struct CliOptions {
  std::string out_override;  // empty: use the config's out_dir
  bool quiet = false;
  int threads = 1;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitVerdict = 3;

Grid build_grid(const RunConfig& cfg);
Field build_datum(const DatumRule& rule, const Grid& g);
Forcing build_forcing(const ForcingRule& rule, const Grid& g);

/// Dispatches one parsed run; writes all artifacts under the output
/// directory and returns the process exit code.
int run_command(const RunConfig& cfg, const CliOptions& opts);

}  // namespace plap
