#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plap/grid.hpp"

namespace plap {

enum class Command { Evolve, Continuity, Mosco, Diagonal };

const char* to_string(Command c);

/// Thrown on any config defect; the message names the offending key and line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DatumRule {
  enum class Kind { Zero, Constant, Sine, Indicator, File };
  Kind kind = Kind::Zero;
  double value = 0.0;    // constant
  long mode = 1;         // sine
  double lo = 0.0;       // indicator, per axis
  double hi = 1.0;
  std::string file;
};

struct ForcingRule {
  enum class Kind { Zero, Separable, File };
  enum class Coeff { Constant, Sin, Exp };
  Kind kind = Kind::Zero;
  DatumRule profile;
  Coeff coeff = Coeff::Constant;
  double coeff_value = 1.0;  // constant factor
  double omega = 1.0;        // sin(omega t)
  double rate = 1.0;         // exp(-rate t)
  std::string file;
};

enum class PerRunRule { Fixed, Perturbed };

struct RunConfig {
  Command command = Command::Evolve;

  // grid
  int dim = 1;
  long cells_x = 0;
  long cells_y = 0;
  double length_x = 1.0;
  double length_y = 1.0;
  BoundaryMode bc = BoundaryMode::Dirichlet;

  // energy + time + solver
  double p = 2.0;
  double horizon = 1.0;
  long steps = 1;
  double gap_tol = 1e-10;
  long max_iters = 20000;
  double primal_step = 0.0;
  double dual_step = 0.0;
  double theta = 1.0;

  // data
  DatumRule x0;
  ForcingRule forcing;

  // continuity / mosco
  double p0 = 1.0;
  std::vector<double> p_seq;
  double tol_abs = 1e-2;
  double ratio_min = 0.0;
  PerRunRule x0_rule = PerRunRule::Fixed;
  double x0_perturb = 0.0;
  PerRunRule forcing_rule = PerRunRule::Fixed;
  double forcing_perturb = 0.0;
  long m1_samples = 12;
  double m1_perturb = 0.1;

  // diagonal
  enum class TableKind { Harmonic, Constant, Energy, File };
  TableKind table = TableKind::Harmonic;
  long table_rows = 20;
  long table_cols = 20;
  double table_value = 0.0;
  double eps_scale = 1.0;
  std::string table_file;

  // misc
  std::uint64_t seed = 0;
  std::string out_dir = "out";
};

/// Parses the line-oriented `key = value` dialect (UTF-8, `#` comments) for
/// the given command. Unknown keys, duplicates, malformed numbers, and
/// out-of-range values are all fatal, with the key and line number in the
/// message.
RunConfig parse_config(Command command, const std::string& text);

/// Canonical echo of every key the command consumes, in the config dialect;
/// feeding it back to parse_config reproduces the run.
std::string canonical_config(const RunConfig& cfg);

}  // namespace plap
