#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "plap/field_io.hpp"

namespace plap {

const char* to_string(Command c) {
  switch (c) {
    case Command::Evolve: return "evolve";
    case Command::Continuity: return "continuity";
    case Command::Mosco: return "mosco";
    case Command::Diagonal: return "diagonal";
  }
  return "?";
}

namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
  mutable bool used = false;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

class KeyMap {
 public:
  explicit KeyMap(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(line_no) +
                          ": expected `key = value`");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(line_no) + ": empty key");
      if (value.empty())
        throw ConfigError("line " + std::to_string(line_no) +
                          ": empty value for key '" + key + "'");
      if (entries_.count(key))
        throw ConfigError("line " + std::to_string(line_no) +
                          ": duplicate key '" + key + "'");
      entries_[key] = Entry{value, line_no, false};
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  const Entry& get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw ConfigError("missing required key '" + key + "'");
    it->second.used = true;
    return it->second;
  }

  std::string get_string(const std::string& key) const {
    return get(key).value;
  }

  std::string get_string_or(const std::string& key,
                            const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_real(const std::string& key) const {
    const Entry& e = get(key);
    return parse_real(key, e);
  }

  double get_real_or(const std::string& key, double fallback) const {
    return has(key) ? get_real(key) : fallback;
  }

  long get_int(const std::string& key) const {
    const Entry& e = get(key);
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(e.value, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != e.value.size())
      throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                        "': malformed integer '" + e.value + "'");
    return v;
  }

  long get_int_or(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::vector<double> get_real_list(const std::string& key) const {
    const Entry& e = get(key);
    std::vector<double> out;
    std::string token;
    std::istringstream ss(e.value);
    while (std::getline(ss, token, ',')) {
      token = trim(token);
      if (token.empty())
        throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                          "': empty list entry");
      out.push_back(parse_real(key, Entry{token, e.line, false}));
    }
    if (out.empty())
      throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                        "': empty list");
    return out;
  }

  void fail(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    const std::string where =
        it == entries_.end() ? "" : "line " + std::to_string(it->second.line) + ": ";
    throw ConfigError(where + msg);
  }

  void reject_unused() const {
    const Entry* worst = nullptr;
    std::string worst_key;
    for (const auto& [key, e] : entries_) {
      if (!e.used && (!worst || e.line < worst->line)) {
        worst = &e;
        worst_key = key;
      }
    }
    if (worst)
      throw ConfigError("line " + std::to_string(worst->line) +
                        ": unknown key '" + worst_key + "'");
  }

 private:
  static double parse_real(const std::string& key, const Entry& e) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(e.value, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != e.value.size() || !std::isfinite(v))
      throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                        "': malformed number '" + e.value + "'");
    return v;
  }

  std::map<std::string, Entry> entries_;
};

void parse_grid(const KeyMap& keys, RunConfig& cfg) {
  cfg.dim = static_cast<int>(keys.get_int_or("dim", 1));
  if (cfg.dim != 1 && cfg.dim != 2) keys.fail("dim", "dim must be 1 or 2");
  if (cfg.dim == 1) {
    cfg.cells_x = keys.get_int("cells");
    cfg.length_x = keys.get_real_or("length", 1.0);
    if (cfg.cells_x < 1) keys.fail("cells", "cells must be >= 1");
    if (cfg.length_x <= 0) keys.fail("length", "length must be > 0");
  } else {
    cfg.cells_x = keys.get_int("cells_x");
    cfg.cells_y = keys.get_int("cells_y");
    cfg.length_x = keys.get_real_or("length_x", 1.0);
    cfg.length_y = keys.get_real_or("length_y", 1.0);
    if (cfg.cells_x < 1) keys.fail("cells_x", "cells_x must be >= 1");
    if (cfg.cells_y < 1) keys.fail("cells_y", "cells_y must be >= 1");
    if (cfg.length_x <= 0) keys.fail("length_x", "length_x must be > 0");
    if (cfg.length_y <= 0) keys.fail("length_y", "length_y must be > 0");
  }
  const std::string bc = keys.get_string("bc");
  if (bc == "dirichlet")
    cfg.bc = BoundaryMode::Dirichlet;
  else if (bc == "neumann")
    cfg.bc = BoundaryMode::Neumann;
  else
    keys.fail("bc", "bc must be dirichlet or neumann");
}

void parse_solver(const KeyMap& keys, RunConfig& cfg) {
  cfg.gap_tol = keys.get_real_or("gap_tol", 1e-10);
  if (cfg.gap_tol <= 0) keys.fail("gap_tol", "gap_tol must be > 0");
  cfg.max_iters = keys.get_int_or("max_iters", 20000);
  if (cfg.max_iters < 1) keys.fail("max_iters", "max_iters must be >= 1");
  cfg.primal_step = keys.get_real_or("primal_step", 0.0);
  cfg.dual_step = keys.get_real_or("dual_step", 0.0);
  if (cfg.primal_step < 0) keys.fail("primal_step", "primal_step must be >= 0");
  if (cfg.dual_step < 0) keys.fail("dual_step", "dual_step must be >= 0");
  cfg.theta = keys.get_real_or("theta", 1.0);
}

void parse_time(const KeyMap& keys, RunConfig& cfg) {
  cfg.horizon = keys.get_real("T");
  if (cfg.horizon <= 0) keys.fail("T", "T must be > 0");
  cfg.steps = keys.get_int("steps");
  if (cfg.steps < 1) keys.fail("steps", "steps must be >= 1");
  if (cfg.horizon / static_cast<double>(cfg.steps) <= 0)
    keys.fail("steps", "tau must be > 0");
}

DatumRule parse_datum(const KeyMap& keys, const std::string& prefix) {
  DatumRule rule;
  const std::string kind = keys.get_string_or(prefix, "zero");
  if (kind == "zero") {
    rule.kind = DatumRule::Kind::Zero;
  } else if (kind == "constant") {
    rule.kind = DatumRule::Kind::Constant;
    rule.value = keys.get_real(prefix + "_value");
  } else if (kind == "sine") {
    rule.kind = DatumRule::Kind::Sine;
    rule.mode = keys.get_int_or(prefix + "_mode", 1);
    if (rule.mode < 1) keys.fail(prefix + "_mode", prefix + "_mode must be >= 1");
  } else if (kind == "indicator") {
    rule.kind = DatumRule::Kind::Indicator;
    rule.lo = keys.get_real(prefix + "_lo");
    rule.hi = keys.get_real(prefix + "_hi");
    if (!(rule.lo < rule.hi))
      keys.fail(prefix + "_lo", prefix + " indicator needs lo < hi");
  } else if (kind == "file") {
    rule.kind = DatumRule::Kind::File;
    rule.file = keys.get_string(prefix + "_file");
  } else {
    keys.fail(prefix,
              prefix + " must be zero, constant, sine, indicator, or file");
  }
  return rule;
}

ForcingRule parse_forcing(const KeyMap& keys) {
  ForcingRule rule;
  const std::string kind = keys.get_string_or("forcing", "zero");
  if (kind == "zero") {
    rule.kind = ForcingRule::Kind::Zero;
  } else if (kind == "separable") {
    rule.kind = ForcingRule::Kind::Separable;
    rule.profile = parse_datum(keys, "forcing_profile");
    const std::string coeff = keys.get_string_or("forcing_coeff", "constant");
    if (coeff == "constant") {
      rule.coeff = ForcingRule::Coeff::Constant;
      rule.coeff_value = keys.get_real_or("forcing_coeff_value", 1.0);
    } else if (coeff == "sin") {
      rule.coeff = ForcingRule::Coeff::Sin;
      rule.omega = keys.get_real("forcing_coeff_omega");
    } else if (coeff == "exp") {
      rule.coeff = ForcingRule::Coeff::Exp;
      rule.rate = keys.get_real("forcing_coeff_rate");
    } else {
      keys.fail("forcing_coeff", "forcing_coeff must be constant, sin, or exp");
    }
  } else if (kind == "file") {
    rule.kind = ForcingRule::Kind::File;
    rule.file = keys.get_string("forcing_file");
  } else {
    keys.fail("forcing", "forcing must be zero, separable, or file");
  }
  return rule;
}

PerRunRule parse_per_run_rule(const KeyMap& keys, const std::string& key) {
  const std::string rule = keys.get_string_or(key, "fixed");
  if (rule == "fixed") return PerRunRule::Fixed;
  if (rule == "perturbed") return PerRunRule::Perturbed;
  keys.fail(key, key + " must be fixed or perturbed");
  return PerRunRule::Fixed;
}

void parse_p_sequence(const KeyMap& keys, RunConfig& cfg) {
  cfg.p0 = keys.get_real("p0");
  if (cfg.p0 < 1) keys.fail("p0", "p0 must be >= 1");
  cfg.p_seq = keys.get_real_list("p_seq");
  for (double p : cfg.p_seq)
    if (p <= 1) keys.fail("p_seq", "p_seq entries must be > 1");
  for (std::size_t n = 1; n < cfg.p_seq.size(); ++n)
    if (std::abs(cfg.p_seq[n] - cfg.p0) > std::abs(cfg.p_seq[n - 1] - cfg.p0))
      keys.fail("p_seq", "p_seq must be monotone toward p0");
}

}  // namespace

RunConfig parse_config(Command command, const std::string& text) {
  const KeyMap keys(text);
  RunConfig cfg;
  cfg.command = command;
  cfg.seed = static_cast<std::uint64_t>(keys.get_int_or("seed", 0));
  cfg.out_dir = keys.get_string_or("out_dir", "out");

  switch (command) {
    case Command::Evolve: {
      parse_grid(keys, cfg);
      parse_time(keys, cfg);
      parse_solver(keys, cfg);
      cfg.p = keys.get_real("p");
      if (cfg.p < 1) keys.fail("p", "p must be >= 1");
      cfg.x0 = parse_datum(keys, "x0");
      cfg.forcing = parse_forcing(keys);
      break;
    }
    case Command::Continuity: {
      parse_grid(keys, cfg);
      parse_time(keys, cfg);
      parse_solver(keys, cfg);
      parse_p_sequence(keys, cfg);
      cfg.x0 = parse_datum(keys, "x0");
      cfg.forcing = parse_forcing(keys);
      cfg.tol_abs = keys.get_real_or("tol_abs", 1e-2);
      if (cfg.tol_abs < 0) keys.fail("tol_abs", "tol_abs must be >= 0");
      cfg.ratio_min = keys.get_real_or("ratio_min", 0.0);
      cfg.x0_rule = parse_per_run_rule(keys, "x0_rule");
      cfg.x0_perturb = keys.get_real_or("x0_perturb", 0.1);
      if (cfg.x0_perturb < 0) keys.fail("x0_perturb", "x0_perturb must be >= 0");
      cfg.forcing_rule = parse_per_run_rule(keys, "forcing_rule");
      cfg.forcing_perturb = keys.get_real_or("forcing_perturb", 0.1);
      if (cfg.forcing_perturb < 0)
        keys.fail("forcing_perturb", "forcing_perturb must be >= 0");
      break;
    }
    case Command::Mosco: {
      parse_grid(keys, cfg);
      parse_p_sequence(keys, cfg);
      cfg.x0 = parse_datum(keys, "x0");
      cfg.m1_samples = keys.get_int_or("m1_samples", 12);
      if (cfg.m1_samples < 4) keys.fail("m1_samples", "m1_samples must be >= 4");
      cfg.m1_perturb = keys.get_real_or("m1_perturb", 0.1);
      if (cfg.m1_perturb < 0) keys.fail("m1_perturb", "m1_perturb must be >= 0");
      break;
    }
    case Command::Diagonal: {
      const std::string table = keys.get_string_or("table", "harmonic");
      if (table == "harmonic") {
        cfg.table = RunConfig::TableKind::Harmonic;
      } else if (table == "constant") {
        cfg.table = RunConfig::TableKind::Constant;
        cfg.table_value = keys.get_real("table_value");
      } else if (table == "energy") {
        cfg.table = RunConfig::TableKind::Energy;
        parse_grid(keys, cfg);
        parse_p_sequence(keys, cfg);
        cfg.x0 = parse_datum(keys, "x0");
      } else if (table == "file") {
        cfg.table = RunConfig::TableKind::File;
        cfg.table_file = keys.get_string("table_file");
      } else {
        keys.fail("table", "table must be harmonic, constant, energy, or file");
      }
      if (cfg.table != RunConfig::TableKind::Energy &&
          cfg.table != RunConfig::TableKind::File) {
        cfg.table_rows = keys.get_int_or("rows", 20);
        cfg.table_cols = keys.get_int_or("cols", 20);
        if (cfg.table_rows < 2) keys.fail("rows", "rows must be >= 2");
        if (cfg.table_cols < 2) keys.fail("cols", "cols must be >= 2");
      }
      cfg.eps_scale = keys.get_real_or("eps_scale", 1.0);
      if (cfg.eps_scale <= 0) keys.fail("eps_scale", "eps_scale must be > 0");
      break;
    }
  }
  keys.reject_unused();
  return cfg;
}

namespace {

void echo_datum(std::ostringstream& out, const std::string& prefix,
                const DatumRule& rule) {
  switch (rule.kind) {
    case DatumRule::Kind::Zero:
      out << prefix << " = zero\n";
      break;
    case DatumRule::Kind::Constant:
      out << prefix << " = constant\n"
          << prefix << "_value = " << format_real(rule.value) << '\n';
      break;
    case DatumRule::Kind::Sine:
      out << prefix << " = sine\n" << prefix << "_mode = " << rule.mode << '\n';
      break;
    case DatumRule::Kind::Indicator:
      out << prefix << " = indicator\n"
          << prefix << "_lo = " << format_real(rule.lo) << '\n'
          << prefix << "_hi = " << format_real(rule.hi) << '\n';
      break;
    case DatumRule::Kind::File:
      out << prefix << " = file\n" << prefix << "_file = " << rule.file << '\n';
      break;
  }
}

void echo_forcing(std::ostringstream& out, const ForcingRule& rule) {
  switch (rule.kind) {
    case ForcingRule::Kind::Zero:
      out << "forcing = zero\n";
      break;
    case ForcingRule::Kind::Separable:
      out << "forcing = separable\n";
      echo_datum(out, "forcing_profile", rule.profile);
      switch (rule.coeff) {
        case ForcingRule::Coeff::Constant:
          out << "forcing_coeff = constant\nforcing_coeff_value = "
              << format_real(rule.coeff_value) << '\n';
          break;
        case ForcingRule::Coeff::Sin:
          out << "forcing_coeff = sin\nforcing_coeff_omega = "
              << format_real(rule.omega) << '\n';
          break;
        case ForcingRule::Coeff::Exp:
          out << "forcing_coeff = exp\nforcing_coeff_rate = "
              << format_real(rule.rate) << '\n';
          break;
      }
      break;
    case ForcingRule::Kind::File:
      out << "forcing = file\nforcing_file = " << rule.file << '\n';
      break;
  }
}

void echo_grid(std::ostringstream& out, const RunConfig& cfg) {
  out << "dim = " << cfg.dim << '\n';
  if (cfg.dim == 1) {
    out << "cells = " << cfg.cells_x << '\n'
        << "length = " << format_real(cfg.length_x) << '\n';
  } else {
    out << "cells_x = " << cfg.cells_x << '\n'
        << "cells_y = " << cfg.cells_y << '\n'
        << "length_x = " << format_real(cfg.length_x) << '\n'
        << "length_y = " << format_real(cfg.length_y) << '\n';
  }
  out << "bc = " << to_string(cfg.bc) << '\n';
}

void echo_solver(std::ostringstream& out, const RunConfig& cfg) {
  out << "gap_tol = " << format_real(cfg.gap_tol) << '\n'
      << "max_iters = " << cfg.max_iters << '\n'
      << "primal_step = " << format_real(cfg.primal_step) << '\n'
      << "dual_step = " << format_real(cfg.dual_step) << '\n'
      << "theta = " << format_real(cfg.theta) << '\n';
}

void echo_time(std::ostringstream& out, const RunConfig& cfg) {
  out << "T = " << format_real(cfg.horizon) << '\n'
      << "steps = " << cfg.steps << '\n';
}

void echo_p_sequence(std::ostringstream& out, const RunConfig& cfg) {
  out << "p0 = " << format_real(cfg.p0) << '\n';
  out << "p_seq = ";
  for (std::size_t n = 0; n < cfg.p_seq.size(); ++n)
    out << (n ? "," : "") << format_real(cfg.p_seq[n]);
  out << '\n';
}

const char* to_string(PerRunRule rule) {
  return rule == PerRunRule::Fixed ? "fixed" : "perturbed";
}

}  // namespace

std::string canonical_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "seed = " << cfg.seed << '\n';
  out << "out_dir = " << cfg.out_dir << '\n';
  switch (cfg.command) {
    case Command::Evolve:
      echo_grid(out, cfg);
      echo_time(out, cfg);
      echo_solver(out, cfg);
      out << "p = " << format_real(cfg.p) << '\n';
      echo_datum(out, "x0", cfg.x0);
      echo_forcing(out, cfg.forcing);
      break;
    case Command::Continuity:
      echo_grid(out, cfg);
      echo_time(out, cfg);
      echo_solver(out, cfg);
      echo_p_sequence(out, cfg);
      echo_datum(out, "x0", cfg.x0);
      echo_forcing(out, cfg.forcing);
      out << "tol_abs = " << format_real(cfg.tol_abs) << '\n'
          << "ratio_min = " << format_real(cfg.ratio_min) << '\n'
          << "x0_rule = " << to_string(cfg.x0_rule) << '\n'
          << "x0_perturb = " << format_real(cfg.x0_perturb) << '\n'
          << "forcing_rule = " << to_string(cfg.forcing_rule) << '\n'
          << "forcing_perturb = " << format_real(cfg.forcing_perturb) << '\n';
      break;
    case Command::Mosco:
      echo_grid(out, cfg);
      echo_p_sequence(out, cfg);
      echo_datum(out, "x0", cfg.x0);
      out << "m1_samples = " << cfg.m1_samples << '\n'
          << "m1_perturb = " << format_real(cfg.m1_perturb) << '\n';
      break;
    case Command::Diagonal:
      switch (cfg.table) {
        case RunConfig::TableKind::Harmonic:
          out << "table = harmonic\n"
              << "rows = " << cfg.table_rows << '\n'
              << "cols = " << cfg.table_cols << '\n';
          break;
        case RunConfig::TableKind::Constant:
          out << "table = constant\n"
              << "table_value = " << format_real(cfg.table_value) << '\n'
              << "rows = " << cfg.table_rows << '\n'
              << "cols = " << cfg.table_cols << '\n';
          break;
        case RunConfig::TableKind::Energy:
          out << "table = energy\n";
          echo_grid(out, cfg);
          echo_p_sequence(out, cfg);
          echo_datum(out, "x0", cfg.x0);
          break;
        case RunConfig::TableKind::File:
          out << "table = file\n"
              << "table_file = " << cfg.table_file << '\n';
          break;
      }
      out << "eps_scale = " << format_real(cfg.eps_scale) << '\n';
      break;
  }
  return out.str();
}

}  // namespace plap
