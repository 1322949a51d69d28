#include "runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <vector>

#include "plap/diagonal.hpp"
#include "plap/experiments.hpp"
#include "plap/field_io.hpp"
#include "plap/rng.hpp"

namespace plap {

namespace fs = std::filesystem;

namespace {

std::ofstream open_artifact(const fs::path& dir, const std::string& name) {
  std::ofstream out(dir / name, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open output file " +
                             (dir / name).string());
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open input file " + path);
  return in;
}

Field indicator_field(const Grid& g, double lo, double hi) {
  return sample(g, [&](double x, double y) {
    const bool in_x = x >= lo && x <= hi;
    const bool in_y = g.dim == 1 || (y >= lo && y <= hi);
    return in_x && in_y ? 1.0 : 0.0;
  });
}

Field sine_field(const Grid& g, long mode) {
  const double kx = std::numbers::pi * static_cast<double>(mode) / g.lengths[0];
  const double ky =
      g.dim == 2 ? std::numbers::pi * static_cast<double>(mode) / g.lengths[1]
                 : 0.0;
  return sample(g, [&](double x, double y) {
    double v = std::sin(kx * x);
    if (g.dim == 2) v *= std::sin(ky * y);
    return v;
  });
}

Forcing read_forcing_csv(std::istream& in, const Grid& g) {
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("forcing csv: missing header");
  std::vector<double> times;
  std::vector<Field> fields;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto tokens = detail::split_csv_line(line);
    if (static_cast<Eigen::Index>(tokens.size()) != g.cell_count() + 1)
      throw ConfigError("forcing csv: expected t plus " +
                        std::to_string(g.cell_count()) +
                        " cell columns on line " + std::to_string(line_no));
    times.push_back(detail::parse_csv_real(tokens[0], line_no));
    Field f = Field::zero(g);
    for (Eigen::Index i = 0; i < g.cell_count(); ++i)
      f.values[i] =
          detail::parse_csv_real(tokens[static_cast<std::size_t>(i) + 1],
                                 line_no);
    fields.push_back(std::move(f));
  }
  if (times.empty()) throw ConfigError("forcing csv: no breakpoints");
  return Forcing::piecewise_constant(std::move(times), std::move(fields));
}

ProxParams build_params(const RunConfig& cfg) {
  ProxParams params;
  params.tau = cfg.horizon / static_cast<double>(cfg.steps);
  params.max_iters = static_cast<int>(cfg.max_iters);
  params.gap_tol = cfg.gap_tol;
  params.primal_step = cfg.primal_step;
  params.dual_step = cfg.dual_step;
  params.theta_relax = cfg.theta;
  return params;
}

void write_manifest_header(std::ostream& out, const RunConfig& cfg,
                           const CliOptions& opts) {
  out << "command = " << to_string(cfg.command) << '\n'
      << "threads = " << opts.threads << '\n'
      << "[config]\n"
      << canonical_config(cfg);
}

std::string verdict_word(bool pass) { return pass ? "PASS" : "FAIL"; }

int cmd_evolve(const RunConfig& cfg, const CliOptions& opts,
               const fs::path& out_dir) {
  const Grid g = build_grid(cfg);
  const EnergySpec spec(cfg.p, g);
  const Field x0 = build_datum(cfg.x0, g);
  const Forcing forcing = build_forcing(cfg.forcing, g);
  const TimeGrid tg(cfg.horizon, static_cast<int>(cfg.steps));
  const ProxParams params = build_params(cfg);

  Trajectory traj{tg, {}, {}};
  bool solver_failed = false;
  std::string failure;
  try {
    traj = evolve(spec, x0, forcing, tg, params);
  } catch (const FlowError& e) {
    solver_failed = true;
    failure = e.what();
    traj = e.partial;
  }

  {
    auto out = open_artifact(out_dir, "trajectory.csv");
    write_trajectory_csv(out, traj);
  }
  {
    auto out = open_artifact(out_dir, "manifest.txt");
    write_manifest_header(out, cfg, opts);
    out << "[artifacts]\ntrajectory.csv\n[steps]\nk,iterations,gap\n";
    for (std::size_t k = 0; k < traj.reports.size(); ++k)
      out << k + 1 << ',' << traj.reports[k].iterations << ','
          << format_real(traj.reports[k].final_gap) << '\n';
    if (solver_failed) out << "[status]\nfailed = " << failure << '\n';
  }

  if (solver_failed) {
    std::cerr << "evolve failed: " << failure << '\n';
    return kExitSolver;
  }
  if (!opts.quiet)
    std::cout << "evolve: " << tg.steps << " steps, final |u| = "
              << format_real(l2_norm(traj.fields.back())) << ", artifacts in "
              << out_dir.string() << '\n';
  return kExitOk;
}

Field perturbation_field(const Grid& g, std::uint64_t seed, std::size_t n) {
  Rng rng(seed + 7919 * (static_cast<std::uint64_t>(n) + 1));
  return random_unit_field(g, rng);
}

int cmd_continuity(const RunConfig& cfg, const CliOptions& opts,
                   const fs::path& out_dir) {
  const Grid g = build_grid(cfg);
  ContinuityConfig ccfg{cfg.p0,
                        cfg.p_seq,
                        TimeGrid(cfg.horizon, static_cast<int>(cfg.steps)),
                        build_params(cfg),
                        build_datum(cfg.x0, g),
                        build_forcing(cfg.forcing, g),
                        {},
                        {},
                        cfg.tol_abs,
                        cfg.ratio_min,
                        opts.threads};

  if (cfg.x0_rule == PerRunRule::Perturbed) {
    for (std::size_t n = 0; n < cfg.p_seq.size(); ++n) {
      Field xn = ccfg.x0;
      const Field noise = perturbation_field(g, cfg.seed, n);
      xn.values += cfg.x0_perturb / static_cast<double>(n + 1) * noise.values;
      ccfg.x0_per_n.push_back(std::move(xn));
    }
  }
  if (cfg.forcing_rule == PerRunRule::Perturbed) {
    if (cfg.forcing.kind == ForcingRule::Kind::File)
      throw ConfigError(
          "forcing_rule = perturbed requires zero or separable forcing");
    for (std::size_t n = 0; n < cfg.p_seq.size(); ++n) {
      Field profile = cfg.forcing.kind == ForcingRule::Kind::Zero
                          ? Field::zero(g)
                          : build_datum(cfg.forcing.profile, g);
      const Field noise = perturbation_field(g, cfg.seed ^ 0x5eedf0cced, n);
      profile.values +=
          cfg.forcing_perturb / static_cast<double>(n + 1) * noise.values;
      const ForcingRule& fr = cfg.forcing;
      std::function<double(double)> coeff;
      if (fr.kind == ForcingRule::Kind::Zero) {
        coeff = [](double) { return 1.0; };
      } else {
        switch (fr.coeff) {
          case ForcingRule::Coeff::Constant:
            coeff = [c = fr.coeff_value](double) { return c; };
            break;
          case ForcingRule::Coeff::Sin:
            coeff = [w = fr.omega](double t) { return std::sin(w * t); };
            break;
          case ForcingRule::Coeff::Exp:
            coeff = [r = fr.rate](double t) { return std::exp(-r * t); };
            break;
        }
      }
      ccfg.forcing_per_n.push_back(
          Forcing::separable(std::move(profile), std::move(coeff)));
    }
  }

  const ContinuityReport report = run_continuity(ccfg);

  {
    auto out = open_artifact(out_dir, "continuity_report.csv");
    out << "n,p,d,converged\n";
    for (std::size_t n = 0; n < report.entries.size(); ++n) {
      const auto& e = report.entries[n];
      out << n + 1 << ',' << format_real(e.p) << ',' << format_real(e.distance)
          << ',' << (e.converged ? 1 : 0) << '\n';
    }
  }
  {
    auto out = open_artifact(out_dir, "continuity_report.txt");
    out << "exponent continuity experiment, p0 = " << format_real(cfg.p0)
        << ", x0_rule = "
        << (cfg.x0_rule == PerRunRule::Fixed ? "fixed" : "perturbed")
        << ", forcing_rule = "
        << (cfg.forcing_rule == PerRunRule::Fixed ? "fixed" : "perturbed")
        << '\n';
    for (const auto& e : report.entries) {
      out << "p_n = " << format_real(e.p)
          << ", d_n = " << format_real(e.distance)
          << ", runtime_s = " << format_real(e.runtime_s)
          << ", converged = " << (e.converged ? 1 : 0);
      if (!e.error.empty()) out << ", error = " << e.error;
      out << '\n';
    }
    out << "verdict = " << verdict_word(report.pass)
        << " (tail_decreasing = " << report.tail_decreasing
        << ", within_tol = " << report.within_tol
        << ", ratio_ok = " << report.ratio_ok << ")\n";
  }
  {
    auto out = open_artifact(out_dir, "manifest.txt");
    write_manifest_header(out, cfg, opts);
    out << "[artifacts]\ncontinuity_report.csv\ncontinuity_report.txt\n";
  }

  bool any_failed = false;
  for (const auto& e : report.entries) any_failed = any_failed || !e.converged;
  if (!opts.quiet)
    std::cout << "continuity: d_first = " << format_real(report.d_first)
              << ", d_last = " << format_real(report.d_last) << ", verdict "
              << verdict_word(report.pass) << '\n';
  if (any_failed) {
    std::cerr << "continuity: solver failure on at least one exponent\n";
    return kExitSolver;
  }
  return report.pass ? kExitOk : kExitVerdict;
}

int cmd_mosco(const RunConfig& cfg, const CliOptions& opts,
              const fs::path& out_dir) {
  const Grid g = build_grid(cfg);
  const Field u = build_datum(cfg.x0, g);
  const std::vector<double> gaps = mosco_m2_check(u, cfg.p_seq, cfg.p0, g.bc);

  std::vector<std::pair<double, Field>> samples;
  for (long n = 1; n <= cfg.m1_samples; ++n) {
    const double pn =
        cfg.p0 + (cfg.p_seq.front() - cfg.p0) / static_cast<double>(n);
    Field un = u;
    const Field noise =
        perturbation_field(g, cfg.seed, static_cast<std::size_t>(n));
    un.values += cfg.m1_perturb / static_cast<double>(n) * noise.values;
    samples.emplace_back(std::max(pn, 1.0), std::move(un));
  }
  const MoscoM1Result<double> m1 = mosco_m1_check(samples, cfg.p0, u);

  {
    auto out = open_artifact(out_dir, "mosco_m2_gaps.csv");
    out << "n,p,gap\n";
    for (std::size_t n = 0; n < gaps.size(); ++n)
      out << n + 1 << ',' << format_real(cfg.p_seq[n]) << ','
          << format_real(gaps[n]) << '\n';
  }
  {
    auto out = open_artifact(out_dir, "mosco_report.txt");
    out << "upper-limit (recovery) gaps |energy(p_n) - energy(p0)|:\n";
    for (std::size_t n = 0; n < gaps.size(); ++n)
      out << "p_n = " << format_real(cfg.p_seq[n])
          << ", gap = " << format_real(gaps[n]) << '\n';
    out << "lower-limit probe: " << verdict_word(m1.pass)
        << " (limit energy = " << format_real(m1.limit_energy)
        << ", tail min = " << format_real(m1.tail_min)
        << ", slack = " << format_real(m1.slack) << ")\n";
  }
  {
    auto out = open_artifact(out_dir, "manifest.txt");
    write_manifest_header(out, cfg, opts);
    out << "[artifacts]\nmosco_m2_gaps.csv\nmosco_report.txt\n";
  }

  if (!opts.quiet)
    std::cout << "mosco: final gap = " << format_real(gaps.back())
              << ", lower-limit probe " << verdict_word(m1.pass) << '\n';
  return m1.pass ? kExitOk : kExitVerdict;
}

// One smoothing pass of the 1-2-1 cell average with the grid's ghost closure.
Field smooth_once(const Field& u) {
  FaceField flux = grad(u);
  Field lap = div(flux);
  Field out = u;
  const double h = u.grid.min_spacing();
  out.values += 0.25 * h * h * lap.values;
  return out;
}

DiagonalTable read_table_csv(std::istream& in) {
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto tokens = detail::split_csv_line(line);
    std::vector<double> row;
    for (const auto& tok : tokens) {
      const std::string t = tok;
      if (t == "inf" || t == "+inf")
        row.push_back(std::numeric_limits<double>::infinity());
      else if (t == "-inf")
        row.push_back(-std::numeric_limits<double>::infinity());
      else
        row.push_back(detail::parse_csv_real(t, line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 3)
    throw ConfigError("table csv: need a limits row plus at least 2 rows");
  const std::size_t cols = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != cols)
      throw ConfigError("table csv: ragged rows");
  DiagonalTable tbl;
  tbl.col_limits.resize(static_cast<Eigen::Index>(cols));
  for (std::size_t m = 0; m < cols; ++m)
    tbl.col_limits[static_cast<Eigen::Index>(m)] = rows[0][m];
  tbl.a.resize(static_cast<Eigen::Index>(rows.size() - 1),
               static_cast<Eigen::Index>(cols));
  for (std::size_t n = 1; n < rows.size(); ++n)
    for (std::size_t m = 0; m < cols; ++m)
      tbl.a(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(m)) =
          rows[n][m];
  return tbl;
}

int cmd_diagonal(const RunConfig& cfg, const CliOptions& opts,
                 const fs::path& out_dir) {
  DiagonalTable tbl;
  switch (cfg.table) {
    case RunConfig::TableKind::Harmonic: {
      tbl.a.resize(cfg.table_rows, cfg.table_cols);
      tbl.col_limits.resize(cfg.table_cols);
      for (Eigen::Index n = 0; n < cfg.table_rows; ++n)
        for (Eigen::Index m = 0; m < cfg.table_cols; ++m)
          tbl.a(n, m) = 1.0 / static_cast<double>(n + 1) +
                        1.0 / static_cast<double>(m + 1);
      for (Eigen::Index m = 0; m < cfg.table_cols; ++m)
        tbl.col_limits[m] = 1.0 / static_cast<double>(m + 1);
      break;
    }
    case RunConfig::TableKind::Constant: {
      tbl.a.setConstant(cfg.table_rows, cfg.table_cols, cfg.table_value);
      tbl.col_limits.setConstant(cfg.table_cols, cfg.table_value);
      break;
    }
    case RunConfig::TableKind::Energy: {
      const Grid g = build_grid(cfg);
      const Field u = build_datum(cfg.x0, g);
      const Eigen::Index cols = cfg.table_cols;
      std::vector<Field> family;
      for (Eigen::Index m = 0; m < cols; ++m) {
        Field um = u;
        for (Eigen::Index pass = 0; pass < cols - 1 - m; ++pass)
          um = smooth_once(um);
        family.push_back(std::move(um));
      }
      tbl.a.resize(static_cast<Eigen::Index>(cfg.p_seq.size()), cols);
      tbl.col_limits.resize(cols);
      for (Eigen::Index m = 0; m < cols; ++m) {
        tbl.col_limits[m] = energy(EnergySpec(cfg.p0, g), family[m]);
        for (std::size_t n = 0; n < cfg.p_seq.size(); ++n)
          tbl.a(static_cast<Eigen::Index>(n), m) =
              energy(EnergySpec(cfg.p_seq[n], g), family[m]);
      }
      break;
    }
    case RunConfig::TableKind::File: {
      auto in = open_input(cfg.table_file);
      tbl = read_table_csv(in);
      break;
    }
  }

  std::vector<double> eps(static_cast<std::size_t>(tbl.cols()));
  for (std::size_t m = 0; m < eps.size(); ++m)
    eps[m] = cfg.eps_scale / static_cast<double>(m + 2);
  const std::vector<Eigen::Index> selection = diagonal_select(tbl, eps);

  {
    auto out = open_artifact(out_dir, "diagonal.csv");
    out << "n,m,a\n";
    for (std::size_t n = 0; n < selection.size(); ++n) {
      const Eigen::Index m = selection[n];
      out << n + 1 << ',' << m << ',';
      if (m >= 1)
        out << format_real(tbl.a(static_cast<Eigen::Index>(n), m - 1));
      else
        out << "nan";
      out << '\n';
    }
  }
  {
    auto out = open_artifact(out_dir, "manifest.txt");
    write_manifest_header(out, cfg, opts);
    out << "[artifacts]\ndiagonal.csv\n";
  }

  if (!opts.quiet)
    std::cout << "diagonal: m(n) reaches " << selection.back() << " of "
              << tbl.cols() << " columns\n";
  return kExitOk;
}

}  // namespace

Grid build_grid(const RunConfig& cfg) {
  if (cfg.dim == 1)
    return Grid::line(cfg.cells_x, cfg.length_x, cfg.bc);
  return Grid::box(cfg.cells_x, cfg.cells_y, cfg.length_x, cfg.length_y,
                   cfg.bc);
}

Field build_datum(const DatumRule& rule, const Grid& g) {
  switch (rule.kind) {
    case DatumRule::Kind::Zero:
      return Field::zero(g);
    case DatumRule::Kind::Constant:
      return Field::constant(g, rule.value);
    case DatumRule::Kind::Sine:
      return sine_field(g, rule.mode);
    case DatumRule::Kind::Indicator:
      return indicator_field(g, rule.lo, rule.hi);
    case DatumRule::Kind::File: {
      auto in = open_input(rule.file);
      Field f = read_field_csv(in, g);
      if (!f.values.isFinite().all())
        throw ConfigError("field file " + rule.file +
                          " contains non-finite values");
      return f;
    }
  }
  return Field::zero(g);
}

Forcing build_forcing(const ForcingRule& rule, const Grid& g) {
  switch (rule.kind) {
    case ForcingRule::Kind::Zero:
      return Forcing::zero(g);
    case ForcingRule::Kind::Separable: {
      Field profile = build_datum(rule.profile, g);
      switch (rule.coeff) {
        case ForcingRule::Coeff::Constant:
          return Forcing::separable(
              std::move(profile),
              [c = rule.coeff_value](double) { return c; });
        case ForcingRule::Coeff::Sin:
          return Forcing::separable(
              std::move(profile),
              [w = rule.omega](double t) { return std::sin(w * t); });
        case ForcingRule::Coeff::Exp:
          return Forcing::separable(
              std::move(profile),
              [r = rule.rate](double t) { return std::exp(-r * t); });
      }
      return Forcing::zero(g);
    }
    case ForcingRule::Kind::File: {
      auto in = open_input(rule.file);
      return read_forcing_csv(in, g);
    }
  }
  return Forcing::zero(g);
}

int run_command(const RunConfig& cfg, const CliOptions& opts) {
  const fs::path out_dir =
      opts.out_override.empty() ? fs::path(cfg.out_dir)
                                : fs::path(opts.out_override);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << out_dir.string() << ": "
              << ec.message() << '\n';
    return kExitValidation;
  }

  try {
    switch (cfg.command) {
      case Command::Evolve:
        return cmd_evolve(cfg, opts, out_dir);
      case Command::Continuity:
        return cmd_continuity(cfg, opts, out_dir);
      case Command::Mosco:
        return cmd_mosco(cfg, opts, out_dir);
      case Command::Diagonal:
        return cmd_diagonal(cfg, opts, out_dir);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ResolventError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const FlowError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace plap
