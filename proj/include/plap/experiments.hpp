#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "plap/energy.hpp"
#include "plap/flow.hpp"
#include "plap/grid.hpp"
#include "plap/prox.hpp"

namespace plap {

/// Inputs of one exponent-continuity experiment: a reference exponent p0
/// (p0 = 1, the total-variation limit, is allowed), an exponent sequence in
/// (1, inf) approaching it, and shared grid/time/solver settings. The data
/// rules allow either a fixed initial datum and forcing for every run or
/// per-exponent families converging to the reference pair.
template <typename Scalar>
struct ContinuityConfigT {
  Scalar p0;
  std::vector<Scalar> p_seq;
  TimeGridT<Scalar> tg;
  ProxParamsT<Scalar> params;
  FieldT<Scalar> x0;
  ForcingT<Scalar> forcing;
  std::vector<FieldT<Scalar>> x0_per_n;        // empty: fixed datum rule
  std::vector<ForcingT<Scalar>> forcing_per_n; // empty: fixed forcing rule
  Scalar tol_abs = Scalar(1e-2);
  Scalar ratio_min = Scalar(0);  // <= 0 disables the first/last ratio check
  int threads = 1;
};

template <typename Scalar>
struct ContinuityEntryT {
  Scalar p = Scalar(0);
  Scalar distance = Scalar(0);
  double runtime_s = 0.0;
  bool converged = false;
  std::string error;
};

template <typename Scalar>
struct ContinuityReportT {
  std::vector<ContinuityEntryT<Scalar>> entries;
  Scalar d_first = Scalar(0);
  Scalar d_last = Scalar(0);
  bool tail_decreasing = false;
  bool within_tol = false;
  bool ratio_ok = false;
  bool pass = false;
};

namespace detail {
template <typename Scalar>
void validate_continuity(const ContinuityConfigT<Scalar>& cfg) {
  require(std::isfinite(cfg.p0) && cfg.p0 >= Scalar(1),
          "run_continuity: p0 must be finite and >= 1");
  require(!cfg.p_seq.empty(), "run_continuity: p_seq must be nonempty");
  for (std::size_t n = 0; n < cfg.p_seq.size(); ++n) {
    require(std::isfinite(cfg.p_seq[n]) && cfg.p_seq[n] > Scalar(1),
            "run_continuity: p_seq entries must be > 1");
    if (n > 0)
      require(std::abs(cfg.p_seq[n] - cfg.p0) <=
                  std::abs(cfg.p_seq[n - 1] - cfg.p0),
              "run_continuity: p_seq must be monotone toward p0");
  }
  require(cfg.x0_per_n.empty() || cfg.x0_per_n.size() == cfg.p_seq.size(),
          "run_continuity: x0_per_n must be empty or match p_seq");
  require(cfg.forcing_per_n.empty() ||
              cfg.forcing_per_n.size() == cfg.p_seq.size(),
          "run_continuity: forcing_per_n must be empty or match p_seq");
  require_same_grid(cfg.x0.grid, cfg.forcing.grid(), "run_continuity");
  for (const auto& f : cfg.x0_per_n)
    require_same_grid(f.grid, cfg.x0.grid, "run_continuity x0_per_n");
  for (const auto& f : cfg.forcing_per_n)
    require_same_grid(f.grid(), cfg.x0.grid, "run_continuity forcing_per_n");
  require(cfg.threads >= 1, "run_continuity: threads must be >= 1");
}
}  // namespace detail

/// Runs the reference trajectory at p0 and one trajectory per entry of p_seq,
/// then reports d_n = sup-in-time L2 distance to the reference. Verdict: PASS
/// when d_n is weakly decreasing over the last three entries, d_last is
/// within tol_abs, and (if enabled) d_first / d_last >= ratio_min. A solver
/// failure marks that entry failed and the remaining exponents still run.
/// Entries are assembled in index order, so the report is identical for any
/// thread count.
template <typename Scalar>
ContinuityReportT<Scalar> run_continuity(const ContinuityConfigT<Scalar>& cfg) {
  detail::validate_continuity(cfg);

  const GridT<Scalar>& grid = cfg.x0.grid;
  const EnergySpecT<Scalar> ref_spec(cfg.p0, grid);
  const TrajectoryT<Scalar> reference =
      evolve(ref_spec, cfg.x0, cfg.forcing, cfg.tg, cfg.params);

  ContinuityReportT<Scalar> report;
  report.entries.resize(cfg.p_seq.size());

  const auto run_one = [&](std::size_t n) {
    ContinuityEntryT<Scalar>& entry = report.entries[n];
    entry.p = cfg.p_seq[n];
    const auto start = std::chrono::steady_clock::now();
    try {
      const EnergySpecT<Scalar> spec(cfg.p_seq[n], grid);
      const FieldT<Scalar>& x0 =
          cfg.x0_per_n.empty() ? cfg.x0 : cfg.x0_per_n[n];
      const ForcingT<Scalar>& f =
          cfg.forcing_per_n.empty() ? cfg.forcing : cfg.forcing_per_n[n];
      const TrajectoryT<Scalar> traj = evolve(spec, x0, f, cfg.tg, cfg.params);
      entry.distance = sup_distance(traj, reference);
      entry.converged = true;
    } catch (const std::exception& e) {
      entry.converged = false;
      entry.error = e.what();
      entry.distance = std::numeric_limits<Scalar>::quiet_NaN();
    }
    entry.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
  };

  if (cfg.threads <= 1) {
    for (std::size_t n = 0; n < cfg.p_seq.size(); ++n) run_one(n);
  } else {
    std::atomic<std::size_t> next{0};
    const int workers =
        std::min<int>(cfg.threads, static_cast<int>(cfg.p_seq.size()));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t n = next.fetch_add(1);
          if (n >= cfg.p_seq.size()) return;
          run_one(n);
        }
      });
    for (auto& th : pool) th.join();
  }

  const auto& e = report.entries;
  bool all_ok = true;
  for (const auto& en : e) all_ok = all_ok && en.converged;
  report.d_first = e.front().distance;
  report.d_last = e.back().distance;
  report.tail_decreasing = all_ok;
  const std::size_t tail = e.size() >= 3 ? 3 : e.size();
  for (std::size_t i = e.size() - tail + 1; i < e.size() && all_ok; ++i)
    report.tail_decreasing =
        report.tail_decreasing && e[i].distance <= e[i - 1].distance;
  if (!all_ok) report.tail_decreasing = false;
  report.within_tol = all_ok && report.d_last <= cfg.tol_abs;
  report.ratio_ok =
      cfg.ratio_min <= Scalar(0) ||
      (all_ok && report.d_first >= cfg.ratio_min * report.d_last);
  report.pass = report.tail_decreasing && report.within_tol && report.ratio_ok;
  return report;
}

/// Recovery-sequence probe: on a fixed grid the constant sequence y_n = u is
/// admissible, so the upper-limit condition reduces to the energy gaps
/// |energy(p_n, u) - energy(p0, u)|. Raw gaps; callers assert the decay.
template <typename Scalar>
std::vector<Scalar> mosco_m2_check(const FieldT<Scalar>& u,
                                   const std::vector<Scalar>& p_seq,
                                   Scalar p0, BoundaryMode bc) {
  detail::require(!p_seq.empty(), "mosco_m2_check: p_seq must be nonempty");
  detail::require(bc == u.grid.bc,
                  "mosco_m2_check: boundary mode inconsistent with grid");
  detail::require(std::isfinite(p0) && p0 >= Scalar(1),
                  "mosco_m2_check: p0 must be finite and >= 1");
  const Scalar base = energy(EnergySpecT<Scalar>(p0, u.grid), u);
  std::vector<Scalar> gaps;
  gaps.reserve(p_seq.size());
  for (Scalar p : p_seq) {
    detail::require(std::isfinite(p) && p > Scalar(1),
                    "mosco_m2_check: p_seq entries must be > 1");
    gaps.push_back(std::abs(energy(EnergySpecT<Scalar>(p, u.grid), u) - base));
  }
  return gaps;
}

template <typename Scalar>
struct MoscoM1Result {
  bool pass = false;
  Scalar limit_energy = Scalar(0);
  Scalar tail_min = Scalar(0);
  Scalar slack = Scalar(0);
};

/// Lower-semicontinuity probe along a sequence (p_n, u_n) -> (p0, u). On a
/// fixed finite grid weak and strong L2 convergence coincide, so the
/// lower-limit condition reduces to: min over the tail of energy(p_n, u_n)
/// must not undercut energy(p0, u) beyond 1e-8 plus the tail oscillation.
template <typename Scalar>
MoscoM1Result<Scalar> mosco_m1_check(
    const std::vector<std::pair<Scalar, FieldT<Scalar>>>& samples, Scalar p0,
    const FieldT<Scalar>& limit) {
  detail::require(samples.size() >= 4,
                  "mosco_m1_check: need at least 4 samples");
  detail::require(std::isfinite(p0) && p0 >= Scalar(1),
                  "mosco_m1_check: p0 must be finite and >= 1");
  for (const auto& [p, u] : samples) {
    detail::require(std::isfinite(p) && p >= Scalar(1),
                    "mosco_m1_check: sample exponents must be >= 1");
    detail::require_same_grid(u.grid, limit.grid, "mosco_m1_check");
  }
  MoscoM1Result<Scalar> result;
  result.limit_energy = energy(EnergySpecT<Scalar>(p0, limit.grid), limit);

  const std::size_t tail_len = std::max<std::size_t>(2, samples.size() / 4);
  Scalar tail_min = std::numeric_limits<Scalar>::infinity();
  Scalar tail_max = -std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = samples.size() - tail_len; i < samples.size(); ++i) {
    const Scalar e = energy(
        EnergySpecT<Scalar>(samples[i].first, limit.grid), samples[i].second);
    tail_min = std::min(tail_min, e);
    tail_max = std::max(tail_max, e);
  }
  result.tail_min = tail_min;
  result.slack = Scalar(1e-8) + (tail_max - tail_min);
  result.pass = tail_min >= result.limit_energy - result.slack;
  return result;
}

using ContinuityConfig = ContinuityConfigT<double>;
using ContinuityEntry = ContinuityEntryT<double>;
using ContinuityReport = ContinuityReportT<double>;

}  // namespace plap
