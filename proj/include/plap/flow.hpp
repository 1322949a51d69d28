#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plap/energy.hpp"
#include "plap/grid.hpp"
#include "plap/prox.hpp"

namespace plap {

/// Uniform time grid on [0, horizon] with nodes t_k = k * tau.
template <typename Scalar>
struct TimeGridT {
  Scalar horizon = Scalar(1);
  int steps = 1;

  TimeGridT(Scalar horizon_, int steps_) : horizon(horizon_), steps(steps_) {
    detail::require(std::isfinite(horizon) && horizon > Scalar(0),
                    "TimeGridT: horizon must be finite and > 0");
    detail::require(steps >= 1, "TimeGridT: steps must be >= 1");
  }

  Scalar tau() const { return horizon / Scalar(steps); }
  Scalar node(int k) const { return Scalar(k) * tau(); }

  friend bool operator==(const TimeGridT&, const TimeGridT&) = default;
};

/// Square-integrable-in-time forcing: zero, a separable profile g(t) * F, or
/// a piecewise-constant-in-time table (zero before the first breakpoint, last
/// entry extended beyond the table).
template <typename Scalar>
class ForcingT {
 public:
  static ForcingT zero(const GridT<Scalar>& g) {
    ForcingT f;
    f.grid_ = g;
    f.kind_ = Kind::Zero;
    return f;
  }

  static ForcingT separable(FieldT<Scalar> profile,
                            std::function<Scalar(Scalar)> coeff) {
    detail::require(static_cast<bool>(coeff),
                    "ForcingT::separable: coefficient must be callable");
    ForcingT f;
    f.grid_ = profile.grid;
    f.kind_ = Kind::Separable;
    f.profile_ = std::move(profile);
    f.coeff_ = std::move(coeff);
    return f;
  }

  static ForcingT piecewise_constant(std::vector<Scalar> times,
                                     std::vector<FieldT<Scalar>> fields) {
    detail::require(!times.empty() && times.size() == fields.size(),
                    "ForcingT::piecewise_constant: need matching nonempty "
                    "times and fields");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      detail::require_same_grid(fields[i].grid, fields[0].grid,
                                "ForcingT::piecewise_constant");
      detail::require(fields[i].values.isFinite().all(),
                      "ForcingT::piecewise_constant: field entries must be "
                      "finite");
      if (i > 0)
        detail::require(times[i] > times[i - 1],
                        "ForcingT::piecewise_constant: times must be strictly "
                        "increasing");
    }
    ForcingT f;
    f.grid_ = fields[0].grid;
    f.kind_ = Kind::Table;
    f.times_ = std::move(times);
    f.table_ = std::move(fields);
    return f;
  }

  const GridT<Scalar>& grid() const { return grid_; }
  bool is_zero() const { return kind_ == Kind::Zero; }

  FieldT<Scalar> at(Scalar t) const {
    switch (kind_) {
      case Kind::Zero:
        return FieldT<Scalar>::zero(grid_);
      case Kind::Separable: {
        FieldT<Scalar> out = profile_;
        out.values *= coeff_(t);
        return out;
      }
      case Kind::Table: {
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        if (it == times_.begin()) return FieldT<Scalar>::zero(grid_);
        return table_[static_cast<std::size_t>(it - times_.begin()) - 1];
      }
    }
    return FieldT<Scalar>::zero(grid_);
  }

 private:
  enum class Kind { Zero, Separable, Table };

  ForcingT() = default;

  GridT<Scalar> grid_;
  Kind kind_ = Kind::Zero;
  FieldT<Scalar> profile_;
  std::function<Scalar(Scalar)> coeff_;
  std::vector<Scalar> times_;
  std::vector<FieldT<Scalar>> table_;
};

/// Discrete solution path: one field per node t_k, plus the per-step solver
/// reports. fields[0] is the supplied initial datum.
template <typename Scalar>
struct TrajectoryT {
  TimeGridT<Scalar> tg;
  std::vector<FieldT<Scalar>> fields;
  std::vector<ProxReport> reports;

  const GridT<Scalar>& grid() const { return fields.front().grid; }
};

template <typename Scalar>
class FlowErrorT : public std::runtime_error {
 public:
  FlowErrorT(const std::string& msg, TrajectoryT<Scalar> partial_,
             ProxReport failing)
      : std::runtime_error(msg),
        partial(std::move(partial_)),
        failing_report(failing) {}

  TrajectoryT<Scalar> partial;
  ProxReport failing_report;
};

/// Backward Euler resolvent chain for du/dt + d(energy)(u) ∋ f:
/// u_{k+1} = resolvent(u_k + tau f(t_{k+1})), forcing sampled at the right
/// endpoint. The resolvent step tau is taken from the time grid; each step is
/// warm-started from the previous primal/dual pair. A resolvent failure
/// aborts with the partial trajectory attached.
template <typename Scalar>
TrajectoryT<Scalar> evolve(const EnergySpecT<Scalar>& spec,
                           const FieldT<Scalar>& x0, const ForcingT<Scalar>& f,
                           const TimeGridT<Scalar>& tg,
                           ProxParamsT<Scalar> params) {
  detail::require_same_grid(spec.grid, x0.grid, "evolve");
  detail::require_same_grid(spec.grid, f.grid(), "evolve forcing");
  params.tau = tg.tau();

  TrajectoryT<Scalar> out{tg, {}, {}};
  out.fields.reserve(static_cast<std::size_t>(tg.steps) + 1);
  out.reports.reserve(static_cast<std::size_t>(tg.steps));
  out.fields.push_back(x0);

  ProxStateT<Scalar> state = ProxStateT<Scalar>::cold(x0);
  // Carrying the dual across steps is counterproductive for p in (1, 2): the
  // conjugate power q > 2 is flat at the origin, so a stale dual above its
  // new equilibrium on flattening faces relaxes only sublinearly, while the
  // growth from zero is driven by the primal gradient and fast.
  const bool reuse_dual = !(spec.p > Scalar(1) && spec.p < Scalar(2));
  FieldT<Scalar> w = x0;
  for (int k = 0; k < tg.steps; ++k) {
    if (f.is_zero()) {
      w.values = out.fields.back().values;
    } else {
      w.values =
          out.fields.back().values + params.tau * f.at(tg.node(k + 1)).values;
    }
    if (!reuse_dual) {
      state.dual.axis[0].setZero();
      if (spec.grid.dim == 2) state.dual.axis[1].setZero();
    }
    try {
      auto [u, report] = resolvent(spec, w, params, &state);
      out.fields.push_back(std::move(u));
      out.reports.push_back(report);
    } catch (const ResolventError& e) {
      throw FlowErrorT<Scalar>(
          "evolve: step " + std::to_string(k + 1) + " failed: " + e.what(),
          std::move(out), e.report);
    }
  }
  return out;
}

/// max over shared nodes of the L2 distance between the two paths. The grids
/// and time grids must be identical; no interpolation.
template <typename Scalar>
Scalar sup_distance(const TrajectoryT<Scalar>& a, const TrajectoryT<Scalar>& b) {
  detail::require(a.tg == b.tg, "sup_distance: mismatched time grids");
  detail::require(a.fields.size() == b.fields.size(),
                  "sup_distance: mismatched node counts");
  detail::require_same_grid(a.grid(), b.grid(), "sup_distance");
  Scalar best = 0;
  for (std::size_t k = 0; k < a.fields.size(); ++k)
    best = std::max(best, l2_distance(a.fields[k], b.fields[k]));
  return best;
}

using TimeGrid = TimeGridT<double>;
using Forcing = ForcingT<double>;
using Trajectory = TrajectoryT<double>;
using FlowError = FlowErrorT<double>;

}  // namespace plap
