#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "plap/energy.hpp"
#include "plap/grid.hpp"

namespace plap {

/// Unique minimizer over rho >= 0 of (tau/p) rho^p + (rho - s)^2 / 2.
///
/// Closed forms at p = 1 (soft shrinkage) and p = 2; otherwise the root of
/// rho + tau rho^(p-1) = s on [0, s] by Newton with a bisection safeguard
/// (the derivative of rho^(p-1) blows up at 0 for p < 2). Since the residual
/// has slope >= 1, |residual| bounds the distance to the root, so the stop
/// test is |residual| <= 1e-14 * max(1, s).
template <typename Scalar>
Scalar prox_power_magnitude(Scalar s, Scalar tau, Scalar p) {
  detail::require(std::isfinite(s) && s >= Scalar(0),
                  "prox_power_magnitude: s must be finite and >= 0");
  detail::require(std::isfinite(tau) && tau > Scalar(0),
                  "prox_power_magnitude: tau must be finite and > 0");
  detail::require(std::isfinite(p) && p >= Scalar(1),
                  "prox_power_magnitude: p must be finite and >= 1");
  if (s == Scalar(0)) return Scalar(0);
  if (p == Scalar(1)) return std::max(s - tau, Scalar(0));
  if (p == Scalar(2)) return s / (Scalar(1) + tau);

  const Scalar tol = Scalar(1e-14) * std::max(Scalar(1), s);
  Scalar lo = Scalar(0);
  Scalar hi = s;
  Scalar rho = s / (Scalar(1) + tau);
  for (int it = 0; it < 256; ++it) {
    const Scalar f = rho + tau * std::pow(rho, p - Scalar(1)) - s;
    if (std::abs(f) <= tol) return rho;
    if (f > Scalar(0))
      hi = rho;
    else
      lo = rho;
    const Scalar df =
        Scalar(1) + tau * (p - Scalar(1)) * std::pow(rho, p - Scalar(2));
    Scalar next = rho - f / df;
    if (!(next > lo && next < hi) || next == rho)
      next = (lo + hi) / Scalar(2);
    rho = next;
  }
  return rho;
}

/// Parameters of one resolvent solve. tau is the implicit time step; the
/// initial primal/dual step sizes default to 1/L with L the operator norm
/// bound of grad, and their product must stay <= 1/L^2 (the product is
/// invariant under the in-loop step schedule). theta_relax scales the
/// extrapolation; 1 is the standard choice.
template <typename Scalar>
struct ProxParamsT {
  Scalar tau = Scalar(1);
  int max_iters = 20000;
  Scalar gap_tol = Scalar(1e-10);
  Scalar primal_step = Scalar(0);  // 0: derive from the grad norm bound
  Scalar dual_step = Scalar(0);    // 0: derive
  Scalar theta_relax = Scalar(1);
  int gap_check_every = 25;
};

struct ProxReport {
  int iterations = 0;
  double final_gap = 0.0;
  bool converged = false;
};

class ResolventError : public std::runtime_error {
 public:
  ResolventError(const std::string& msg, ProxReport r)
      : std::runtime_error(msg), report(r) {}
  ProxReport report;
};

/// Primal/dual pair carried across warm-started solves.
template <typename Scalar>
struct ProxStateT {
  FieldT<Scalar> primal;
  FaceFieldT<Scalar> dual;

  static ProxStateT cold(const FieldT<Scalar>& w) {
    return ProxStateT{w, FaceFieldT<Scalar>::zero(w.grid)};
  }
};

/// sqrt(sum_a 4 / h_a^2) >= ||grad||; at most 2 sqrt(dim) / min spacing.
template <typename Scalar>
Scalar grad_norm_bound(const GridT<Scalar>& g) {
  Scalar acc = 0;
  for (int a = 0; a < g.dim; ++a) {
    const Scalar h = g.spacing(a);
    acc += Scalar(4) / (h * h);
  }
  return std::sqrt(acc);
}

namespace detail {

// Projects the dual point onto the unit-ball constraint set at p = 1; the
// identity otherwise.
template <typename Scalar>
void project_dual(const EnergySpecT<Scalar>& spec, FaceFieldT<Scalar>& g) {
  if (spec.p == Scalar(1))
    scale_gradient_groups(g, [](Scalar m) {
      return m > Scalar(1) ? Scalar(1) / m : Scalar(1);
    });
}

// Fenchel conjugate of the gradient energy at a (projected) dual point:
// vol * sum over groups of |g|^q / q for p > 1, zero for p = 1.
template <typename Scalar>
Scalar conjugate_energy(const EnergySpecT<Scalar>& spec,
                        const FaceFieldT<Scalar>& g) {
  if (spec.p == Scalar(1)) return Scalar(0);
  const Scalar q = spec.conjugate_exponent();
  const Scalar sum =
      reduce_gradient_groups(g, [q](Scalar m) { return std::pow(m, q); });
  return sum * spec.grid.cell_volume() / q;
}

template <typename Scalar>
Scalar gap_value(const EnergySpecT<Scalar>& spec, const FieldT<Scalar>& w,
                 const FieldT<Scalar>& u, const FaceFieldT<Scalar>& g,
                 Scalar tau) {
  const Scalar vol = spec.grid.cell_volume();
  const Scalar primal = energy_of_gradient(spec, grad(u)) +
                        (u.values - w.values).square().sum() * vol /
                            (Scalar(2) * tau);
  FaceFieldT<Scalar> gp = g;
  project_dual(spec, gp);
  const FieldT<Scalar> dv = div(gp);
  const Scalar dual = -conjugate_energy(spec, gp) -
                      (dv.values * w.values).sum() * vol -
                      tau / Scalar(2) * dv.values.square().sum() * vol;
  return (primal - dual) / std::max(Scalar(1), std::abs(primal));
}

}  // namespace detail

/// Relative primal-dual gap of the pair (u, g) for the resolvent problem
/// min_u energy(u) + ||u - w||^2 / (2 tau): (primal - dual) / max(1, |primal|)
/// with the Fenchel dual of the gradient splitting. Nonnegative up to
/// roundoff at any feasible pair; an infeasible dual point at p = 1 is
/// projected before evaluation.
template <typename Scalar>
Scalar pd_gap(const EnergySpecT<Scalar>& spec, const FieldT<Scalar>& w,
              const FieldT<Scalar>& u, const FaceFieldT<Scalar>& g,
              Scalar tau) {
  detail::require_same_grid(spec.grid, w.grid, "pd_gap");
  detail::require_same_grid(spec.grid, u.grid, "pd_gap");
  detail::require_same_grid(spec.grid, g.grid, "pd_gap");
  detail::require(std::isfinite(tau) && tau > Scalar(0),
                  "pd_gap: tau must be finite and > 0");
  return detail::gap_value(spec, w, u, g, tau);
}

/// Resolvent (I + tau d(energy))^{-1} w: the unique minimizer of
/// energy(u) + ||u - w||^2 / (2 tau), computed for every p >= 1 by one
/// first-order primal-dual iteration on the gradient splitting
/// min_u max_g <grad u, g> - F*(g) + ||u - w||^2/(2 tau).
///
/// Only the per-group radial prox depends on p: the dual update shrinks each
/// per-cell dual vector through the Moreau identity with
/// prox_power_magnitude (pure radial shrinkage; at p = 1 it reduces to the
/// projection onto the unit ball). The quadratic coupling is (1/tau)-strongly
/// convex, so the steps follow the matching accelerated schedule
/// theta_k = 1 / sqrt(1 + 2 t_k / tau), t <- theta t, sigma <- sigma / theta;
/// everything is fixed a priori by the operator-norm bound, no line search.
/// If `state` is supplied it seeds the iteration (warm start) and receives
/// the final pair.
///
/// Throws ResolventError carrying the report when the relative gap does not
/// reach params.gap_tol within params.max_iters iterations.
template <typename Scalar>
std::pair<FieldT<Scalar>, ProxReport> resolvent(
    const EnergySpecT<Scalar>& spec, const FieldT<Scalar>& w,
    const ProxParamsT<Scalar>& params, ProxStateT<Scalar>* state = nullptr) {
  detail::require_same_grid(spec.grid, w.grid, "resolvent");
  detail::require(std::isfinite(params.tau) && params.tau > Scalar(0),
                  "resolvent: tau must be finite and > 0");
  detail::require(params.max_iters > 0, "resolvent: max_iters must be > 0");
  detail::require(std::isfinite(params.gap_tol) && params.gap_tol > Scalar(0),
                  "resolvent: gap_tol must be finite and > 0");
  detail::require(params.gap_check_every > 0,
                  "resolvent: gap_check_every must be > 0");

  const Scalar L = grad_norm_bound(spec.grid);
  // Default balance: primal step near tau (the strong-convexity scale of the
  // quadratic coupling), dual step the rest of the 1/L^2 budget.
  const Scalar balance =
      std::clamp(params.tau * L, Scalar(1e-6), Scalar(1));
  const Scalar t =
      params.primal_step > Scalar(0) ? params.primal_step : balance / L;
  const Scalar sigma = params.dual_step > Scalar(0) ? params.dual_step
                                                    : Scalar(1) / (balance * L);
  detail::require(
      t * sigma <= (Scalar(1) + Scalar(1e-9)) / (L * L),
      "resolvent: primal_step * dual_step must be <= 1 / L^2");

  const Scalar tau = params.tau;
  const Scalar p = spec.p;

  FieldT<Scalar> u = state ? state->primal : w;
  detail::require_same_grid(u.grid, w.grid, "resolvent warm start");
  FaceFieldT<Scalar> g =
      state ? state->dual : FaceFieldT<Scalar>::zero(spec.grid);
  FieldT<Scalar> ubar = u;
  FieldT<Scalar> unew = FieldT<Scalar>::zero(spec.grid);
  FieldT<Scalar> dv = FieldT<Scalar>::zero(spec.grid);
  FaceFieldT<Scalar> gwork = FaceFieldT<Scalar>::zero(spec.grid);

  const auto radial = [sigma, p](Scalar m) {
    const Scalar rho =
        m - sigma * prox_power_magnitude(m / sigma, Scalar(1) / sigma, p);
    return rho / m;
  };

  ProxReport report;
  Scalar gap = std::numeric_limits<Scalar>::infinity();
  for (int k = 0; k < params.max_iters; ++k) {
    if (k % params.gap_check_every == 0) {
      gap = detail::gap_value(spec, w, u, g, tau);
      if (gap <= params.gap_tol) {
        report = ProxReport{k, static_cast<double>(gap), true};
        if (state) {
          state->primal = u;
          state->dual = g;
        }
        return {std::move(u), report};
      }
    }
    // dual ascent from the relaxed primal point, then radial shrinkage
    grad(ubar, gwork);
    gwork.axis[0] = g.axis[0] + sigma * gwork.axis[0];
    if (spec.grid.dim == 2) gwork.axis[1] = g.axis[1] + sigma * gwork.axis[1];
    detail::scale_gradient_groups(gwork, radial);
    std::swap(g, gwork);
    // primal descent: prox of the quadratic coupling to w
    div(g, dv);
    unew.values =
        (tau * (u.values + t * dv.values) + t * w.values) / (tau + t);
    ubar.values =
        unew.values + params.theta_relax * (unew.values - u.values);
    std::swap(u.values, unew.values);
  }
  gap = detail::gap_value(spec, w, u, g, tau);
  report = ProxReport{params.max_iters, static_cast<double>(gap),
                      gap <= params.gap_tol};
  if (state) {
    state->primal = u;
    state->dual = g;
  }
  if (!report.converged)
    throw ResolventError(
        "resolvent: primal-dual gap " + std::to_string(report.final_gap) +
            " above tolerance after " + std::to_string(params.max_iters) +
            " iterations",
        report);
  return {std::move(u), report};
}

using ProxParams = ProxParamsT<double>;
using ProxState = ProxStateT<double>;

}  // namespace plap
