#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "plap/grid.hpp"

namespace plap {

/// Exponent p >= 1 plus the boundary mode of the grid it lives on. p = 1 is
/// the total-variation endpoint; in Dirichlet mode the energy of the
/// zero-extended field includes the boundary jump mass.
template <typename Scalar>
struct EnergySpecT {
  Scalar p;
  BoundaryMode bc;
  GridT<Scalar> grid;

  EnergySpecT(Scalar p_, const GridT<Scalar>& grid_)
      : EnergySpecT(p_, grid_.bc, grid_) {}

  EnergySpecT(Scalar p_, BoundaryMode bc_, const GridT<Scalar>& grid_)
      : p(p_), bc(bc_), grid(grid_) {
    detail::require(std::isfinite(p) && p >= Scalar(1),
                    "EnergySpecT: p must be finite and >= 1");
    detail::require(bc == grid.bc,
                    "EnergySpecT: boundary mode inconsistent with grid");
  }

  /// q = p / (p - 1); +inf at p = 1.
  Scalar conjugate_exponent() const { return p / (p - Scalar(1)); }
};

namespace detail {

// The energy integrand is a sum over gradient groups partitioning the stored
// faces. A cell couples its forward face per axis into one Euclidean
// magnitude as long as those faces are interior; every boundary face is a
// group of its own (it carries the jump of the ghost closure, and keeping it
// separate makes the Dirichlet energy split exactly into the Neumann energy
// plus the boundary trace mass). Reduction order: cells row-major, then
// x-boundary faces by row, then y-boundary faces by column.
template <typename Scalar, typename Fn>
Scalar reduce_gradient_groups(const FaceFieldT<Scalar>& g, Fn&& fn) {
  const GridT<Scalar>& grid = g.grid;
  const Eigen::Index nx = grid.cells[0];
  Scalar acc = 0;
  if (grid.dim == 1) {
    for (Eigen::Index j = 1; j < nx; ++j) acc += fn(std::abs(g.axis[0][j]));
    acc += fn(std::abs(g.axis[0][0]));
    acc += fn(std::abs(g.axis[0][nx]));
    return acc;
  }
  const Eigen::Index ny = grid.cells[1];
  const auto& fx = g.axis[0];
  const auto& fy = g.axis[1];
  for (Eigen::Index iy = 0; iy < ny; ++iy) {
    const Eigen::Index frow = iy * (nx + 1);
    const bool has_y = iy + 1 < ny;
    for (Eigen::Index ix = 0; ix < nx; ++ix) {
      const bool has_x = ix + 1 < nx;
      if (has_x && has_y)
        acc += fn(std::hypot(fx[frow + ix + 1], fy[(iy + 1) * nx + ix]));
      else if (has_x)
        acc += fn(std::abs(fx[frow + ix + 1]));
      else if (has_y)
        acc += fn(std::abs(fy[(iy + 1) * nx + ix]));
    }
  }
  for (Eigen::Index iy = 0; iy < ny; ++iy) {
    acc += fn(std::abs(fx[iy * (nx + 1)]));
    acc += fn(std::abs(fx[iy * (nx + 1) + nx]));
  }
  for (Eigen::Index ix = 0; ix < nx; ++ix) {
    acc += fn(std::abs(fy[ix]));
    acc += fn(std::abs(fy[ny * nx + ix]));
  }
  return acc;
}

// Applies g -> scale(|g|_group) * g on every gradient group in place.
// scale(0) is never called; zero groups stay zero.
template <typename Scalar, typename Fn>
void scale_gradient_groups(FaceFieldT<Scalar>& g, Fn&& scale) {
  const GridT<Scalar>& grid = g.grid;
  const Eigen::Index nx = grid.cells[0];
  const auto single = [&scale](Scalar& v) {
    const Scalar m = std::abs(v);
    if (m > Scalar(0)) v *= scale(m);
  };
  if (grid.dim == 1) {
    for (Eigen::Index j = 0; j <= nx; ++j) single(g.axis[0][j]);
    return;
  }
  const Eigen::Index ny = grid.cells[1];
  auto& fx = g.axis[0];
  auto& fy = g.axis[1];
  for (Eigen::Index iy = 0; iy < ny; ++iy) {
    const Eigen::Index frow = iy * (nx + 1);
    const bool has_y = iy + 1 < ny;
    for (Eigen::Index ix = 0; ix < nx; ++ix) {
      const bool has_x = ix + 1 < nx;
      if (has_x && has_y) {
        const Eigen::Index kx = frow + ix + 1;
        const Eigen::Index ky = (iy + 1) * nx + ix;
        const Scalar m = std::hypot(fx[kx], fy[ky]);
        if (m > Scalar(0)) {
          const Scalar s = scale(m);
          fx[kx] *= s;
          fy[ky] *= s;
        }
      } else if (has_x) {
        single(fx[frow + ix + 1]);
      } else if (has_y) {
        single(fy[(iy + 1) * nx + ix]);
      }
    }
  }
  for (Eigen::Index iy = 0; iy < ny; ++iy) {
    single(fx[iy * (nx + 1)]);
    single(fx[iy * (nx + 1) + nx]);
  }
  for (Eigen::Index ix = 0; ix < nx; ++ix) {
    single(fy[ix]);
    single(fy[ny * nx + ix]);
  }
}

template <typename Scalar>
Scalar energy_of_gradient(const EnergySpecT<Scalar>& spec,
                          const FaceFieldT<Scalar>& g) {
  const Scalar p = spec.p;
  const Scalar sum = reduce_gradient_groups(
      g, [p](Scalar m) { return std::pow(m, p); });
  return sum * spec.grid.cell_volume() / p;
}

}  // namespace detail

/// (1/p) sum over cells of |per-cell gradient|^p times cell volume. At p = 1
/// this is the discrete total variation; in Dirichlet mode the low/high
/// boundary faces carry the jump of the zero extension, so the value includes
/// the boundary trace mass.
template <typename Scalar>
Scalar energy(const EnergySpecT<Scalar>& spec, const FieldT<Scalar>& u) {
  detail::require_same_grid(spec.grid, u.grid, "energy");
  return detail::energy_of_gradient(spec, grad(u));
}

/// |energy(p_n, u) - energy(1, u)| per entry of p_seq. Raw gaps only; decay
/// assertions are the caller's business.
template <typename Scalar>
std::vector<Scalar> energy_limit_gap(const FieldT<Scalar>& u,
                                     const std::vector<Scalar>& p_seq,
                                     BoundaryMode bc) {
  detail::require(!p_seq.empty(), "energy_limit_gap: p_seq must be nonempty");
  detail::require(bc == u.grid.bc,
                  "energy_limit_gap: boundary mode inconsistent with grid");
  for (Scalar p : p_seq)
    detail::require(std::isfinite(p) && p > Scalar(1),
                    "energy_limit_gap: p_seq entries must be > 1");
  const Scalar base = energy(EnergySpecT<Scalar>(Scalar(1), u.grid), u);
  std::vector<Scalar> gaps;
  gaps.reserve(p_seq.size());
  for (Scalar p : p_seq)
    gaps.push_back(std::abs(energy(EnergySpecT<Scalar>(p, u.grid), u) - base));
  return gaps;
}

/// Minimal-selection subgradient -div(|G|^{p-2} G) for p > 1, extended by the
/// zero vector wherever the per-cell gradient vanishes. At p = 2 this is the
/// 3-point (1D) / 5-point (2D) Laplacian with the grid's ghost closure.
template <typename Scalar>
FieldT<Scalar> subgradient(const EnergySpecT<Scalar>& spec,
                           const FieldT<Scalar>& u) {
  detail::require_same_grid(spec.grid, u.grid, "subgradient");
  if (!(spec.p > Scalar(1)))
    throw std::domain_error(
        "subgradient: subdifferential is set-valued at p=1; use the "
        "resolvent");
  FaceFieldT<Scalar> flux = grad(u);
  const Scalar p = spec.p;
  detail::scale_gradient_groups(
      flux, [p](Scalar m) { return std::pow(m, p - Scalar(2)); });
  FieldT<Scalar> out = div(flux);
  out.values = -out.values;
  return out;
}

using EnergySpec = EnergySpecT<double>;

}  // namespace plap
