#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace plap {

enum class BoundaryMode { Dirichlet, Neumann };

inline const char* to_string(BoundaryMode bc) {
  return bc == BoundaryMode::Dirichlet ? "dirichlet" : "neumann";
}

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}
}  // namespace detail

/// Axis-aligned box grid with cell-centered unknowns.
///
/// Cells along axis a have width spacing(a) = lengths[a] / cells[a]; cell
/// (ix, iy) is centered at ((ix + 1/2) h0, (iy + 1/2) h1) and cell values are
/// stored row-major with the x index fastest. The boundary mode fixes the
/// ghost closure used by grad/div: zero ghosts (Dirichlet) or reflecting
/// ghosts (Neumann, no-flux).
template <typename Scalar>
struct GridT {
  using Vector = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  int dim = 1;
  std::array<Eigen::Index, 2> cells{1, 1};
  std::array<Scalar, 2> lengths{Scalar(1), Scalar(1)};
  BoundaryMode bc = BoundaryMode::Dirichlet;

  static GridT line(Eigen::Index n, Scalar length, BoundaryMode bc) {
    detail::require(n >= 1, "GridT::line: cell count must be >= 1");
    detail::require(std::isfinite(length) && length > 0,
                    "GridT::line: length must be positive and finite");
    GridT g;
    g.dim = 1;
    g.cells = {n, 1};
    g.lengths = {length, Scalar(1)};
    g.bc = bc;
    return g;
  }

  static GridT box(Eigen::Index nx, Eigen::Index ny, Scalar lx, Scalar ly,
                   BoundaryMode bc) {
    detail::require(nx >= 1 && ny >= 1, "GridT::box: cell counts must be >= 1");
    detail::require(std::isfinite(lx) && lx > 0 && std::isfinite(ly) && ly > 0,
                    "GridT::box: lengths must be positive and finite");
    GridT g;
    g.dim = 2;
    g.cells = {nx, ny};
    g.lengths = {lx, ly};
    g.bc = bc;
    return g;
  }

  Scalar spacing(int axis) const { return lengths[axis] / Scalar(cells[axis]); }

  Scalar min_spacing() const {
    return dim == 1 ? spacing(0) : std::min(spacing(0), spacing(1));
  }

  Eigen::Index cell_count() const { return cells[0] * cells[1]; }

  Scalar cell_volume() const {
    return dim == 1 ? spacing(0) : spacing(0) * spacing(1);
  }

  Scalar center(int axis, Eigen::Index i) const {
    return (Scalar(i) + Scalar(0.5)) * spacing(axis);
  }

  /// Faces normal to `axis`, boundary faces included: axis 0 has
  /// (nx + 1) * ny faces, axis 1 has nx * (ny + 1).
  Eigen::Index face_count(int axis) const {
    if (axis == 0) return (cells[0] + 1) * (dim == 2 ? cells[1] : 1);
    return cells[0] * (cells[1] + 1);
  }

  Eigen::Index cell_index(Eigen::Index ix, Eigen::Index iy = 0) const {
    return iy * cells[0] + ix;
  }

  friend bool operator==(const GridT&, const GridT&) = default;
};

/// One real value per cell; a point of L2 over the grid's box.
template <typename Scalar>
struct FieldT {
  using Vector = typename GridT<Scalar>::Vector;

  GridT<Scalar> grid;
  Vector values;

  static FieldT zero(const GridT<Scalar>& g) {
    return FieldT{g, Vector::Zero(g.cell_count())};
  }

  static FieldT constant(const GridT<Scalar>& g, Scalar c) {
    detail::require(std::isfinite(c), "FieldT::constant: value must be finite");
    return FieldT{g, Vector::Constant(g.cell_count(), c)};
  }
};

/// Samples f(x) in 1D or f(x, y) in 2D at cell centers.
template <typename Scalar, typename Fn>
FieldT<Scalar> sample(const GridT<Scalar>& g, Fn&& f) {
  FieldT<Scalar> out = FieldT<Scalar>::zero(g);
  if (g.dim == 1) {
    for (Eigen::Index i = 0; i < g.cells[0]; ++i)
      out.values[i] = f(g.center(0, i), Scalar(0));
  } else {
    for (Eigen::Index iy = 0; iy < g.cells[1]; ++iy)
      for (Eigen::Index ix = 0; ix < g.cells[0]; ++ix)
        out.values[g.cell_index(ix, iy)] = f(g.center(0, ix), g.center(1, iy));
  }
  return out;
}

/// Per-face values, one array per axis, boundary faces included. Faces normal
/// to axis 0 are indexed iy * (nx + 1) + jx with jx in [0, nx]; faces normal
/// to axis 1 are indexed jy * nx + ix with jy in [0, ny]. Face jx sits between
/// cells jx - 1 and jx (ghosts outside).
template <typename Scalar>
struct FaceFieldT {
  using Vector = typename GridT<Scalar>::Vector;

  GridT<Scalar> grid;
  std::array<Vector, 2> axis;

  static FaceFieldT zero(const GridT<Scalar>& g) {
    FaceFieldT out;
    out.grid = g;
    out.axis[0] = Vector::Zero(g.face_count(0));
    out.axis[1] = g.dim == 2 ? Vector::Zero(g.face_count(1)) : Vector();
    return out;
  }
};

namespace detail {
template <typename Scalar>
void require_same_grid(const GridT<Scalar>& a, const GridT<Scalar>& b,
                       const char* what) {
  if (!(a == b))
    throw std::invalid_argument(std::string(what) + ": grid mismatch");
}
}  // namespace detail

/// L2 inner product with midpoint-rule weight (cell volume). The reduction is
/// a sequential sum in storage order.
template <typename Scalar>
Scalar l2_inner(const FieldT<Scalar>& a, const FieldT<Scalar>& b) {
  detail::require_same_grid(a.grid, b.grid, "l2_inner");
  return (a.values * b.values).sum() * a.grid.cell_volume();
}

template <typename Scalar>
Scalar l2_norm(const FieldT<Scalar>& a) {
  return std::sqrt(a.values.square().sum() * a.grid.cell_volume());
}

template <typename Scalar>
Scalar l2_distance(const FieldT<Scalar>& a, const FieldT<Scalar>& b) {
  detail::require_same_grid(a.grid, b.grid, "l2_distance");
  return std::sqrt((a.values - b.values).square().sum() * a.grid.cell_volume());
}

/// Face inner product, same volume element as l2_inner so that grad and -div
/// are exact adjoints of each other.
template <typename Scalar>
Scalar face_inner(const FaceFieldT<Scalar>& a, const FaceFieldT<Scalar>& b) {
  detail::require_same_grid(a.grid, b.grid, "face_inner");
  Scalar acc = (a.axis[0] * b.axis[0]).sum();
  if (a.grid.dim == 2) acc += (a.axis[1] * b.axis[1]).sum();
  return acc * a.grid.cell_volume();
}

/// Forward-difference gradient onto faces. Interior face jx carries
/// (u[jx] - u[jx-1]) / h. Dirichlet boundary faces read a zero ghost on the
/// outside; Neumann boundary faces carry 0 (reflecting ghost, no flux).
template <typename Scalar>
void grad(const FieldT<Scalar>& u, FaceFieldT<Scalar>& out) {
  const GridT<Scalar>& g = u.grid;
  detail::require_same_grid(g, out.grid, "grad");
  const bool zero_ghost = g.bc == BoundaryMode::Dirichlet;
  const Eigen::Index nx = g.cells[0];
  if (g.dim == 1) {
    const Scalar inv_h = Scalar(1) / g.spacing(0);
    auto& f = out.axis[0];
    const auto& v = u.values;
    f.segment(1, nx - 1) = (v.tail(nx - 1) - v.head(nx - 1)) * inv_h;
    f[0] = zero_ghost ? v[0] * inv_h : Scalar(0);
    f[nx] = zero_ghost ? -v[nx - 1] * inv_h : Scalar(0);
    return;
  }
  const Eigen::Index ny = g.cells[1];
  const Scalar inv_hx = Scalar(1) / g.spacing(0);
  const Scalar inv_hy = Scalar(1) / g.spacing(1);
  auto& fx = out.axis[0];
  auto& fy = out.axis[1];
  const auto& v = u.values;
  for (Eigen::Index iy = 0; iy < ny; ++iy) {
    const Eigen::Index row = iy * nx;
    const Eigen::Index frow = iy * (nx + 1);
    fx.segment(frow + 1, nx - 1) =
        (v.segment(row + 1, nx - 1) - v.segment(row, nx - 1)) * inv_hx;
    fx[frow] = zero_ghost ? v[row] * inv_hx : Scalar(0);
    fx[frow + nx] = zero_ghost ? -v[row + nx - 1] * inv_hx : Scalar(0);
  }
  for (Eigen::Index jy = 1; jy < ny; ++jy)
    fy.segment(jy * nx, nx) =
        (v.segment(jy * nx, nx) - v.segment((jy - 1) * nx, nx)) * inv_hy;
  fy.segment(0, nx) = zero_ghost ? (v.segment(0, nx) * inv_hy).eval()
                                 : FieldT<Scalar>::Vector::Zero(nx).eval();
  fy.segment(ny * nx, nx) =
      zero_ghost ? (-v.segment((ny - 1) * nx, nx) * inv_hy).eval()
                 : FieldT<Scalar>::Vector::Zero(nx).eval();
}

template <typename Scalar>
FaceFieldT<Scalar> grad(const FieldT<Scalar>& u) {
  FaceFieldT<Scalar> out = FaceFieldT<Scalar>::zero(u.grid);
  grad(u, out);
  return out;
}

/// Negative adjoint of grad: l2_inner(div(g), u) == -face_inner(g, grad(u))
/// for every pair, both boundary modes. In Neumann mode the stored boundary
/// face values are ignored (treated as zero flux); in Dirichlet mode they
/// enter the stencil.
template <typename Scalar>
void div(const FaceFieldT<Scalar>& gf, FieldT<Scalar>& out) {
  const GridT<Scalar>& g = gf.grid;
  detail::require_same_grid(g, out.grid, "div");
  const bool use_boundary = g.bc == BoundaryMode::Dirichlet;
  const Eigen::Index nx = g.cells[0];
  if (g.dim == 1) {
    const Scalar inv_h = Scalar(1) / g.spacing(0);
    const auto& f = gf.axis[0];
    auto& v = out.values;
    v = (f.tail(nx) - f.head(nx)) * inv_h;
    if (!use_boundary) {
      if (nx == 1) {
        v[0] = Scalar(0);
      } else {
        v[0] = f[1] * inv_h;
        v[nx - 1] = -f[nx - 1] * inv_h;
      }
    }
    return;
  }
  const Eigen::Index ny = g.cells[1];
  const Scalar inv_hx = Scalar(1) / g.spacing(0);
  const Scalar inv_hy = Scalar(1) / g.spacing(1);
  const auto& fx = gf.axis[0];
  const auto& fy = gf.axis[1];
  auto& v = out.values;
  for (Eigen::Index iy = 0; iy < ny; ++iy) {
    const Eigen::Index row = iy * nx;
    const Eigen::Index frow = iy * (nx + 1);
    v.segment(row, nx) =
        (fx.segment(frow + 1, nx) - fx.segment(frow, nx)) * inv_hx;
    if (!use_boundary) {
      if (nx == 1) {
        v[row] = Scalar(0);
      } else {
        v[row] = fx[frow + 1] * inv_hx;
        v[row + nx - 1] = -fx[frow + nx - 1] * inv_hx;
      }
    }
  }
  for (Eigen::Index jy = 0; jy < ny; ++jy) {
    const Eigen::Index row = jy * nx;
    const bool low = jy == 0;
    const bool high = jy == ny - 1;
    if (use_boundary || (!low && !high)) {
      v.segment(row, nx) +=
          (fy.segment((jy + 1) * nx, nx) - fy.segment(jy * nx, nx)) * inv_hy;
    } else if (low && high) {
      continue;  // single row: both y-faces are no-flux
    } else if (low) {
      v.segment(row, nx) += fy.segment(nx, nx) * inv_hy;
    } else {
      v.segment(row, nx) += -fy.segment(jy * nx, nx) * inv_hy;
    }
  }
}

template <typename Scalar>
FieldT<Scalar> div(const FaceFieldT<Scalar>& gf) {
  FieldT<Scalar> out = FieldT<Scalar>::zero(gf.grid);
  div(gf, out);
  return out;
}

using Grid = GridT<double>;
using Field = FieldT<double>;
using FaceField = FaceFieldT<double>;

}  // namespace plap
