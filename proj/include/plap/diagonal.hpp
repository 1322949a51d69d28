#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <vector>

#include "plap/grid.hpp"

namespace plap {

/// Finite truncation of a doubly indexed sequence a[n][m] (rows n, columns m;
/// +-inf entries are legal sentinels) together with per-column limit
/// estimates b[m].
template <typename Scalar>
struct DiagonalTableT {
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> a;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> col_limits;

  Eigen::Index rows() const { return a.rows(); }
  Eigen::Index cols() const { return a.cols(); }
};

/// Diagonal selection n -> m(n) over the finite table.
///
/// For each column m (1-based), N(m) is the first row index after which
/// |a[n][m] - b[m]| <= eps_schedule[m] holds for every remaining row; a
/// column that never stabilizes gets an infinite sentinel. Then
/// m(n) = max{ m <= n : N(m') <= n for all m' <= m }, 0 if no column
/// qualifies yet. The selection is nondecreasing, never outpaces the row
/// index, and caps below any non-stabilizing column. Rows n are 1-based in
/// the returned vector's semantics: entry k corresponds to n = k + 1.
template <typename Scalar>
std::vector<Eigen::Index> diagonal_select(
    const DiagonalTableT<Scalar>& tbl, const std::vector<Scalar>& eps_schedule) {
  const Eigen::Index rows = tbl.rows();
  const Eigen::Index cols = tbl.cols();
  detail::require(rows >= 2 && cols >= 2,
                  "diagonal_select: table must be at least 2x2");
  detail::require(tbl.col_limits.size() == cols,
                  "diagonal_select: need one column limit per column");
  detail::require(static_cast<Eigen::Index>(eps_schedule.size()) == cols,
                  "diagonal_select: need one eps per column");
  for (std::size_t m = 0; m < eps_schedule.size(); ++m) {
    detail::require(eps_schedule[m] > Scalar(0),
                    "diagonal_select: eps_schedule must be positive");
    if (m > 0)
      detail::require(eps_schedule[m] <= eps_schedule[m - 1],
                      "diagonal_select: eps_schedule must be decreasing");
  }

  const Eigen::Index never = rows + 1;  // column never stabilizes
  std::vector<Eigen::Index> first_stable(static_cast<std::size_t>(cols));
  for (Eigen::Index m = 0; m < cols; ++m) {
    Eigen::Index stable_from = 0;  // 0-based row from which the column stays
    for (Eigen::Index n = rows - 1; n >= 0; --n) {
      const Scalar dev = std::abs(tbl.a(n, m) - tbl.col_limits[m]);
      const bool ok =
          std::isfinite(dev) && dev <= eps_schedule[static_cast<std::size_t>(m)];
      if (!ok) {
        stable_from = n + 1;
        break;
      }
    }
    first_stable[static_cast<std::size_t>(m)] =
        stable_from >= rows ? never : stable_from + 1;  // 1-based
  }

  // prefix_n[m] = max over m' <= m of N(m'): columns must stabilize in order.
  std::vector<Eigen::Index> prefix_n(first_stable);
  for (std::size_t m = 1; m < prefix_n.size(); ++m)
    prefix_n[m] = std::max(prefix_n[m], prefix_n[m - 1]);

  std::vector<Eigen::Index> selection(static_cast<std::size_t>(rows), 0);
  Eigen::Index m = 0;  // 1-based count of admitted columns
  for (Eigen::Index n = 1; n <= rows; ++n) {
    while (m < cols && m < n &&
           prefix_n[static_cast<std::size_t>(m)] <= n)
      ++m;
    selection[static_cast<std::size_t>(n - 1)] = m;
  }
  return selection;
}

using DiagonalTable = DiagonalTableT<double>;

}  // namespace plap
