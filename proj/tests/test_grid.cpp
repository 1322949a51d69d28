#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "plap/field_io.hpp"
#include "plap/grid.hpp"
#include "plap/rng.hpp"

using namespace plap;

namespace {

Field random_on(const Grid& g, Rng& rng) {
  return random_field(g, rng, -1.0, 1.0);
}

FaceField random_faces(const Grid& g, Rng& rng) {
  FaceField f = FaceField::zero(g);
  for (int a = 0; a < g.dim; ++a)
    for (Eigen::Index i = 0; i < f.axis[a].size(); ++i)
      f.axis[a][i] = rng.uniform(-1.0, 1.0);
  return f;
}

double face_l1_mass(const FaceField& f) {
  double acc = f.axis[0].abs().sum();
  if (f.grid.dim == 2) acc += f.axis[1].abs().sum();
  return acc * f.grid.cell_volume();
}

}  // namespace

TEST_CASE("l2_inner basics") {
  const Grid g = Grid::line(4, 1.0, BoundaryMode::Dirichlet);
  const Field zero = Field::zero(g);
  const Field ones = Field::constant(g, 1.0);
  CHECK(l2_inner(zero, ones) == 0.0);
  CHECK(l2_inner(ones, ones) == doctest::Approx(1.0).epsilon(1e-14));

  Rng rng(7);
  const Field a = random_on(g, rng);
  const Field b = random_on(g, rng);
  CHECK(l2_inner(a, b) == doctest::Approx(l2_inner(b, a)).epsilon(1e-14));
  Field a2 = a;
  a2.values *= 2.0;
  CHECK(l2_inner(a2, b) == doctest::Approx(2.0 * l2_inner(a, b)).epsilon(1e-13));
  CHECK(l2_inner(a, a) > 0.0);
}

TEST_CASE("l2_inner midpoint rule integrates sin^2 exactly") {
  const Grid g = Grid::line(100, 1.0, BoundaryMode::Dirichlet);
  const Field s = sample(g, [](double x, double) {
    return std::sin(std::numbers::pi * x);
  });
  // the midpoint sum of sin^2(pi x) telescopes to exactly 1/2
  CHECK(l2_inner(s, s) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("l2_inner rejects grid mismatch") {
  const Grid a = Grid::line(4, 1.0, BoundaryMode::Dirichlet);
  const Grid b = Grid::line(5, 1.0, BoundaryMode::Dirichlet);
  CHECK_THROWS_AS(l2_inner(Field::zero(a), Field::zero(b)),
                  std::invalid_argument);
}

TEST_CASE("grad of constants") {
  SUBCASE("neumann: flat everywhere") {
    for (int dim : {1, 2}) {
      const Grid g = dim == 1 ? Grid::line(6, 1.0, BoundaryMode::Neumann)
                              : Grid::box(4, 3, 1.0, 2.0, BoundaryMode::Neumann);
      const FaceField f = grad(Field::constant(g, 3.25));
      CHECK(f.axis[0].abs().maxCoeff() == 0.0);
      if (dim == 2) CHECK(f.axis[1].abs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("dirichlet 1D: zero ghosts load the boundary faces") {
    const Eigen::Index n = 8;
    const Grid g = Grid::line(n, 1.0, BoundaryMode::Dirichlet);
    const double c = 0.7;
    const double h = g.spacing(0);
    const FaceField f = grad(Field::constant(g, c));
    CHECK(f.axis[0][0] == doctest::Approx(c / h).epsilon(1e-14));
    CHECK(f.axis[0][n] == doctest::Approx(-c / h).epsilon(1e-14));
    CHECK(f.axis[0].segment(1, n - 1).abs().maxCoeff() == 0.0);
  }
  SUBCASE("dirichlet: total face mass of a constant is c * perimeter") {
    const double c = 1.3;
    const Grid g1 = Grid::line(16, 1.0, BoundaryMode::Dirichlet);
    CHECK(face_l1_mass(grad(Field::constant(g1, c))) ==
          doctest::Approx(2.0 * c).epsilon(1e-13));
    const Grid g2 = Grid::box(8, 12, 1.0, 1.5, BoundaryMode::Dirichlet);
    CHECK(face_l1_mass(grad(Field::constant(g2, c))) ==
          doctest::Approx(c * 2.0 * (1.0 + 1.5)).epsilon(1e-13));
  }
}

TEST_CASE("grad of linear data has unit interior slope") {
  const Eigen::Index n = 16;
  const Grid g = Grid::line(n, 1.0, BoundaryMode::Neumann);
  const Field u = sample(g, [](double x, double) { return x; });
  const FaceField f = grad(u);
  CHECK(f.axis[0][0] == 0.0);
  CHECK(f.axis[0][n] == 0.0);
  for (Eigen::Index j = 1; j < n; ++j)
    CHECK(f.axis[0][j] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("div basics") {
  const Grid g = Grid::line(10, 1.0, BoundaryMode::Neumann);
  CHECK(div(FaceField::zero(g)).values.abs().maxCoeff() == 0.0);

  // interior faces 1, boundary faces 0: mass piles up at the end cells
  FaceField f = FaceField::zero(g);
  f.axis[0].segment(1, g.cells[0] - 1).setConstant(1.0);
  const Field d = div(f);
  const double inv_h = static_cast<double>(g.cells[0]);
  CHECK(d.values[0] == doctest::Approx(inv_h).epsilon(1e-14));
  CHECK(d.values[g.cells[0] - 1] == doctest::Approx(-inv_h).epsilon(1e-14));
  CHECK(d.values.segment(1, g.cells[0] - 2).abs().maxCoeff() == 0.0);
}

TEST_CASE("grad/div adjointness") {
  Rng rng(42);
  for (BoundaryMode bc : {BoundaryMode::Dirichlet, BoundaryMode::Neumann}) {
    for (int dim : {1, 2}) {
      const Grid g = dim == 1 ? Grid::line(64, 1.0, bc)
                              : Grid::box(5, 5, 1.0, 0.7, bc);
      for (int trial = 0; trial < 25; ++trial) {
        const Field u = random_on(g, rng);
        const FaceField gf = random_faces(g, rng);
        const double lhs = face_inner(grad(u), gf);
        const double rhs = -l2_inner(u, div(gf));
        const double scale = std::abs(lhs) + std::abs(rhs) + 1e-30;
        CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
      }
    }
  }
}

TEST_CASE("adjointness survives the float instantiation") {
  using GridF = GridT<float>;
  using FieldF = FieldT<float>;
  using FaceF = FaceFieldT<float>;
  const GridF g = GridF::box(6, 4, 1.0f, 1.0f, BoundaryMode::Dirichlet);
  Rng rng(3);
  FieldF u = FieldF::zero(g);
  for (Eigen::Index i = 0; i < u.values.size(); ++i)
    u.values[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  FaceF f = FaceF::zero(g);
  for (int a = 0; a < 2; ++a)
    for (Eigen::Index i = 0; i < f.axis[a].size(); ++i)
      f.axis[a][i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  const float lhs = face_inner(grad(u), f);
  const float rhs = -l2_inner(u, div(f));
  CHECK(std::abs(lhs - rhs) <= 1e-4f * (std::abs(lhs) + std::abs(rhs) + 1.0f));
}

TEST_CASE("field csv round trip") {
  for (int dim : {1, 2}) {
    const Grid g = dim == 1 ? Grid::line(7, 2.0, BoundaryMode::Neumann)
                            : Grid::box(3, 4, 1.0, 1.0, BoundaryMode::Dirichlet);
    Rng rng(11);
    const Field f = random_on(g, rng);
    std::stringstream buf;
    write_field_csv(buf, f);
    const Field back = read_field_csv(buf, g);
    CHECK((back.values == f.values).all());  // %.17g round-trips doubles
  }
}

TEST_CASE("field csv rejects malformed input") {
  const Grid g = Grid::line(2, 1.0, BoundaryMode::Dirichlet);
  {
    std::stringstream buf("x,value\n0.25,1\n");
    CHECK_THROWS(read_field_csv(buf, g));  // row count mismatch
  }
  {
    std::stringstream buf("wrong,header\n0.25,1\n0.75,2\n");
    CHECK_THROWS(read_field_csv(buf, g));
  }
  {
    std::stringstream buf("x,value\n0.25,abc\n0.75,2\n");
    CHECK_THROWS(read_field_csv(buf, g));
  }
}
