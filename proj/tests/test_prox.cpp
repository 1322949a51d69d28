#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "plap/prox.hpp"
#include "plap/rng.hpp"
#include "support/oracles.hpp"

using namespace plap;

TEST_CASE("prox_power_magnitude closed forms") {
  CHECK(prox_power_magnitude(0.3, 0.5, 1.0) == 0.0);  // below the threshold
  CHECK(prox_power_magnitude(1.0, 1.0, 2.0) == doctest::Approx(0.5));
  // p = 3, s = 2, tau = 1: rho + rho^2 = 2 has the unique root 1
  CHECK(prox_power_magnitude(2.0, 1.0, 3.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prox_power_magnitude(0.0, 0.7, 1.4) == 0.0);
}

TEST_CASE("prox_power_magnitude agrees with the bisection oracle") {
  // p = 1.5, s = 1, tau = 1: root of rho + sqrt(rho) = 1
  const double newton = prox_power_magnitude(1.0, 1.0, 1.5);
  const double bisect = oracle::prox_bisect(1.0, 1.0, 1.5);
  CHECK(std::abs(newton - bisect) <= 1e-10);

  for (double p : {1.0, 1.1, 1.5, 2.0, 3.0, 4.0})
    for (double tau : {0.01, 0.1, 1.0})
      for (int i = 0; i <= 40; ++i) {
        const double s = 0.25 * i;
        CHECK(std::abs(prox_power_magnitude(s, tau, p) -
                       oracle::prox_bisect(s, tau, p)) <= 1e-10);
      }
}

TEST_CASE("prox_power_magnitude monotonicity") {
  for (double p : {1.0, 1.3, 2.0, 3.5}) {
    double prev = -1.0;
    for (int i = 0; i <= 60; ++i) {
      const double s = 0.1 * i;
      const double rho = prox_power_magnitude(s, 0.3, p);
      CHECK(rho >= prev - 1e-13);  // nondecreasing in s
      prev = rho;
    }
    double prev_tau = std::numeric_limits<double>::infinity();
    for (double tau : {0.01, 0.1, 0.5, 1.0, 4.0}) {
      const double rho = prox_power_magnitude(2.0, tau, p);
      CHECK(rho <= prev_tau + 1e-13);  // nonincreasing in tau
      prev_tau = rho;
    }
  }
}

TEST_CASE("prox_power_magnitude rejects bad input") {
  CHECK_THROWS_AS(prox_power_magnitude(-1.0, 1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(prox_power_magnitude(1.0, 0.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(prox_power_magnitude(1.0, 1.0, 0.9), std::invalid_argument);
}

namespace {

ProxParams tight_params(double tau, double gap_tol = 1e-12,
                        int max_iters = 400000) {
  ProxParams params;
  params.tau = tau;
  params.gap_tol = gap_tol;
  params.max_iters = max_iters;
  return params;
}

double step_error_bound(double tau, const ProxReport& report) {
  // strong convexity of the step objective: ||u - u*||^2 <= 2 tau gap
  return std::sqrt(2.0 * tau * std::max(report.final_gap, 0.0));
}

}  // namespace

TEST_CASE("resolvent with a vanishing step is the identity") {
  const Grid g = Grid::line(16, 1.0, BoundaryMode::Dirichlet);
  const Field w = sample(g, [](double x, double) {
    return std::sin(std::numbers::pi * x);
  });
  for (double p : {1.0, 2.0}) {
    auto [u, report] =
        resolvent(EnergySpec(p, g), w, tight_params(1e-8, 1e-10));
    CHECK(report.converged);
    CHECK(l2_distance(u, w) <= 1e-6 * l2_norm(w));
  }
}

TEST_CASE("neumann resolvent fixes constants") {
  const Grid g = Grid::box(6, 5, 1.0, 1.0, BoundaryMode::Neumann);
  const Field w = Field::constant(g, 2.5);
  for (double p : {1.0, 1.5, 3.0}) {
    auto [u, report] = resolvent(EnergySpec(p, g), w, tight_params(0.5));
    CHECK(report.converged);
    CHECK((u.values - 2.5).abs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("dirichlet TV resolvent of a constant sinks it by twice the step") {
  const Grid g = Grid::line(8, 1.0, BoundaryMode::Dirichlet);
  const Field w = Field::constant(g, 1.0);
  const double tau = 0.1;
  auto [u, report] = resolvent(EnergySpec(1.0, g), w, tight_params(tau));
  CHECK(report.converged);
  // constant profile at height c - 2 tau
  CHECK((u.values - 0.8).abs().maxCoeff() <= 1e-5);
  // independent high-accuracy convex solve of the same step problem
  const Field ref = oracle::resolvent_smoothed(1.0, w, tau);
  CHECK(l2_distance(u, ref) <= 1e-5);
}

TEST_CASE("p=2 resolvent matches the direct linear solve") {
  for (BoundaryMode bc : {BoundaryMode::Dirichlet, BoundaryMode::Neumann}) {
    const Grid g = Grid::box(8, 8, 1.0, 1.0, bc);
    const Field w = sample(g, [](double x, double y) {
      const double pi = std::numbers::pi;
      return std::sin(pi * x) * std::sin(pi * y) + 0.3 * x;
    });
    const double tau = 0.001;
    auto [u, report] =
        resolvent(EnergySpec(2.0, g), w, tight_params(tau, 1e-14, 2000000));
    CHECK(report.converged);
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(g.cell_count(), g.cell_count()) +
        tau * oracle::laplacian_matrix(g);
    const Eigen::VectorXd exact = a.ldlt().solve(w.values.matrix());
    const double rel = (u.values.matrix() - exact).norm() / exact.norm();
    CHECK(rel <= 1e-8);
  }
}

TEST_CASE("resolvent is nonexpansive") {
  Rng rng(23);
  for (BoundaryMode bc : {BoundaryMode::Dirichlet, BoundaryMode::Neumann}) {
    const Grid g = Grid::line(24, 1.0, bc);
    for (double p : {1.0, 1.2, 2.0, 3.0}) {
      const EnergySpec spec(p, g);
      const double tau = 0.2;
      for (int trial = 0; trial < 3; ++trial) {
        const Field w1 = random_field(g, rng, -1.0, 1.0);
        const Field w2 = random_field(g, rng, -1.0, 1.0);
        auto [u1, r1] = resolvent(spec, w1, tight_params(tau));
        auto [u2, r2] = resolvent(spec, w2, tight_params(tau));
        const double slack =
            10.0 * (step_error_bound(tau, r1) + step_error_bound(tau, r2));
        CHECK(l2_distance(u1, u2) <= l2_distance(w1, w2) + slack);
      }
    }
  }
}

TEST_CASE("resolvent optimality via the subgradient inequality") {
  // w - u+ in tau * d(energy)(u+): energy(v) >= energy(u+) + <(w-u+)/tau, v-u+>
  Rng rng(29);
  const Grid g = Grid::line(16, 1.0, BoundaryMode::Dirichlet);
  for (double p : {1.0, 1.5, 2.5}) {
    const EnergySpec spec(p, g);
    const double tau = 0.3;
    const Field w = random_field(g, rng, -1.0, 1.0);
    auto [u, report] = resolvent(spec, w, tight_params(tau));
    const double slack =
        10.0 * step_error_bound(tau, report) * grad_norm_bound(g) + 1e-8;
    for (int trial = 0; trial < 10; ++trial) {
      const Field v = random_field(g, rng, -1.0, 1.0);
      Field diff = Field::zero(g);
      diff.values = v.values - u.values;
      Field slope = Field::zero(g);
      slope.values = (w.values - u.values) / tau;
      CHECK(energy(spec, v) >=
            energy(spec, u) + l2_inner(slope, diff) - slack);
    }
  }
}

TEST_CASE("pd_gap properties") {
  Rng rng(31);
  const Grid g = Grid::box(8, 8, 1.0, 1.0, BoundaryMode::Dirichlet);
  const double tau = 0.05;

  SUBCASE("vanishes at the exact saddle point (p = 2)") {
    const Field w = random_field(g, rng, -1.0, 1.0);
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(g.cell_count(), g.cell_count()) +
        tau * oracle::laplacian_matrix(g);
    Field ustar = Field::zero(g);
    ustar.values = a.ldlt().solve(w.values.matrix()).array();
    const FaceField gstar = grad(ustar);
    CHECK(std::abs(pd_gap(EnergySpec(2.0, g), w, ustar, gstar, tau)) <= 1e-10);
  }

  SUBCASE("nonnegative at random feasible pairs") {
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      const EnergySpec spec(p, g);
      for (int trial = 0; trial < 25; ++trial) {
        const Field w = random_field(g, rng, -1.0, 1.0);
        const Field u = random_field(g, rng, -1.0, 1.0);
        FaceField dual = FaceField::zero(g);
        for (int a2 = 0; a2 < g.dim; ++a2)
          for (Eigen::Index i = 0; i < dual.axis[a2].size(); ++i)
            dual.axis[a2][i] = rng.uniform(-0.5, 0.5);
        CHECK(pd_gap(spec, w, u, dual, tau) >= -1e-12);
      }
    }
  }

  SUBCASE("dominates the squared distance to the minimizer (p = 2)") {
    const Field w = random_field(g, rng, -1.0, 1.0);
    const EnergySpec spec(2.0, g);
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(g.cell_count(), g.cell_count()) +
        tau * oracle::laplacian_matrix(g);
    Field ustar = Field::zero(g);
    ustar.values = a.ldlt().solve(w.values.matrix()).array();
    for (int trial = 0; trial < 10; ++trial) {
      const Field u = random_field(g, rng, -1.0, 1.0);
      FaceField dual = grad(ustar);
      const double gap = pd_gap(spec, w, u, dual, tau);
      const double primal =
          energy(spec, u) + l2_distance(u, w) * l2_distance(u, w) / (2 * tau);
      const double dist2 = l2_distance(u, ustar) * l2_distance(u, ustar);
      // relative gap times max(1, primal) bounds dist^2 / (2 tau)
      CHECK(gap * std::max(1.0, std::abs(primal)) >= dist2 / (2 * tau) - 1e-10);
    }
  }
}

TEST_CASE("warm starts resume near the solution") {
  const Grid g = Grid::line(32, 1.0, BoundaryMode::Dirichlet);
  Rng rng(37);
  const Field w = random_field(g, rng, -1.0, 1.0);
  const EnergySpec spec(1.5, g);
  ProxState state = ProxState::cold(w);
  auto [u1, r1] = resolvent(spec, w, tight_params(0.1), &state);
  auto [u2, r2] = resolvent(spec, w, tight_params(0.1), &state);
  CHECK(r2.iterations == 0);  // gap already below tolerance at entry
  CHECK(l2_distance(u1, u2) == 0.0);
}

TEST_CASE("resolvent failure carries the report") {
  const Grid g = Grid::line(32, 1.0, BoundaryMode::Dirichlet);
  Rng rng(41);
  const Field w = random_field(g, rng, -1.0, 1.0);
  ProxParams params = tight_params(0.5, 1e-13, 3);
  CHECK_THROWS_AS(resolvent(EnergySpec(1.0, g), w, params), ResolventError);
  try {
    resolvent(EnergySpec(1.0, g), w, params);
  } catch (const ResolventError& e) {
    CHECK(e.report.iterations == 3);
    CHECK(!e.report.converged);
    CHECK(e.report.final_gap > 1e-13);
  }
}

TEST_CASE("step size product above the operator bound is rejected") {
  const Grid g = Grid::line(8, 1.0, BoundaryMode::Dirichlet);
  ProxParams params = tight_params(0.1);
  params.primal_step = 1.0;
  params.dual_step = 1.0;  // product 1 > 1/L^2
  CHECK_THROWS_AS(resolvent(EnergySpec(2.0, g), Field::zero(g), params),
                  std::invalid_argument);
}
