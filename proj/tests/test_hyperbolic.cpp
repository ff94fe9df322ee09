#include "yamabe/hyperbolic.hpp"

#include <doctest.h>

#include <cmath>

using namespace yamabe;

TEST_CASE("pullback of the hyperbolic metric is the bubble metric") {
  Rng rng(21);
  for (double k : {0.05, 0.5, 0.9}) {
    std::vector<Vec> ys;
    for (int i = 0; i < 20; ++i) {
      Vec y(3);
      y << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2);
      ys.push_back(y);
    }
    CHECK(pullback_audit(k, ys).verdict == Verdict::pass);
  }
}

TEST_CASE("coth rule: coordinate functions solve both eigen-equations") {
  Rng rng(4);
  for (double k : {0.25, 0.9}) {
    const GeodesicBallSpec s = GeodesicBallSpec::with_rule(k, 3, RadiusRule::coth);
    // coth t0 = 2 r_kappa, r_kappa = 1 / (2 sqrt kappa)
    CHECK(1 / std::tanh(s.t0) == doctest::Approx(1 / std::sqrt(k)));
    for (const auto& z : sample_geodesic_sphere(s, 30, rng))
      for (int a = 1; a <= 3; ++a) {
        const ResidualPair r = transported_eigen_residual(s, a, z);
        CHECK(r.interior_rel < 1e-9);
        CHECK(r.boundary_rel < 1e-9);
      }
  }
}

TEST_CASE("time coordinate solves the interior equation but not the boundary one") {
  Rng rng(8);
  const GeodesicBallSpec s = GeodesicBallSpec::with_rule(0.25, 3);
  double worst = 0;
  for (const auto& z : sample_geodesic_sphere(s, 30, rng)) {
    const ResidualPair r = coordinate_eigenfunction_residual(s, 0, z);
    CHECK(r.interior_rel < 1e-9);
    worst = std::max(worst, r.boundary_rel);
  }
  CHECK(worst > 1e-3);
}

TEST_CASE("cosh rule breaks the transported boundary condition") {
  Rng rng(8);
  const GeodesicBallSpec s = GeodesicBallSpec::with_rule(0.25, 3, RadiusRule::cosh);
  double worst = 0;
  for (const auto& z : sample_geodesic_sphere(s, 30, rng)) worst = std::max(worst, transported_eigen_residual(s, 1, z).boundary_rel);
  CHECK(worst > 1e-3);
}

TEST_CASE("Rayleigh-Ritz ball problem has an n-dimensional kernel") {
  const GeodesicBallSpec s = GeodesicBallSpec::with_rule(0.5, 3);
  CHECK(discrete_ball_eigenproblem(s, 4).kernel_count == 3);
  CHECK(discrete_ball_eigenproblem(s, 4, 1.1).kernel_count == 0);
  CHECK(discrete_ball_eigenproblem(GeodesicBallSpec::with_rule(0.25, 3, RadiusRule::cosh), 4).kernel_count == 0);
}
