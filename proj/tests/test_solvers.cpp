#include "yamabe/greens.hpp"
#include "yamabe/linear_solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace yamabe;

TEST_CASE("cutoff is a monotone C2 step from 1 to 0") {
  CHECK(cutoff_chi(0.1, 5.0) == 1.0);
  CHECK(cutoff_chi(0.1, 25.0) == 0.0);
  CHECK(cutoff_chi(1.0, 1.5) == doctest::Approx(0.5));
  double prev = 1;
  for (double r = 0.9; r < 2.1; r += 0.01) {
    const double c = cutoff_chi(1.0, r);
    CHECK(c <= prev + 1e-15);
    prev = c;
  }
}

TEST_CASE("correction term: zero source gives zero, non-trace-free pi0 is rejected") {
  GridSpec gs;
  gs.n = 3;
  gs.radius = 10;
  gs.cells = 8;
  gs.stretch = GridSpec::stretch_for(10, 8, 0.2);
  const HalfBallGrid grid(gs);
  CorrectionSpec s;
  s.pi0 = Mat::Zero(2, 2);
  const CorrectionResult r = solve_correction_term(s, grid);
  CHECK(r.phi.cwiseAbs().maxCoeff() == 0.0);
  s.pi0 = Mat::Identity(2, 2);
  CHECK_THROWS_AS(solve_correction_term(s, grid), PreconditionError);
}

TEST_CASE("correction term is linear in pi0 and normalized at the origin") {
  GridSpec gs;
  gs.n = 3;
  gs.radius = 10;
  gs.cells = 10;
  gs.stretch = GridSpec::stretch_for(10, 10, 0.15);
  const HalfBallGrid grid(gs);
  auto solve = [&](const Mat& pi) {
    CorrectionSpec s;
    s.pi0 = pi;
    s.eps = 0.01;
    s.closure = SphereClosure::homogeneous();
    return solve_correction_term(s, grid);
  };
  Mat A(2, 2), B(2, 2);
  A << 1, 0, 0, -1;
  B << 0, 0.5, 0.5, 0;
  const CorrectionResult a = solve(A), b = solve(B), ab = solve(A + B);
  CHECK((ab.phi - a.phi - b.phi).cwiseAbs().maxCoeff() < 1e-10 * ab.sup_norm);
  CHECK(std::abs(a.phi_at_origin) < 1e-10 * a.sup_norm);
  CHECK(std::abs(a.d1_at_origin) < 1e-10 * a.sup_norm);
  CHECK(std::abs(a.d2_at_origin) < 1e-10 * a.sup_norm);
}

TEST_CASE("Euclidean mixed Green's function converges to |z|^-1 - 1/delta") {
  double prev = 1e300;
  for (int cells : {12, 16}) {
    GridSpec gs;
    gs.n = 3;
    gs.cells = cells;
    gs.stretch = GridSpec::stretch_for(1.0, cells, 0.0125);
    const GreenField G = solve_green_mixed(MetricField::euclidean(3), 1.0, 0.05, gs);
    double err = 0;
    for (std::size_t i = 0; i < G.grid->size(); ++i) {
      const double r = G.grid->node(i).norm();
      if (r >= 0.25 && r <= 0.5) err = std::max(err, std::abs(G.values(i) - euclidean_green(G.grid->node(i), 1.0)));
    }
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("expansion of an explicit field recovers its constant") {
  GridSpec gs;
  gs.n = 3;
  gs.cells = 10;
  gs.stretch = GridSpec::stretch_for(1.0, 10, 0.02);
  const double A = 0.37;
  const GreenField G = GreenField::from_field(
      ScalarField::finite_difference(3, [A](const Vec& z) { return 1 / z.norm() + A; }), gs, 1.0);
  CHECK(extract_expansion(G, 3).A == doctest::Approx(A).epsilon(1e-8));
}
