#include "yamabe/halfspace.hpp"

#include <doctest.h>

#include <cmath>

using namespace yamabe;

namespace {

// Bubble written out independently of the library.
double bubble_oracle(double kappa, double eps, const Vec& c, const Vec& y) {
  const int n = int(y.size());
  double d = 0;
  for (int j = 0; j < n - 1; ++j) d += (y(j) - c(j)) * (y(j) - c(j));
  d += (y(n - 1) + eps) * (y(n - 1) + eps) - eps * eps * kappa;
  return std::pow(eps / d, 0.5 * (n - 2));
}

Vec point(Rng& rng, int n, bool boundary) {
  Vec y(n);
  for (int j = 0; j < n - 1; ++j) y(j) = rng.uniform(-2, 2);
  y(n - 1) = boundary ? 0.0 : rng.uniform(0, 2);
  return y;
}

}  // namespace

TEST_CASE("bubble values and gradients agree with the written-out formula") {
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    BubbleParams b;
    b.n = 3 + t % 3;
    b.kappa = rng.uniform(0.05, 0.95);
    b.eps = rng.uniform(0.2, 3);
    b.center = Vec(b.n - 1);
    for (int j = 0; j < b.n - 1; ++j) b.center(j) = rng.uniform(-1, 1);
    const Vec y = point(rng, b.n, false);
    const PointEval e = eval_bubble(b, y);
    CHECK(e.value == doctest::Approx(bubble_oracle(b.kappa, b.eps, b.center, y)).epsilon(1e-13));
    for (int a = 0; a < b.n; ++a) {
      const double h = 1e-5;
      Vec yp = y, ym = y;
      yp(a) += h;
      ym(a) -= h;
      const double fd = (bubble_oracle(b.kappa, b.eps, b.center, yp) - bubble_oracle(b.kappa, b.eps, b.center, ym)) / (2 * h);
      CHECK(e.grad(a) == doctest::Approx(fd).epsilon(1e-7).scale(e.value));
    }
  }
}

TEST_CASE("bubble solves the half-space system at random points") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    BubbleParams b = BubbleParams::canonical(rng.uniform(0.01, 0.99), 3 + t % 3);
    b.eps = rng.uniform(0.1, 10);
    for (int k = 0; k < 50; ++k) {
      const ResidualPair r = residual_system(b, point(rng, b.n, k % 2 == 0));
      CHECK(r.interior_rel < 1e-10);
      if (r.has_boundary()) CHECK(r.boundary_rel < 1e-10);
    }
  }
}

TEST_CASE("bubble peak is (eps (1 - kappa))^{-(n-2)/2}") {
  for (int n : {3, 4, 5})
    for (double k : {0.1, 0.5, 0.9}) {
      BubbleParams b = BubbleParams::canonical(k, n);
      b.eps = 0.3;
      CHECK(eval_bubble(b, Vec::Zero(n)).value == doctest::Approx(std::pow(0.3 * (1 - k), -0.5 * (n - 2))));
    }
}

TEST_CASE("horosphere: y_n reading solves the system, y_1 reading fails on the boundary") {
  Rng rng(5);
  HorosphereParams h;
  h.eps = 0.4;
  double printed = 0;
  for (int k = 0; k < 200; ++k) {
    Vec y = point(rng, 3, k % 2 == 0);
    y(0) = std::abs(y(0));
    const ResidualPair r = residual_horosphere(h, y);
    CHECK(r.interior_rel < 1e-10);
    if (r.has_boundary()) CHECK(r.boundary_rel < 1e-10);
    HorosphereParams p = h;
    p.reading = HorosphereReading::printed;
    const ResidualPair q = residual_horosphere(p, y);
    if (q.has_boundary()) printed = std::max(printed, q.boundary_rel);
  }
  CHECK(printed > 0.1);
}

TEST_CASE("Jacobi fields are translation and dilation derivatives of the bubble") {
  const double kappa = 0.4;
  const Vec c = Vec::Zero(2);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Vec y = point(rng, 3, false);
    const double h = 1e-5;
    // J_1 = d/ds U(y - s e_1) at s = 0 up to sign: the library uses d U / d y_1
    Vec yp = y, ym = y;
    yp(0) += h;
    ym(0) -= h;
    const double j1 = (bubble_oracle(kappa, 1, c, yp) - bubble_oracle(kappa, 1, c, ym)) / (2 * h);
    CHECK(eval_jacobi_field(1, kappa, y) == doctest::Approx(j1).epsilon(1e-7).scale(1));
    // J_3 = d/dt t^{1/2} U(t y) at t = 1
    const double j3 = (std::sqrt(1 + h) * bubble_oracle(kappa, 1, c, (1 + h) * y) -
                       std::sqrt(1 - h) * bubble_oracle(kappa, 1, c, (1 - h) * y)) / (2 * h);
    CHECK(eval_jacobi_field(3, kappa, y) == doctest::Approx(j3).epsilon(1e-7).scale(1));
  }
}

TEST_CASE("Jacobi fields solve the linearized system") {
  Rng rng(9);
  for (int n : {3, 4}) {
    const BubbleParams b = BubbleParams::canonical(0.6, n);
    for (int a = 1; a <= n; ++a) {
      const ScalarField J = jacobi_field(b, a);
      for (int k = 0; k < 40; ++k) {
        const ResidualPair r = linearized_residual(J, b, point(rng, n, k % 2 == 0));
        CHECK(r.interior_rel < 1e-9);
        if (r.has_boundary()) CHECK(r.boundary_rel < 1e-9);
      }
    }
  }
}

TEST_CASE("invalid bubble parameters are rejected") {
  BubbleParams b = BubbleParams::canonical(0.5, 3);
  b.eps = -1;
  CHECK_THROWS_AS(eval_bubble(b, Vec::Zero(3)), ParameterError);
}
