#include "yamabe/halfspace.hpp"
#include "yamabe/pohozaev.hpp"

#include <doctest.h>

#include <cmath>

using namespace yamabe;

namespace {

// u = 1/r + f(r) with f = a + b log r in R^3.
ScalarField radial_green(double a, double b) {
  return ScalarField::analytic(
      3, [a, b](const Vec& z) { return 1 / z.norm() + a + b * std::log(z.norm()); },
      [b](const Vec& z) {
        const double r = z.norm();
        return Vec(-z / (r * r * r) + b * z / (r * r));
      },
      [b](const Vec& z) {
        const double r = z.norm();
        const Mat I = Mat::Identity(3, 3);
        return Mat(-I / std::pow(r, 3) + 3 * z * z.transpose() / std::pow(r, 5) +
                   b * (I / (r * r) - 2 * z * z.transpose() / std::pow(r, 4)));
      });
}

// For radial u on the upper hemisphere, P' = 2 pi rho^2 (u u' / 2 + rho u'^2 / 2).
double radial_P_prime(double a, double b, double rho) {
  const double u = 1 / rho + a + b * std::log(rho);
  const double du = -1 / (rho * rho) + b / rho;
  return 2 * kPi * rho * rho * (0.5 * u * du + 0.5 * rho * du * du);
}

}  // namespace

TEST_CASE("P vanishes for exact bubbles") {
  for (int n : {3, 4})
    for (double k : {0.0, 0.3, 0.8})
      for (double rho : {0.5, 1.0, 2.0}) {
        const PohozaevReport P = pohozaev_P(bubble_field(BubbleParams::canonical(k, n)), rho, -n * (n - 2.0) * k, n - 2.0);
        CHECK(std::abs(P.P) < 1e-10);
        CHECK(P.P_prime == doctest::Approx(P.s_mixed + P.s_gradient + P.s_radial).epsilon(1e-13));
      }
}

TEST_CASE("P' of radial fields matches the one-dimensional formula") {
  for (double a : {0.0, 0.4, -0.7})
    for (double b : {0.0, -0.3})
      for (double rho : {0.01, 0.1, 0.6}) {
        const PohozaevReport P = pohozaev_P(radial_green(a, b), rho, 0, 0);
        CHECK(P.P_prime == doctest::Approx(radial_P_prime(a, b, rho)).epsilon(1e-11));
      }
}

TEST_CASE("I of |z|^-1 + A is 16 pi A") {
  for (double A : {0.25, -1.0, 2.0})
    for (double rho : {1e-3, 1e-2, 1e-1})
      CHECK(brendle_chen_I(radial_green(A, 0), Mat::Zero(2, 2), rho) == doctest::Approx(16 * kPi * A).epsilon(1e-9));
}

TEST_CASE("P' + I/16 has the closed-form defect for logarithmic terms") {
  // f = a (1 - log r): defect pi rho^2 f' (f + rho f') = -pi a^2 rho |log rho| for rho < 1
  const double a = 0.2;
  for (double rho : {1e-3, 1e-2, 0.1}) {
    const ScalarField G = radial_green(a, -a);
    const double defect =
        pohozaev_P(G, rho, 0, 0).P_prime + brendle_chen_I(G, Mat::Zero(2, 2), rho) / 16;
    CHECK(defect == doctest::Approx(-kPi * a * a * rho * std::abs(std::log(rho))).epsilon(1e-8));
  }
}

TEST_CASE("P'-I fit reports the centred R^2 of the one-parameter model") {
  std::vector<double> rhos;
  for (int k = 0; k <= 10; ++k) rhos.push_back(1e-3 * std::pow(100.0, k / 10.0));
  const PIRelation exact = check_P_I_relation(radial_green(0.2, -0.2), Mat::Zero(2, 2), rhos);
  CHECK(exact.C == doctest::Approx(-kPi * 0.04).epsilon(1e-6));
  CHECK(exact.r_squared > 0.999999);
  // 0.3 log(1/r): defect 0.09 pi rho (1 + log rho), not proportional to rho |log rho|
  const PIRelation shifted = check_P_I_relation(radial_green(0, -0.3), Mat::Zero(2, 2), rhos);
  CHECK(shifted.r_squared < 0.99);
  CHECK(shifted.r_squared > 0.9);
}

TEST_CASE("ADM mass of half-Schwarzschild") {
  const double A = 0.5;
  const MetricField g = MetricField::from_json({{"kind", "conformal"}, {"n", 3}, {"factor", {{"kind", "schwarzschild"}, {"A", A}}}});
  for (double R : {10.0, 40.0}) {
    const MassPartial p = adm_mass_partial(g, R);
    // sphere term 16 pi A (1 + A/R)^3 for the factor (1 + A/R)^4
    CHECK(p.total == doctest::Approx(16 * kPi * A * std::pow(1 + A / R, 3)).epsilon(1e-6));
    CHECK(std::abs(p.equator) < 1e-12);
  }
  const MassReport m = adm_mass(g, {10, 20, 40, 80});
  CHECK(m.extrapolated == doctest::Approx(16 * kPi * A).epsilon(1e-3));
  CHECK(m.decay_verified);
  CHECK(adm_mass(MetricField::euclidean(3), {10, 20}).extrapolated == doctest::Approx(0).scale(1));
}

TEST_CASE("Pohozaev identity on a horospherical Fermi chart") {
  const int n = 3;
  const double b = 0.6;
  const MetricField g = MetricField::fermi_horospherical(n, b);
  const double h = boundary_geometry(g, Vec::Zero(n)).h;
  PohozaevCheckOptions o;
  const VerificationReport r =
      check_pohozaev_identity(g, ScalarField::constant(n, 1.0), -n * (n - 2.0) * b * b / 4, 0.5 * (n - 2.0) * h, 0.7, o);
  CHECK(r.verdict == Verdict::pass);
}

TEST_CASE("sign experiment detects a positive constant term") {
  const std::vector<double> radii{0.05, 0.1, 0.2, 0.3};
  const SignExperiment pos = sign_restriction_experiment({radial_green(0.3, 0)}, radii);
  CHECK(pos.violation);
  CHECK(pos.liminf == doctest::Approx(-0.3 * kPi).epsilon(1e-8));
  const SignExperiment neg = sign_restriction_experiment({radial_green(-0.3, 0)}, radii);
  CHECK_FALSE(neg.violation);
}
