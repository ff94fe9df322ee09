#include "yamabe/blowup.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>

using namespace yamabe;

TEST_CASE("sequence construction: peaks, eps and validation") {
  const BlowupSequence s = synth_blowup_sequence(0.5, {0.1, 0.05, 0.02});
  REQUIRE(s.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(s.M[i] == doctest::Approx(std::pow(s.bubble_eps[i] * 0.5, -0.5)));
    CHECK(s.eps[i] == doctest::Approx(s.bubble_eps[i] * 0.5));
  }
  CHECK(s.max_residual < 1e-10);
  CHECK_THROWS_AS(synth_blowup_sequence(0.5, {0.1, 0.2}), ParameterError);
  PerturbationSpec p;
  p.kind = "multiplicative_sin";
  p.amplitude = 0.2;
  CHECK_THROWS_AS(synth_blowup_sequence(0.5, {0.1}, p), ParameterError);
}

TEST_CASE("rescaled bubbles equal the limit profile") {
  const double kappa = 0.3;
  const BlowupSequence s = synth_blowup_sequence(kappa, {0.01});
  const ScalarField v = rescale(s.fields[0], s.eps[0]), U = limit_profile(kappa, 3);
  CHECK(U(Vec::Zero(3)) == doctest::Approx(1.0));
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    Vec y(3);
    y << rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 5);
    CHECK(v(y) == doctest::Approx(U(y)).epsilon(1e-12));
  }
}

TEST_CASE("spherical average matches a Gauss-Kronrod oracle") {
  // For fields depending on |y'| and y_n, ubar(r) = int_0^{pi/2} u(r sin t, 0, r cos t) sin t dt.
  const BlowupSequence s = synth_blowup_sequence(0.6, {0.2});
  const ScalarField& u = s.fields[0];
  for (double r : {0.05, 0.3, 0.9}) {
    const double ubar = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double t) {
          Vec y(3);
          y << r * std::sin(t), 0, r * std::cos(t);
          return u(y) * std::sin(t);
        },
        0, kPi / 2, 10, 1e-14);
    const SphericalAverage a = spherical_average_w(u, r);
    CHECK(a.ubar == doctest::Approx(ubar).epsilon(1e-10));
    CHECK(a.w == doctest::Approx(std::sqrt(r) * ubar).epsilon(1e-10));
  }
}

TEST_CASE("w is invariant under rescaling") {
  const BlowupSequence s = synth_blowup_sequence(0.5, {0.05});
  const double e = s.eps[0];
  for (double r : {0.1, 1.0, 4.0}) {
    const double wu = spherical_average_w(s.fields[0], r * e).w;
    const double wv = spherical_average_w(rescale(s.fields[0], e), r).w;
    CHECK(wu == doctest::Approx(wv).epsilon(1e-10));
  }
}

TEST_CASE("exact sequences are isolated simple blow-ups") {
  const BlowupSequence s = synth_blowup_sequence(0.5, {0.1, 0.05, 0.025});
  CHECK(isolated_bound_constant(s, 0.5).growth.bounded);
  const SimpleCheck c = simple_blowup_check(s, 1.0);
  CHECK(c.verdict == Verdict::pass);
  for (const auto& row : c.rows) CHECK(row.count == 1);
}

TEST_CASE("two concentric bubbles fail the simple check") {
  const BlowupSequence s = two_bubble_sequence(0.5, {0.01, 0.005}, Vec::Zero(2), 200.0);
  for (const auto& row : simple_blowup_check(s, 1.0).rows) CHECK(row.count >= 2);
}

TEST_CASE("constant sequences have flat isolated constants") {
  const BlowupSequence s = constant_sequence({1.0, 2.0, 3.0});
  const IsolatedBound b = isolated_bound_constant(s, 0.5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(b.C[i] == doctest::Approx(s.M[i] * std::sqrt(0.5)));
}

TEST_CASE("refined audit rejects mismatched correction terms") {
  Mat pi0(2, 2);
  pi0 << 0.2, 0, 0, -0.2;
  RefinedOptions o;
  o.cells = 8;
  const RefinedSequence seq = solve_refined_sequence(pi0, 0.5, {0.1, 0.05}, o);
  auto specs = matching_corrections(seq);
  std::vector<CorrectionResult> phis;
  for (const auto& s : specs) phis.push_back(solve_correction_term(s, *seq.grid));
  specs[1].eps = 0.07;
  CHECK_THROWS_AS(refined_approx_audit(seq, specs, phis, o), PreconditionError);
}
