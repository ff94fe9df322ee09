#include "yamabe/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>

using namespace yamabe;
using boost::math::quadrature::gauss_kronrod;

namespace {

double gk(const std::function<double(double)>& f, double a, double b) {
  return gauss_kronrod<double, 31>::integrate(f, a, b, 8, 1e-13);
}

double test_fn(const Vec& z) { return std::exp(0.7 * z(0) - 0.3 * z(1) + 0.5 * z(2)) / (1 + z.squaredNorm()); }

}  // namespace

TEST_CASE("hemisphere rule matches a nested Gauss-Kronrod integral") {
  const double rho = 1.3;
  const double ref = gk(
      [&](double th) {
        return gk(
            [&](double ph) {
              Vec z(3);
              z << rho * std::sin(th) * std::cos(ph), rho * std::sin(th) * std::sin(ph), rho * std::cos(th);
              return test_fn(z) * rho * rho * std::sin(th);
            },
            0, 2 * kPi);
      },
      0, kPi / 2);
  CHECK(hemisphere_rule(3, rho, 24).integrate(test_fn) == doctest::Approx(ref).epsilon(1e-11));
}

TEST_CASE("disk and half-ball rules match nested Gauss-Kronrod integrals") {
  const double rho = 0.8;
  const double disk = gk(
      [&](double r) {
        return gk(
            [&](double ph) {
              Vec z(3);
              z << r * std::cos(ph), r * std::sin(ph), 0;
              return test_fn(z) * r;
            },
            0, 2 * kPi);
      },
      0, rho);
  CHECK(disk_rule(3, rho, 24).integrate(test_fn) == doctest::Approx(disk).epsilon(1e-11));

  const double ball = gk(
      [&](double r) {
        return gk(
            [&](double th) {
              return gk(
                  [&](double ph) {
                    Vec z(3);
                    z << r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th);
                    return test_fn(z) * r * r * std::sin(th);
                  },
                  0, 2 * kPi);
            },
            0, kPi / 2);
      },
      0, rho);
  CHECK(half_ball_rule(3, rho, 16).integrate(test_fn) == doctest::Approx(ball).epsilon(1e-10));
}

TEST_CASE("rules carry the right measure") {
  CHECK(hemisphere_rule(3, 2.0, 12).total_weight() == doctest::Approx(8 * kPi));
  CHECK(equator_rule(3, 2.0, 12).total_weight() == doctest::Approx(4 * kPi));
  CHECK(disk_rule(3, 2.0, 12).total_weight() == doctest::Approx(4 * kPi));
  CHECK(half_ball_rule(3, 2.0, 12).total_weight() == doctest::Approx(16 * kPi / 3));
  CHECK(hemisphere_rule(4, 1.0, 12).total_weight() == doctest::Approx(sphere_area(3) / 2));
}

TEST_CASE("Gauss-Legendre is exact for polynomials of degree 2m-1") {
  const Rule1D r = gauss_legendre(6, 0, 2);
  double s = 0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::pow(r.x[i], 11);
  CHECK(s == doctest::Approx(std::pow(2.0, 12) / 12).epsilon(1e-13));
}

TEST_CASE("order doubling estimate shrinks for smooth integrands") {
  const QuadEstimate e = integrate_with_estimate([](int m) { return hemisphere_rule(3, 1.0, m); }, test_fn, 12);
  CHECK(e.error < 1e-10);
}
