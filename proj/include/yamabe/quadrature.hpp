#pragma once

#include "yamabe/common.hpp"

#include <functional>
#include <string>
#include <vector>

namespace yamabe {

struct Rule1D {
  std::vector<double> x, w;
};

// Gauss rules by Golub-Welsch.
Rule1D gauss_legendre(int m);
Rule1D gauss_legendre(int m, double a, double b);
// Weight (1-x)^alpha (1+x)^beta on [-1, 1].
Rule1D gauss_jacobi(int m, double alpha, double beta);

// Nodes and positive weights on a fixed domain. `order` is the nominal number
// of points per angular/radial direction.
struct QuadratureRule {
  std::string domain;
  int order = 0;
  std::vector<Vec> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  // Sum in node order; deterministic.
  double integrate(const std::function<double(const Vec&)>& f) const;
  double total_weight() const;
};

// Unit sphere S^d in R^{d+1} scaled by radius. The circle uses 4m equally spaced
// angles (k + 1/2) 2 pi / 4m, which is invariant under both coordinate
// reflections and the swap of the two axes.
QuadratureRule sphere_rule(int d, int m, double radius = 1.0);
// S^+_rho = {|z| = rho, z_n > 0} in R^n.
QuadratureRule hemisphere_rule(int n, double rho, int m);
// dD_rho = {|z| = rho, z_n = 0}, a sphere of dimension n-2.
QuadratureRule equator_rule(int n, double rho, int m);
// D_rho = {|z| < rho, z_n = 0}.
QuadratureRule disk_rule(int n, double rho, int m);
// B^+_rho = {|z| < rho, z_n > 0}.
QuadratureRule half_ball_rule(int n, double rho, int m);
// Full ball of radius rho in R^n.
QuadratureRule ball_rule(int n, double rho, int m);

struct QuadEstimate {
  double value = 0;
  double error = 0;  // |Q_{2m} - Q_m|
  int order = 0;
};

// Evaluates with orders m and 2m; the finer value is returned.
QuadEstimate integrate_with_estimate(const std::function<QuadratureRule(int)>& make_rule,
                                     const std::function<double(const Vec&)>& f, int m);

}  // namespace yamabe
