#pragma once

#include "yamabe/geometry.hpp"
#include "yamabe/halfspace.hpp"

namespace yamabe {

// Hyperboloid H_kappa = {<z,z> = -r_kappa^2, z_0 > 0} in R^{1,n}, curvature -4 kappa.
// Points are stored with the time coordinate first: (z_0, z_1, ..., z_n).
double r_kappa(double kappa);
double minkowski(const Vec& a, const Vec& b);
double hyperboloid_defect(double kappa, const Vec& z);  // |<z,z> + r_kappa^2| / r_kappa^2

enum class RadiusRule { coth, cosh };

// Geodesic ball D_{t0} = {z in H_kappa : z_0 < r_kappa cosh t0}.
struct GeodesicBallSpec {
  double kappa = 0.25;
  double t0 = 0.0;
  int n = 3;

  double rk() const { return r_kappa(kappa); }
  double boundary_radius() const;  // r(z) on the boundary sphere, r_kappa sinh t0

  // coth t0 = 2 r_kappa (matches the boundary coefficient 2); cosh t0 = 2 r_kappa is the
  // alternative reading, kept to show that it fails.
  static GeodesicBallSpec with_rule(double kappa, int n, RadiusRule rule = RadiusRule::coth);
  // {"kappa": k, "t0": "auto" | number, "rule": "coth" | "cosh", "n": 3}
  static GeodesicBallSpec from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

// Ball model: conformal factor (1 - kappa(|xi'|^2 + (xi_n + 1)^2))^{-2}.
double ball_conformal_factor(double kappa, const Vec& xi);
Mat ball_metric(double kappa, const Vec& xi);

// F(y) = (y', y_n + 1) / (|y'|^2 + (y_n + 1)^2) - e_n; an involution.
Vec map_F(const Vec& y);
Vec map_F_inv(const Vec& x);
Mat map_F_jacobian(const Vec& y);

// Max componentwise relative error of F^* g_H against U_kappa^{4/(n-2)} delta.
VerificationReport pullback_audit(double kappa, const std::vector<Vec>& samples, double tolerance = 1e-8);

// Isometry gamma_kappa from the ball model to H_kappa. The hyperbolic centre of
// B^n (Euclidean ball of radius 1/2 about -e_n/2) goes to (r_kappa, 0, ..., 0)
// and B^n goes onto D_{t0} with tanh t0 = sqrt(kappa).
Vec ball_to_hyperboloid(double kappa, const Vec& xi);
Vec hyperboloid_to_ball(double kappa, const Vec& z);
Mat ball_to_hyperboloid_jacobian(double kappa, const Vec& xi);  // (n+1) x n
Vec ball_hyperbolic_center(double kappa, int n);
double ball_geodesic_radius_t0(double kappa);  // artanh(sqrt(kappa))
Vec map_F_kappa(double kappa, const Vec& y);

// Induced metric of H_kappa in the graph chart z_0 = sqrt(r_kappa^2 + |x|^2).
MetricField hyperboloid_graph_metric(double kappa, int n);
Vec graph_chart_point(double kappa, const Vec& x);  // x -> (z_0, x)

// Inward unit co-normal to the boundary sphere of D_{t0} at z.
Vec conormal(const GeodesicBallSpec& spec, const Vec& z);

// Ambient coordinate z_a as a field on the graph chart; a = 0 is the time coordinate.
ScalarField ambient_coordinate_field(double kappa, int n, int a);

// Residuals of a chart field f at the Minkowski point z. Interior:
// Delta_H f - c f; boundary (only when z lies on dD_{t0}): d_nu f + beta f.
ResidualPair ball_eigen_residual(const GeodesicBallSpec& spec, const ScalarField& f, double c, double beta,
                                 const Vec& z);
// f = z_a (a = 1..n) or the time coordinate (a = 0); c = n r_kappa^{-2}, beta = r_kappa^{-1} coth t0.
// Every ambient coordinate, z_0 included, solves the interior equation; z_0 fails the boundary one.
ResidualPair coordinate_eigenfunction_residual(const GeodesicBallSpec& spec, int a, const Vec& z);
// c = 4 n kappa, beta = 2.
ResidualPair transported_eigen_residual(const GeodesicBallSpec& spec, int a, const Vec& z);

// Random points of D_{t0} (interior) and of its boundary sphere, in Minkowski form.
std::vector<Vec> sample_geodesic_ball(const GeodesicBallSpec& spec, int count, Rng& rng);
std::vector<Vec> sample_geodesic_sphere(const GeodesicBallSpec& spec, int count, Rng& rng);

struct BallEigenResult {
  int degree = 0;
  int basis_size = 0;
  std::vector<double> eigenvalues;  // sorted by |mu|
  double threshold = 0;
  int kernel_count = 0;
  std::vector<double> fit_residuals;  // relative L2 misfit of kernel vectors vs span{z_a}
  double boundary_coefficient = 0;    // r_kappa^{-1} coth t0 of the ball actually used
  // |r_kappa^{-1} coth t0 - 2|: nonzero when (kappa, t0) is incompatible, in which
  // case the coordinate functions cannot be in the kernel.
  double coordinate_boundary_defect = 0;
};

// Rayleigh-Ritz discretisation of Delta_H f - c f = 0 in D_{t0}, d_nu f + 2 f = 0,
// c = coefficient_scale * 4 n kappa, over polynomials of total degree <= degree in
// the graph chart.
BallEigenResult discrete_ball_eigenproblem(const GeodesicBallSpec& spec, int degree,
                                           double coefficient_scale = 1.0);

}  // namespace yamabe
