#pragma once

#include "yamabe/geometry.hpp"
#include "yamabe/quadrature.hpp"

#include <string>
#include <vector>

namespace yamabe {

// P(u, rho) = P'(u, rho) + K-term + c-term, with
//   P'     = int_{S+_rho} ((n-2)/2 u u_r - r/2 |du|^2 + r u_r^2) dsigma,
//   K-term = (n-2) rho / (2n) int_{S+_rho} K u^{2n/(n-2)} dsigma,
//   c-term = (n-2) rho / (2(n-1)) int_{dD_rho} c u^{2(n-1)/(n-2)} dsigma-bar.
// Derivatives are Euclidean chart derivatives.
struct PohozaevReport {
  int n = 3;
  double rho = 0;
  double P = 0, P_prime = 0, K_term = 0, c_term = 0;
  // P' split into (n-2)/2 u u_r, -r/2 |du|^2 and r u_r^2
  double s_mixed = 0, s_gradient = 0, s_radial = 0;
  double quad_error = 0;  // order-doubling difference of P
  int order = 0;
  nlohmann::ordered_json to_json() const;
};

PohozaevReport pohozaev_P(const ScalarField& u, double rho, double K, double c, int order = 24);

// RHS = -int_{B+_rho} X (L_g - Delta) u dz - int_{D_rho} X (B_g - d_n) u dz-bar,
// X = z.grad u + (n-2)/2 u (z-bar on D_rho). `residual_volume` and `residual_flat`
// carry int X E and int X F for E = L_g u + K u^{(n+2)/(n-2)}, F = B_g u + c u^{n/(n-2)};
// P = RHS + residual_volume + residual_flat holds for every smooth u.
struct PohozaevRhs {
  double volume = 0, flat = 0, value = 0;
  double residual_volume = 0, residual_flat = 0;
  double quad_error = 0;
  int order = 0;
  nlohmann::ordered_json to_json() const;
};

PohozaevRhs pohozaev_rhs(const MetricField& g, const ScalarField& u, double rho, int order = 24, double K = 0,
                         double c = 0);

struct PohozaevCheckOptions {
  int order = 24;
  double tolerance = 1e-8;
  // Max-norm PDE residual (relative) above which P = RHS is reported as non-binding.
  double residual_threshold = 1e-6;
  int residual_samples = 400;
  std::uint64_t seed = 7;
};

// Defect |P - RHS| (binding only if u solves the system) and the identity
// defect |P - RHS - int X E - int X F| (valid for any u).
VerificationReport check_pohozaev_identity(const MetricField& g, const ScalarField& u, double K, double c, double rho,
                                           const PohozaevCheckOptions& opt = {});

// Boundary part of the mass at radius R.
struct MassPartial {
  double R = 0, sphere = 0, equator = 0, total = 0, decay = 0;  // decay = max |g - delta| on S+_R
};

struct MassReport {
  std::vector<MassPartial> partials;
  double extrapolated = 0;
  double error_bar = 0;
  double decay_order = 0;  // fitted q in |g - delta| ~ C R^{-q}
  bool decay_verified = false;
  nlohmann::ordered_json to_json() const;
};

// Sum over a of int_{S+_R} (g_ab,b - g_bb,a) y_a / |y| dsigma + sum_j int_{dD_R} g_nj y_j / |y| dsigma-bar,
// extrapolated in 1/R (quadratic fit) over the radius list.
MassReport adm_mass(const MetricField& g, const std::vector<double>& radii, int order = 24);
MassPartial adm_mass_partial(const MetricField& g, double R, int order = 24);

// n = 3:
// I = 8 int_{S+_rho} (|z|^{-1} d_a G - d_a |z|^{-1} G) z_a / |z| dsigma
//     - 12 int_{S+_rho} |z|^{-5} z_3 z_j z_l pi_jl dsigma.
double brendle_chen_I(const ScalarField& G, const Mat& pi0, double rho, int order = 24);

// Tabulates P'(G, rho) + I / 16 over the rho list and fits it to C rho |log rho|.
struct PIRow {
  double rho = 0, P_prime = 0, I = 0, defect = 0;
};
struct PIRelation {
  std::vector<PIRow> rows;
  double C = 0;
  double r_squared = 0;
  bool degenerate = false;  // defect identically ~0: fit quality not meaningful
  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
};
PIRelation check_P_I_relation(const ScalarField& G, const Mat& pi0, const std::vector<double>& rhos, int order = 24);

// Sign of liminf_{r -> 0} P'(G, r) from a fit P'(r) = a + b r |log r| + d r over the ladder.
struct SignExperiment {
  std::vector<double> radii, P_prime;
  double liminf = 0;      // the fitted a
  double fit_error = 0;   // max fit residual
  double limit_change = 0;  // relative change of P' between the last two members of the sequence
  bool violation = false;   // liminf < -tolerance
  bool aborted = false;
  std::string diagnostics;
  nlohmann::ordered_json to_json() const;
};

// `sequence` holds approximations of G (e.g. u_i(x_i) u_i); the last one is used and the
// previous one checks convergence.
SignExperiment sign_restriction_experiment(const std::vector<ScalarField>& sequence, const std::vector<double>& radii,
                                           double tolerance = 1e-6, double convergence_tol = 1e-2, int order = 24);

}  // namespace yamabe
