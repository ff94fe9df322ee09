#pragma once

#include "yamabe/greens.hpp"
#include "yamabe/halfspace.hpp"
#include "yamabe/linear_solver.hpp"
#include "yamabe/pohozaev.hpp"

#include <string>
#include <vector>

namespace yamabe {

// "none" or "multiplicative_sin": u (1 + amplitude sin z_1).
struct PerturbationSpec {
  std::string kind = "none";
  double amplitude = 0.0;
  double bound = 0.1;  // amplitudes at or above this are rejected
  static PerturbationSpec from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

// Fields u_i on a fixed chart B+_delta, blowing up at the origin.
struct BlowupSequence {
  int n = 3;
  double kappa = 0.0;
  double chart_radius = 1.0;
  std::string kind;  // one_bubble | two_bubble | constant | slowed_decay
  std::vector<double> bubble_eps;  // construction parameter (empty for constants)
  std::vector<ScalarField> fields;
  std::vector<double> M;    // u_i(0)
  std::vector<double> eps;  // M_i^{-2/(n-2)}
  // Further concentration points (boundary points, length n) sampled by the audits.
  std::vector<Vec> extra_centres;
  PerturbationSpec perturbation;
  double max_residual = 0;  // max relative residual of the half-space system at sample points
  std::size_t size() const { return fields.size(); }
  nlohmann::ordered_json to_json() const;
};

// u_i = U with eps_i, kappa at the origin, optionally perturbed. Throws ParameterError
// unless eps is strictly decreasing and positive.
BlowupSequence synth_blowup_sequence(double kappa, const std::vector<double>& eps, const PerturbationSpec& pert = {},
                                     int n = 3, double chart_radius = 1.0, int residual_samples = 200,
                                     std::uint64_t seed = 1);
// U_{eps_i} at the origin plus U_{scale * eps_i} centred at `offset` (length n-1 boundary point).
// offset = 0 with scale >> 1 gives concentric bubbles at separated scales.
BlowupSequence two_bubble_sequence(double kappa, const std::vector<double>& eps, const Vec& offset, double scale,
                                   int n = 3, double chart_radius = 1.0);
BlowupSequence constant_sequence(const std::vector<double>& values, int n = 3, double chart_radius = 1.0);
// eps^{-(n-2)/2} (1 + |z|^2/eps^2)^{-(n-2)/4}: peak like a bubble, decay |z|^{-(n-2)/2} only.
BlowupSequence slowed_decay_sequence(const std::vector<double>& eps, int n = 3, double chart_radius = 1.0);

// v(y) = eps^{(n-2)/2} u(eps y).
ScalarField rescale(const ScalarField& u, double eps);
// lambda^{(n-2)/2} U_kappa(lambda y), lambda = 1 - kappa (peak value 1).
ScalarField limit_profile(double kappa, int n);

struct ConvergenceRow {
  std::size_t i = 0;
  double R = 0;
  bool truncated = false;
  double c0 = 0, c1 = 0, c2 = 0;  // max |D^s (v_i - profile)| over the samples
};
struct ConvergenceAudit {
  std::vector<ConvergenceRow> rows;
  bool use_lambda = true;
  nlohmann::ordered_json to_json() const;
};

// Compares v_i with the limit profile on B+_{R_i}; R empty gives R_i = eps_i^{-1/2} / 4.
// use_lambda = false compares with U_kappa itself (negative control).
ConvergenceAudit bubble_convergence_audit(const BlowupSequence& seq, const std::vector<double>& R = {},
                                          bool use_lambda = true, int samples = 400, std::uint64_t seed = 3);

struct IsolatedOptions {
  int per_decade = 24;
  int order = 8;  // hemisphere rule per shell
  double r_min = 0;  // 0: min eps_i * 1e-3
};

// sup of u(z) |z|^{(n-2)/2} over hemispherical shells |z| = delta 10^{-k/per_decade} >= r_min,
// around the origin and each of `centres`.
double isolated_constant(const ScalarField& u, double delta, const std::vector<Vec>& centres,
                         const IsolatedOptions& opt, double r_min);

struct GrowthFit {
  double slope = 0;  // d log C / d log M (or per index when M is not increasing)
  bool bounded = false;
};

struct IsolatedBound {
  double delta = 0;
  std::vector<double> C;
  GrowthFit growth;
  nlohmann::ordered_json to_json() const;
};

IsolatedBound isolated_bound_constant(const BlowupSequence& seq, double delta, const IsolatedOptions& opt = {});

struct SphericalAverage {
  double ubar = 0, w = 0, dw = 0;
  double dw_error = 0;  // order-halving difference
};

// ubar(r) = 2 / (sigma_{n-1} r^{n-1}) int_{S+_r} u, w = r^{(n-2)/2} ubar, dw = w'(r).
SphericalAverage spherical_average_w(const ScalarField& u, double r, int order = 16);

struct SimpleOptions {
  int per_decade = 16;
  int max_refinements = 4;
  int order = 16;
  double r_min_factor = 1e-3;  // ladder starts at r_min_factor * eps_i
};

struct SimpleRow {
  std::size_t i = 0;
  int count = 0;
  std::vector<double> critical_radii;  // bracket midpoints of sign changes of w'
  bool post_negative = false;
  Verdict verdict = Verdict::indeterminate;
  int refinements = 0;
};

struct SimpleCheck {
  double delta = 0;
  std::vector<SimpleRow> rows;
  int first_index = -1;  // all rows from here on pass (-1: none)
  Verdict verdict = Verdict::indeterminate;
  nlohmann::ordered_json to_json() const;
};

SimpleCheck simple_blowup_check(const BlowupSequence& seq, double delta, const SimpleOptions& opt = {});

struct SimpleBoundsRow {
  std::size_t i = 0;
  double r_i = 0;
  double upper = 0;  // sup M u |z|^{n-2}
  double lower = 0;  // inf M u / G
  std::size_t nodes = 0;
  bool empty = false;
};

struct SimpleBounds {
  double delta = 0;
  std::vector<SimpleBoundsRow> rows;
  GrowthFit upper_growth, lower_decay;
  nlohmann::ordered_json to_json() const;
};

// Constants over the grid nodes of G in the annulus r_i <= |z| < delta, r_i = R_i eps_i with
// R_i = R_factor eps_i^{-1/2}.
SimpleBounds simple_bounds_audit(const BlowupSequence& seq, const GreenField& G, double delta,
                                 double R_factor = 0.25);

struct RefinedOptions {
  double radius = 10.0;        // y-grid radius (at most delta / eps_i)
  double audit_radius = 5.0;   // norms over |y| <= audit_radius
  int cells = 20;
  double h0 = 0.1;
  double growth_slope = 0.25;  // "grows" when the log-log slope in 1/eps exceeds this
  NewtonOptions newton;
};

// v_i solved on the rescaled Fermi-synthetic metric g(eps_i y), flat profile solved on the
// same grid, correction terms around the rescaled profile.
struct RefinedSequence {
  Mat pi0;
  double kappa = 0.5;
  std::vector<double> eps;
  std::shared_ptr<const HalfBallGrid> grid;
  Vec profile;              // discrete flat solution
  std::vector<Vec> v;
  std::vector<int> newton_iterations;
  std::vector<double> newton_residuals;
};

RefinedSequence solve_refined_sequence(const Mat& pi0, double kappa, const std::vector<double>& eps,
                                       const RefinedOptions& opt = {});
// Correction specs matching the sequence (pi0, eps_i, profile scale 1/lambda).
std::vector<CorrectionSpec> matching_corrections(const RefinedSequence& seq);

struct RefinedRow {
  double eps = 0;
  double with_phi[3] = {0, 0, 0};     // sup (1+|y|)^s |D^s (v - U_h - phi)| / eps
  double without_phi[3] = {0, 0, 0};  // same without phi
};

struct RefinedAudit {
  std::vector<RefinedRow> rows;
  double slope_with[3] = {0, 0, 0}, slope_without[3] = {0, 0, 0};  // d log norm / d log(1/eps)
  bool bounded_with[3] = {false, false, false};
  bool grows_without[3] = {false, false, false};
  nlohmann::ordered_json to_json() const;
};

// Throws PreconditionError when a correction spec does not match (pi0, eps_i).
RefinedAudit refined_approx_audit(const RefinedSequence& seq, const std::vector<CorrectionSpec>& specs,
                                  const std::vector<CorrectionResult>& phis, const RefinedOptions& opt = {});

// G_i = M_i u_i.
std::vector<ScalarField> green_candidates(const BlowupSequence& seq);

// sign_restriction_experiment on green_candidates, plus C = max_{i,r} |P(u_i, r)| / (eps_i r)
// with the half-space constants K = -n(n-2) kappa, c = n-2.
struct BlowupSignExperiment {
  SignExperiment experiment;
  double scaling_constant = 0;
  nlohmann::ordered_json to_json() const;
};
BlowupSignExperiment blowup_sign_experiment(const BlowupSequence& seq, const std::vector<double>& radii,
                                            double tolerance = 1e-6, double convergence_tol = 1e-2, int order = 24);

}  // namespace yamabe
