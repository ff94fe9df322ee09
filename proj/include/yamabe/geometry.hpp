#pragma once

#include "yamabe/common.hpp"
#include "yamabe/report.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace yamabe {

enum class DerivMode { analytic, finite_difference };

// Default finite-difference step: h = rel_step * (1 + |z|), central stencils.
inline constexpr double kDefaultFdStep = 1e-5;

// A real function on a chart of R^n with value, gradient and Hessian access.
class ScalarField {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;

  ScalarField() = default;
  static ScalarField analytic(int n, ValueFn f, GradFn grad, HessFn hess);
  static ScalarField finite_difference(int n, ValueFn f, double rel_step = kDefaultFdStep);
  static ScalarField constant(int n, double c);
  static ScalarField coordinate(int n, int a);        // z_a, 0-based a
  static ScalarField squared_norm(int n);              // |z|^2

  int dim() const { return n_; }
  DerivMode mode() const { return mode_; }
  double fd_step() const { return step_; }

  double value(const Vec& z) const;
  Vec gradient(const Vec& z) const;
  Mat hessian(const Vec& z) const;
  double operator()(const Vec& z) const { return value(z); }

  // Same values, derivatives by central differences.
  ScalarField with_finite_differences(double rel_step = kDefaultFdStep) const;

  // a*u + b*v, analytic when both operands are.
  static ScalarField linear_combination(double a, const ScalarField& u, double b, const ScalarField& v);
  // u / xi, analytic when both operands are.
  static ScalarField quotient(const ScalarField& u, const ScalarField& xi);

 private:
  int n_ = 0;
  DerivMode mode_ = DerivMode::analytic;
  double step_ = kDefaultFdStep;
  ValueFn f_;
  GradFn grad_;
  HessFn hess_;
};

// Chart-level Riemannian metric. First derivatives are stored as dg[c](a,b) =
// d_c g_ab and second derivatives as ddg[c*n+d](a,b) = d_c d_d g_ab.
class MetricField {
 public:
  using MatFn = std::function<Mat(const Vec&)>;
  using DerivFn = std::function<std::vector<Mat>(const Vec&)>;

  MetricField() = default;
  static MetricField analytic(int n, MatFn g, DerivFn dg, DerivFn ddg, bool fermi,
                              std::string kind = "custom",
                              nlohmann::ordered_json params = nlohmann::ordered_json::object());
  static MetricField finite_difference(int n, MatFn g, bool fermi, double rel_step = kDefaultFdStep,
                                       std::string kind = "custom",
                                       nlohmann::ordered_json params = nlohmann::ordered_json::object());

  static MetricField euclidean(int n);
  // g_jl = delta_jl - 2 pi_jl z_n + beta_jl |z|^2, g_jn = 0, g_nn = 1.
  static MetricField fermi_synthetic(int n, const Mat& pi, const Mat& beta);
  // g = dz_n^2 + exp(-2 b z_n) |dz'|^2: a horoball of curvature -b^2 in Fermi form.
  static MetricField fermi_horospherical(int n, double b);

  // {"kind": "euclidean" | "conformal" | "fermi_synthetic" | "fermi_horospherical", ...}
  static MetricField from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;

  int dim() const { return n_; }
  bool is_fermi() const { return fermi_; }
  DerivMode mode() const { return mode_; }
  const std::string& kind() const { return kind_; }

  Mat metric(const Vec& z) const;
  std::vector<Mat> first_derivatives(const Vec& z) const;
  std::vector<Mat> second_derivatives(const Vec& z) const;

  MetricField with_finite_differences(double rel_step = kDefaultFdStep) const;

 private:
  friend MetricField conformal_change(const MetricField&, const ScalarField&);
  int n_ = 0;
  bool fermi_ = false;
  DerivMode mode_ = DerivMode::analytic;
  double step_ = kDefaultFdStep;
  std::string kind_ = "custom";
  nlohmann::ordered_json params_ = nlohmann::ordered_json::object();
  MatFn g_;
  DerivFn dg_;
  DerivFn ddg_;
};

// xi^{4/(n-2)} g. Throws DomainError where xi <= 0.
MetricField conformal_change(const MetricField& g, const ScalarField& xi);

struct BoundaryGeometry {
  Mat pi;    // second fundamental form, (n-1)x(n-1)
  double h;  // mean curvature, trace of pi w.r.t. the induced metric over n-1
  Vec eta;   // inward unit normal (contravariant components)
};

// gamma[c](a,b) = Gamma^c_ab
std::vector<Mat> christoffel(const Mat& ginv, const std::vector<Mat>& dg);

double scalar_curvature(const MetricField& g, const Vec& z);
double laplace_beltrami(const MetricField& g, const ScalarField& u, const Vec& z);
double conformal_laplacian(const MetricField& g, const ScalarField& u, const Vec& z);

BoundaryGeometry boundary_geometry(const MetricField& g, const Vec& zbar);
double conformal_boundary_operator(const MetricField& g, const BoundaryGeometry& bg,
                                   const ScalarField& u, const Vec& zbar);
double conformal_boundary_operator(const MetricField& g, const ScalarField& u, const Vec& zbar);

// Residuals of L_{xi^p g}(u/xi) = xi^{-(n+2)/(n-2)} L_g u at interior samples and
// of B_{xi^p g}(u/xi) = xi^{-n/(n-2)} B_g u at boundary samples.
VerificationReport check_conformal_law(const MetricField& g, const ScalarField& xi, const ScalarField& u,
                                       const std::vector<Vec>& interior, const std::vector<Vec>& boundary,
                                       double tolerance = 1e-6);

struct FermiAuditOptions {
  double radius = 0.1;      // largest sample radius
  int levels = 4;           // dyadic radii radius, radius/2, ...
  int directions = 12;      // sample directions per radius
  std::uint64_t seed = 7;
  double coefficient_tol = 1e-8;
};

// Checks g_jl = delta - 2 pi z_n + O(|z|^2) and the determinant expansion.
VerificationReport fermi_expansion_audit(const MetricField& g, const Mat& pi0, const FermiAuditOptions& opt = {});

}  // namespace yamabe
