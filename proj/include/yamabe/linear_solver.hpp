#pragma once

#include "yamabe/geometry.hpp"
#include "yamabe/halfspace.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace yamabe {

using SpMat = Eigen::SparseMatrix<double>;

enum class NodeClass { interior, flat_face, sphere_face };
std::string to_string(NodeClass c);

// Tensor-product grid restricted to B^+_R (optionally minus the ball |y| <= inner).
// Tangential axes have nodes R sinh(s k / N) / sinh(s), k = -N..N; s = stretch,
// s = 0 gives a uniform grid with spacing R / N. The y_n axis uses k = 0..N_n
// with its own cell count and stretch when those are set.
struct GridSpec {
  int n = 3;
  double radius = 1.0;
  int cells = 16;
  double stretch = 0.0;
  double inner_radius = 0.0;
  int normal_cells = 0;         // 0: same as cells
  double normal_stretch = -1;   // negative: same as stretch

  int cells_normal() const { return normal_cells > 0 ? normal_cells : cells; }
  double stretch_normal() const { return normal_stretch >= 0 ? normal_stretch : stretch; }

  static GridSpec from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
  // Stretch giving spacing ~h0 at the origin.
  static double stretch_for(double radius, int cells, double h0);
};

class HalfBallGrid {
 public:
  explicit HalfBallGrid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.n; }
  double radius() const { return spec_.radius; }
  std::string id() const;

  // Unknowns: interior and flat-face nodes.
  std::size_t size() const { return nodes_.size(); }
  const Vec& node(std::size_t i) const { return nodes_[i]; }
  NodeClass node_class(std::size_t i) const { return classes_[i]; }
  const std::vector<int>& multi_index(std::size_t i) const { return index_[i]; }
  // Points where stencil arms meet the spherical faces (class sphere_face).
  const std::vector<Vec>& sphere_points() const { return sphere_points_; }

  const std::vector<double>& axis(int d) const { return d == spec_.n - 1 ? axis_n_ : axis_t_; }
  // Offset of the origin of axis d in multi-index space.
  int axis_offset(int d) const { return d == spec_.n - 1 ? 0 : spec_.cells; }
  int lookup(const std::vector<int>& idx) const;  // -1 if the multi-index is not an unknown
  int origin() const;                             // node at y = 0, or -1

  double min_spacing() const;
  double max_spacing() const;
  // Control volumes: products of half-sums of neighbouring arms; the flat face
  // gets half cells.
  const Vec& weights() const { return weights_; }

  Vec sample(const std::function<double(const Vec&)>& f) const;
  std::size_t count(NodeClass c) const;

  // First and second derivatives of a grid field at a node, from the 3-point
  // nonuniform stencils; one-sided where a neighbour is missing.
  Vec gradient(const Vec& field, std::size_t i) const;
  Mat hessian(const Vec& field, std::size_t i) const;

 private:
  bool inside(const Vec& y) const;
  GridSpec spec_;
  std::vector<double> axis_t_, axis_n_;
  std::vector<Vec> nodes_;
  std::vector<NodeClass> classes_;
  std::vector<std::vector<int>> index_;
  std::vector<int> box_;  // multi-index -> node id or -1
  std::vector<long> stride_;
  std::vector<Vec> sphere_points_;
  Vec weights_;
};

// Condition on a spherical face. Dirichlet: u = value(b). Decay: u(b) = u(p) (|p|/|b|)^p,
// the radial profile r^{-p} continued from the node p (p = 0 is a Neumann-type closure).
struct SphereClosure {
  enum class Kind { dirichlet, decay };
  Kind kind = Kind::dirichlet;
  std::function<double(const Vec&)> value;
  double exponent = 0.0;

  static SphereClosure dirichlet(std::function<double(const Vec&)> g);
  static SphereClosure homogeneous();
  static SphereClosure decay(double exponent);
  std::string describe() const;
};

// Principal part g^{ab} d_a d_b + b^c d_c - q.
struct InteriorCoeffs {
  Mat a;
  Vec b;
  double q = 0;
};

// a^{ab} u_ab + b^c u_c - q u = f_int  in the grid domain,
// s(y) d_n u + c_bd u = f_bd           on the flat face (s = 1/sqrt(a^{nn}) unless set),
// closures on the outer (and inner) sphere.
struct RobinProblem {
  int n = 3;
  std::function<InteriorCoeffs(const Vec&)> interior;
  std::function<double(const Vec&)> c_bd;
  std::function<double(const Vec&)> f_int;
  std::function<double(const Vec&)> f_bd;
  SphereClosure outer = SphereClosure::homogeneous();
  SphereClosure inner = SphereClosure::homogeneous();
  std::string label = "custom";

  static RobinProblem laplacian(int n);
  // Delta psi - n(n+2) kappa U^{4/(n-2)} psi, d_n psi + n U^{2/(n-2)} psi.
  static RobinProblem linearized(const BubbleParams& p);
  // L_g u = f_int, B_g u = f_bd for a Fermi-form metric.
  static RobinProblem conformal(const MetricField& g);
};

struct SparseSystem {
  SpMat A;
  Vec rhs;
  // Factor multiplying the flat-face condition in the combined ghost-point row
  // (0 on interior rows); a nonlinear boundary term N_bd enters the row as
  // boundary_factor * N_bd.
  Vec boundary_factor;
  Vec weights;
  const HalfBallGrid* grid = nullptr;
  std::string scheme = "fd2_shortley_weller_ghost";
  std::string grid_id;
  std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
};

SparseSystem assemble(const RobinProblem& problem, const HalfBallGrid& grid);
// A u - rhs
Vec residual(const SparseSystem& sys, const Vec& u);

// Sparse LU of A (and of A^T on demand). UMFPACK when available.
class Factorization {
 public:
  explicit Factorization(const SpMat& A);
  ~Factorization();
  Factorization(const Factorization&) = delete;
  Factorization& operator=(const Factorization&) = delete;
  Vec solve(const Vec& b) const;
  Vec solve_transpose(const Vec& b) const;
  std::string backend() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Throws SolverError unless ||A x - b|| / ||b|| < tol.
Vec solve(const SparseSystem& sys, const Vec& rhs, double tol = 1e-10);
Vec solve(const SparseSystem& sys, double tol = 1e-10);

struct NearNullOptions {
  int k = 5;
  int extra = 3;  // Ritz vectors kept: k + extra
  int block = 3;  // Krylov block size
  int max_iterations = 150;  // Krylov dimension cap
  double tol = 1e-8;        // Ritz residual relative to the Ritz value
  std::uint64_t seed = 12345;
  // Threshold c * h_min^2 (see README for the calibration).
  double threshold_coefficient = 10.0;
};

struct NearNullResult {
  std::vector<double> singular_values;  // ascending
  std::vector<Vec> vectors;             // fields on the grid nodes
  double threshold = 0;
  int count_below = 0;
  double gap_ratio = 0;  // sigma_{count+1} / sigma_{count}
  int iterations = 0;
};

// Smallest singular pairs of W^{1/2} A W^{-1/2}: block Lanczos on its inverse Gram
// operator, then an SVD on the Ritz subspace.
NearNullResult near_null_space(const SparseSystem& sys, const NearNullOptions& opt = {});

struct KernelFit {
  Vec coefficients;  // c_1..c_n
  double residual = 0;  // weighted ||psi - sum c_a J_a|| / ||psi||
};

// Weighted least squares against grid samples of J_1..J_n, over the nodes with
// |y| <= radius (all nodes when radius <= 0).
KernelFit fit_kernel_combination(const HalfBallGrid& grid, const Vec& psi, const BubbleParams& p, double radius = 0);
KernelFit fit_kernel_combination(const HalfBallGrid& grid, const Vec& psi, double kappa, double radius = 0);

// chi(eps r) with chi = 1 on [0, delta'], 0 beyond 2 delta', quintic smoothstep between.
double cutoff_chi(double eps, double r, double delta_prime = 1.0);

struct CorrectionSpec {
  Mat pi0 = Mat::Zero(2, 2);
  double eps = 0.01;
  double kappa = 0.5;
  double delta_prime = 1.0;
  // Scale of the profile bubble: 1 gives phi (around U_kappa), 1/lambda gives the
  // rescaled tilde-phi (around lambda^{1/2} U_kappa(lambda y)).
  double profile_eps = 1.0;
  SphereClosure closure = SphereClosure::decay(0.0);

  static CorrectionSpec from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

struct DecayFit {
  double exponent = 0;   // slope of log max|grad^s phi| vs log r on the annulus
  double constant = 0;   // max (1+|y|)^s |grad^s phi| / (eps |pi0|)
  double r_min = 0, r_max = 0;
};

struct CorrectionResult {
  Vec phi;
  Vec phibar;
  Vec kernel_coefficients;  // c_1, c_2, c_3 added to enforce the normalization
  double phi_at_origin = 0, d1_at_origin = 0, d2_at_origin = 0;
  double sup_norm = 0;
  double interior_residual = 0;  // max |A phi - rhs| on interior rows
  DecayFit s0, s1;
  std::vector<std::string> warnings;
  nlohmann::ordered_json to_json() const;
};

// Source -2 chi_eps(|y|) (profile_eps lambda)^{-1} eps y_3 pi_jl d_j d_l V for the profile bubble V.
double correction_source(const CorrectionSpec& spec, const Vec& y);
CorrectionResult solve_correction_term(const CorrectionSpec& spec, const HalfBallGrid& grid);

// Newton iteration for L_g u + K u^{(n+2)/(n-2)} = 0, B_g u + c u^{n/(n-2)} = 0 on the grid.
struct NewtonOptions {
  double tol = 1e-10;  // max-norm of the nonlinear residual, relative to max|A u|
  int max_iterations = 30;
};

struct NewtonResult {
  Vec u;
  int iterations = 0;
  double residual = 0;
  bool converged = false;
};

NewtonResult solve_yamabe_system(const MetricField& g, double K, double c, const HalfBallGrid& grid,
                                 const SphereClosure& outer, const Vec& initial, const NewtonOptions& opt = {});

// CSV: coordinates, node class, value.
std::string field_to_csv(const HalfBallGrid& grid, const Vec& field);

}  // namespace yamabe
