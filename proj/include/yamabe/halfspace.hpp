#pragma once

#include "yamabe/common.hpp"
#include "yamabe/geometry.hpp"

#include <limits>

namespace yamabe {

// Parameters of the bubble
//   U(y) = (eps / (|y' - center|^2 + (y_n + eps)^2 - eps^2 kappa))^{(n-2)/2}.
struct BubbleParams {
  double kappa = 0.0;
  double eps = 1.0;
  Vec center;  // length n-1; empty means the origin
  int n = 3;

  double lambda() const { return 1.0 - kappa; }
  Vec center_or_zero() const { return center.size() ? center : Vec(Vec::Zero(n - 1)); }
  void validate() const;

  static BubbleParams canonical(double kappa, int n);  // eps = 1, centred at 0
  static BubbleParams from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

struct PointEval {
  double value = 0;
  Vec grad;
  Mat hess;
};

PointEval eval_bubble(const BubbleParams& p, const Vec& y);
// third[c](a,b) = d_a d_b d_c U
std::vector<Mat> bubble_third_derivatives(const BubbleParams& p, const Vec& y);
ScalarField bubble_field(const BubbleParams& p);

// Pair of residuals with relative versions |res| / (|term1| + |term2|).
// The boundary entries are NaN when y is not a boundary point.
struct ResidualPair {
  double interior = 0;
  double interior_rel = 0;
  double boundary = std::numeric_limits<double>::quiet_NaN();
  double boundary_rel = std::numeric_limits<double>::quiet_NaN();
  bool has_boundary() const { return boundary == boundary; }
};

// Interior: Delta U - n(n-2) kappa U^{(n+2)/(n-2)}; boundary: d_n U + (n-2) U^{n/(n-2)}.
ResidualPair residual_system(const BubbleParams& p, const Vec& y);

// Same system for an arbitrary field and constant kappa (kappa = 1 allowed).
ResidualPair residual_system(const ScalarField& u, double kappa, const Vec& y);

enum class HorosphereReading { normal, printed };

// kappa = 1 family (2 y_n + eps)^{(2-n)/2}; the printed reading uses y_1.
struct HorosphereParams {
  double eps = 1.0;
  int n = 3;
  HorosphereReading reading = HorosphereReading::normal;
};

PointEval eval_horosphere(const HorosphereParams& p, const Vec& y);
ScalarField horosphere_field(const HorosphereParams& p);
ResidualPair residual_horosphere(const HorosphereParams& p, const Vec& y);

// J_a, a = 1..n: d U / d y_a for a < n and (n-2)/2 U + y . grad U for a = n.
// The bubble may be translated and scaled; y . grad U is then taken about
// the bubble's own centre (center, 0).
PointEval eval_jacobi(const BubbleParams& p, int a, const Vec& y);
double eval_jacobi_field(int a, double kappa, const Vec& y);
ScalarField jacobi_field(const BubbleParams& p, int a);

// Interior: Delta Psi - n(n+2) kappa U^{4/(n-2)} Psi; boundary: d_n Psi + n U^{2/(n-2)} Psi.
ResidualPair linearized_residual(const ScalarField& psi, const BubbleParams& p, const Vec& y);
ResidualPair linearized_residual(const ScalarField& psi, double kappa, const Vec& y);

}  // namespace yamabe
