#pragma once

#include "yamabe/linear_solver.hpp"

#include <memory>
#include <string>

namespace yamabe {

// How the pole at the origin enters the annular problem on B+_delta minus B_rho0.
//   subtraction: G = |z|^{2-n} + w0 + A w1, where w0 carries the defect of the
//     leading term and w1 is the capacity potential of the excision sphere; A is
//     chosen so that w has no |z|^{2-n} component on the fit annulus [2 rho0, 4 rho0].
//   direct: G itself with inner Dirichlet data |z|^{2-n}.
struct GreenOptions {
  std::string mode = "subtraction";
  double fit_inner = 2.0;  // fit annulus, in units of rho0
  double fit_outer = 4.0;
};

struct GreenField {
  std::shared_ptr<const HalfBallGrid> grid;
  Vec values;   // G at the grid nodes
  Vec regular;  // G - |z|^{2-n}
  int n = 3;
  double delta = 1, rho0 = 0;
  std::string mode;
  std::string metric_kind;
  double pole_coefficient = 0;      // A of the subtraction mode (0 in direct mode)
  double inner_sensitivity = 0;     // change of A when the fit annulus is doubled
  double min_value = 0;
  double leading_defect = 0;        // max | |z|^{n-2} G - 1 | on nodes with |z| < 2 rho0

  // Samples an explicit field on the grid (synthetic fields and oracles).
  static GreenField from_field(const ScalarField& G, const GridSpec& spec, double delta);
  nlohmann::ordered_json to_json() const;
};

// L_g G = 0 in B+_delta \ B_rho0, G = 0 on S+_delta, B_g G = 0 on the flat face.
// The grid spec supplies n, cells and stretch; radius and inner radius are set here.
GreenField solve_green_mixed(const MetricField& g, double delta, double rho0, GridSpec grid,
                             const GreenOptions& opt = {});

struct ExpansionResult {
  double A = 0;
  double remainder = 0;                 // max |G - |z|^{2-n} - fit| on the annulus
  double log_coefficient = 0;           // only in mode "log-audit"
  double leading_defect = 0;
  double r_min = 0, r_max = 0;
  std::size_t samples = 0;
  std::string mode;
  nlohmann::ordered_json to_json() const;
};

// Fits G - |z|^{2-n} on the annulus [r_min, r_max] to a constant ("constant")
// or to A + B log|z| ("log-audit"). r_min = 0 picks the dyadic annulus
// [rho, 2 rho] with rho the geometric mean of 2 rho0 and delta / 4.
ExpansionResult extract_expansion(const GreenField& G, int n, const std::string& mode = "constant",
                                  double r_min = 0, double r_max = 0);

// Closed form |z|^{-1} - 1/delta of the Euclidean problem (n = 3).
double euclidean_green(const Vec& z, double delta);

}  // namespace yamabe
