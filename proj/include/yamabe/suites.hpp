#pragma once

#include "yamabe/blowup.hpp"
#include "yamabe/report.hpp"

#include <map>
#include <string>
#include <vector>

namespace yamabe {

inline constexpr const char* kSchemaVersion = "1.0";

// Named tolerance classes; a check picks its class and never hard-codes a number.
struct ToleranceClasses {
  double residual = 1e-10;        // closed-form PDE residuals (relative)
  double identity = 1e-8;         // exact integral identities
  double perturbed_identity = 1e-6;
  double discretization = 5e-2;   // grid-dependent fits
  double extrapolation = 1e-2;    // Richardson limits
  double quadrature = 1e-3;       // quadrature-oracle comparisons (relative)

  double get(const std::string& name) const;
  void set(const std::string& name, double value);  // ParameterError on unknown names or value <= 0
  nlohmann::ordered_json to_json() const;
};

// Grid and thresholds of the near-null-space study on B+_R.
struct KernelStudy {
  double radius = 20.0;
  int coarse_cells = 24;
  int fine_cells = 32;
  double h0_tangential = 0.1;
  double h0_normal = 0.05;
  double closure_exponent = 1.0;
  double fit_fraction = 0.5;        // fits over |y| <= fit_fraction * R
  double threshold_coefficient = 4.0;
  nlohmann::ordered_json to_json() const;
};

struct SuiteConfig {
  int n = 3;
  std::vector<double> kappas{0.1, 0.5, 0.9};
  int grid_cells = 16;  // Green's function and correction-term grids
  double radius = 20.0;
  int quad_order = 24;
  ToleranceClasses tol;
  std::string out_dir = "yamabe_out";
  std::uint64_t seed = 12345;
  std::vector<std::string> suites;  // models | kernel | hyperbolic | pohozaev | mass | greens | blowup | all
  std::string format = "json";       // json | csv | both
  KernelStudy kernel;
  // Negative controls: check ids expected to fail, and the perturbations that make them fail,
  // e.g. {"kernel_coefficient_scale": 1.1}.
  std::vector<std::string> expected_fail;
  nlohmann::ordered_json controls = nlohmann::ordered_json::object();

  void validate() const;  // ParameterError
  // Keys present in j override the current values.
  void merge_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

const std::vector<std::string>& suite_names();

// Rows of a table written as CSV.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::string to_csv() const;
};

struct SuiteResult {
  std::string suite;
  std::vector<VerificationReport> checks;
  std::vector<Table> tables;
};

struct AggregateReport {
  nlohmann::ordered_json config;
  std::vector<SuiteResult> suites;
  int passed() const;
  int failed() const;          // verdict fail, expected or not
  int expected_failures() const;
  int indeterminate() const;
  bool ok() const { return failed() == 0; }
  nlohmann::ordered_json to_json() const;
  std::string checks_csv() const;
};

// Runs one suite (not "all").
SuiteResult run_single_suite(const std::string& name, const SuiteConfig& cfg);
AggregateReport run_suite(const SuiteConfig& cfg);

// Writes report.json and/or checks.csv plus one CSV per table into out_dir.
// Returns the written paths; throws Error when out_dir cannot be written.
std::vector<std::string> emit_report(const AggregateReport& report, const std::string& format,
                                     const std::string& out_dir);

// Building blocks shared with the acceptance driver.
VerificationReport kernel_check(double kappa, const KernelStudy& ks, const ToleranceClasses& tol,
                                double coefficient_scale = 1.0, Table* table = nullptr);
VerificationReport greens_check(double delta, int cells, const ToleranceClasses& tol);
// pi0 = diag(1,-1), eps = 0.01, kappa = 0.5 on B+_radius with a homogeneous Dirichlet closure.
VerificationReport correction_check(int cells = 20, double radius = 30.0);
VerificationReport refined_audit_check(const Mat& pi0, double kappa, const std::vector<double>& eps,
                                       const RefinedOptions& opt, Table* table = nullptr);

}  // namespace yamabe
