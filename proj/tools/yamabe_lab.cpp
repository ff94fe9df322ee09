// yamabe_lab: run verification suites and write reports.
//
// Exit codes: 0 all checks passed, 1 some check failed, 2 usage or configuration error.

#include "yamabe/suites.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  using namespace yamabe;
  CLI::App app{"Verification suites for boundary-blowup bubbles and Pohozaev identities"};
  std::vector<std::string> suites{"all"};
  std::vector<double> kappas;
  std::vector<std::string> tol_overrides;
  std::string config_path;
  SuiteConfig cfg;
  app.add_option("--suite", suites, "Suites to run: models kernel hyperbolic pohozaev mass greens blowup all")
      ->delimiter(',');
  app.add_option("--dim", cfg.n, "Dimension n");
  app.add_option("--kappa", kappas, "Boundary-curvature parameters in [0,1]")->delimiter(',');
  app.add_option("--grid", cfg.grid_cells, "Cells per direction of the Green and correction grids");
  app.add_option("--radius", cfg.radius, "Half-ball radius");
  app.add_option("--tol-class", tol_overrides, "Tolerance override name=value (repeatable)");
  app.add_option("--out", cfg.out_dir, "Output directory");
  app.add_option("--seed", cfg.seed, "Random seed");
  app.add_option("--format", cfg.format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
  app.add_option("--config", config_path, "JSON config file; its keys override flags");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  AggregateReport report;
  try {
    cfg.suites = suites;
    if (!kappas.empty()) cfg.kappas = kappas;
    for (const auto& s : tol_overrides) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ParameterError("--tol-class expects name=value, got \"" + s + "\"");
      double v = 0;
      try {
        v = std::stod(s.substr(eq + 1));
      } catch (const std::exception&) {
        throw ParameterError("--tol-class: bad value in \"" + s + "\"");
      }
      cfg.tol.set(s.substr(0, eq), v);
    }
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw ParameterError("cannot read config \"" + config_path + "\"");
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(f);
      } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("config: ") + e.what());
      }
      cfg.merge_json(j);
    }
    cfg.validate();
  } catch (const Error& e) {
    std::cerr << "yamabe_lab: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "yamabe_lab: config: " << e.what() << "\n";
    return 2;
  }

  try {
    report = run_suite(cfg);
    emit_report(report, cfg.format, cfg.out_dir);
  } catch (const ParameterError& e) {
    std::cerr << "yamabe_lab: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "yamabe_lab: " << e.what() << "\n";
    return 2;
  }

  for (const auto& s : report.suites)
    for (const auto& c : s.checks)
      std::cout << to_string(c.verdict) << (c.expected_fail ? " (expected)" : "") << "  " << c.id << "\n";
  std::cout << report.passed() << " passed, " << report.failed() << " failed (" << report.expected_failures()
            << " expected), " << report.indeterminate() << " indeterminate\n";
  return report.ok() ? 0 : 1;
}
