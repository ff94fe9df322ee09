#include "yamabe/suites.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace yamabe;

TEST_CASE("tolerance classes") {
  ToleranceClasses t;
  t.set("identity", 1e-7);
  CHECK(t.get("identity") == 1e-7);
  CHECK_THROWS_AS(t.set("nonsense", 1.0), ParameterError);
  CHECK_THROWS_AS(t.set("residual", -1.0), ParameterError);
}

TEST_CASE("config merge and validation") {
  SuiteConfig c;
  c.merge_json(nlohmann::json::parse(R"({"kappa": [0.2], "seed": 9, "suites": ["models"], "tolerances": {"residual": 1e-9}})"));
  CHECK(c.kappas == std::vector<double>{0.2});
  CHECK(c.seed == 9);
  CHECK(c.tol.residual == 1e-9);
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS(c.merge_json(nlohmann::json::parse(R"({"colour": 1})")), ParameterError);
  c.suites = {"nope"};
  CHECK_THROWS_AS(c.validate(), ParameterError);
  CHECK_THROWS_AS(run_single_suite("nope", c), ParameterError);
  c.suites = {"models"};
  c.kappas = {1.5};
  CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("reports are deterministic and carry a schema version") {
  SuiteConfig c;
  c.suites = {"models", "pohozaev"};
  const AggregateReport a = run_suite(c), b = run_suite(c);
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.to_json()["schema_version"] == kSchemaVersion);
  CHECK(a.ok());
  c.seed = 99;
  CHECK(run_suite(c).to_json().dump() != a.to_json().dump());
}

TEST_CASE("expected-fail prefixes mark checks but still count as failures") {
  SuiteConfig c;
  c.suites = {"models"};
  c.tol.residual = 1e-30;  // nothing passes at this tolerance
  c.expected_fail = {"models.bubble"};
  const AggregateReport r = run_suite(c);
  int marked = 0;
  for (const auto& ch : r.suites[0].checks)
    if (ch.expected_fail) {
      ++marked;
      CHECK(ch.id.rfind("models.bubble", 0) == 0);
    }
  CHECK(marked == 1);
  CHECK(r.expected_failures() == 1);
  CHECK_FALSE(r.ok());
}

TEST_CASE("emit_report writes LF-terminated CSV with dot decimals") {
  SuiteConfig c;
  c.suites = {"pohozaev"};
  const AggregateReport r = run_suite(c);
  const auto dir = std::filesystem::temp_directory_path() / "yamabe_emit_test";
  std::filesystem::remove_all(dir);
  const auto files = emit_report(r, "both", dir.string());
  CHECK(files.size() >= 3);
  std::ifstream f(dir / "pohozaev_rho_ladder.csv", std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string body = ss.str();
  CHECK(body.find('\r') == std::string::npos);
  CHECK(body.rfind("kappa,rho,P", 0) == 0);
  CHECK(body.find("0.5,") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("emit_report fails on an unwritable directory") {
  const auto file = std::filesystem::temp_directory_path() / "yamabe_not_a_dir";
  std::ofstream(file) << "x";
  AggregateReport r;
  CHECK_THROWS_AS(emit_report(r, "json", (file / "sub").string()), Error);
  std::filesystem::remove(file);
}
