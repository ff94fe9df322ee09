// Acceptance driver: one PASS/FAIL line per criterion, exit 1 when any is red.

#include "yamabe/suites.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>

using namespace yamabe;

namespace {

struct Timed {
  SuiteResult result;
  double seconds = 0;
};

Timed timed_suite(const std::string& name, const SuiteConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Timed t{run_single_suite(name, cfg), 0};
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

const VerificationReport* find(const SuiteResult& s, const std::string& id) {
  for (const auto& c : s.checks)
    if (c.id == id) return &c;
  return nullptr;
}

bool passed(const SuiteResult& s, const std::string& id) {
  const VerificationReport* r = find(s, id);
  return r && r->verdict == Verdict::pass;
}

// All checks whose id starts with prefix pass (and there is at least one).
bool all_pass(const SuiteResult& s, const std::string& prefix) {
  int count = 0;
  for (const auto& c : s.checks)
    if (c.id.compare(0, prefix.size(), prefix) == 0) {
      ++count;
      if (c.verdict != Verdict::pass) return false;
    }
  return count > 0;
}

int red = 0;

void line(int k, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", k, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++red;
}

std::string secs(double s) {
  char b[32];
  std::snprintf(b, sizeof b, "%.1f s", s);
  return b;
}

}  // namespace

int main() {
  SuiteConfig cfg;
  cfg.n = 3;

  const Timed models = timed_suite("models", cfg);
  {
    const bool ok = passed(models.result, "models.bubble_residuals") && models.seconds < 10;
    line(1, ok, "bubble residuals over 20 parameter sets, " + secs(models.seconds));
  }
  line(2, passed(models.result, "models.horosphere") && passed(models.result, "models.horosphere_printed_reading"),
       "horosphere residuals; printed reading detected");

  const Timed kernel = timed_suite("kernel", cfg);
  {
    bool ok = passed(models.result, "models.jacobi_residuals");
    std::string detail = "Jacobi fields " + std::string(ok ? "ok" : "red");
    for (double k : cfg.kappas) {
      char kb[32];
      std::snprintf(kb, sizeof kb, "%g", k);
      const std::string id = "kernel.near_null.kappa=" + std::string(kb);
      const bool p = passed(kernel.result, id);
      ok = ok && p;
      detail += ", " + id + (p ? " ok" : " red");
    }
    ok = ok && kernel.seconds < 300.0 * cfg.kappas.size();
    line(3, ok, detail + ", " + secs(kernel.seconds));
  }

  const Timed hyp = timed_suite("hyperbolic", cfg);
  line(4,
       all_pass(hyp.result, "hyperbolic.pullback.") && all_pass(hyp.result, "hyperbolic.eigen.") && hyp.seconds < 30,
       "pullback, coordinate eigenfunctions, coth rule, " + secs(hyp.seconds));

  const Timed poh = timed_suite("pohozaev", cfg);
  line(5, all_pass(poh.result, "pohozaev.euclidean.") && passed(poh.result, "pohozaev.fermi_synthetic") && poh.seconds < 60,
       "exact bubbles and Fermi-synthetic identity, " + secs(poh.seconds));

  const Timed mass = timed_suite("mass", cfg);
  {
    const bool parts = passed(mass.result, "mass.flat") && all_pass(mass.result, "mass.half_schwarzschild.") &&
                       all_pass(mass.result, "mass.I.");
    const VerificationReport* pi = find(mass.result, "mass.P_I_relation");
    const double r2 = pi ? pi->computed["fit"]["r_squared"].get<double>() : 0.0;
    char b[128];
    std::snprintf(b, sizeof b, "flat mass, half-Schwarzschild, I = 16 pi A %s; P'-I fit R^2 = %.4f (needs > 0.99), ",
                  parts ? "ok" : "red", r2);
    line(6, parts && r2 > 0.99 && mass.seconds < 120, b + secs(mass.seconds));
  }

  const Timed green = timed_suite("greens", cfg);
  line(7, all_pass(green.result, "greens.euclidean.") && green.seconds < 120, "mixed problem, " + secs(green.seconds));

  const Timed blow = timed_suite("blowup", cfg);
  line(8,
       passed(blow.result, "blowup.isolated") && passed(blow.result, "blowup.simple") &&
           passed(blow.result, "blowup.bubble_convergence") && passed(blow.result, "blowup.simple_two_scale") &&
           blow.seconds < 120,
       "isolated, simple, convergence, two-bubble control, w rescaling, " + secs(blow.seconds));

  {
    const bool corr = passed(kernel.result, "kernel.correction");
    const VerificationReport* ref = find(blow.result, "blowup.refined");
    const bool bounded = ref && ref->verdict == Verdict::pass;
    const bool grows = ref && ref->computed["s0"]["grows_without"].get<bool>();
    char b[160];
    std::snprintf(b, sizeof b, "correction term %s; bounded with phi %s; growth without phi %s (slope %.3f)",
                  corr ? "ok" : "red", bounded ? "ok" : "red", grows ? "ok" : "red",
                  ref ? ref->computed["s0"]["slope_without"].get<double>() : 0.0);
    line(9, corr && bounded && grows, b);
  }

  {
    SuiteConfig d = cfg;
    d.suites = {"models", "hyperbolic", "pohozaev", "mass", "greens", "blowup"};
    const std::string a = run_suite(d).to_json().dump(2), b = run_suite(d).to_json().dump(2);
    line(10, a == b, "two runs with seed " + std::to_string(d.seed) + " give " + (a == b ? "identical" : "different") +
                         " reports (" + std::to_string(a.size()) + " bytes)");
  }
  return red == 0 ? 0 : 1;
}
