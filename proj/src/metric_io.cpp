#include "yamabe/geometry.hpp"
#include "yamabe/halfspace.hpp"

#include <cmath>

namespace yamabe {

namespace {

Mat matrix_from_json(const nlohmann::json& j, int rows, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw ParameterError(std::string("metric json: ") + what + " must be a square array of size n-1");
  Mat m(rows, rows);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != rows)
      throw ParameterError(std::string("metric json: ") + what + " row has the wrong length");
    for (int k = 0; k < rows; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

// Radial factor 1 + A/|z|.
ScalarField schwarzschild_factor(int n, double A) {
  return ScalarField::analytic(
      n,
      [A](const Vec& z) {
        const double r = z.norm();
        if (!(r > 0)) throw DomainError("schwarzschild factor: undefined at the origin");
        return 1.0 + A / r;
      },
      [A](const Vec& z) {
        const double r = z.norm();
        return Vec(-A * z / (r * r * r));
      },
      [A, n](const Vec& z) {
        const double r = z.norm();
        return Mat(-A * Mat::Identity(n, n) / (r * r * r) + 3 * A * z * z.transpose() / std::pow(r, 5));
      });
}

ScalarField quadratic_factor(int n, double c0, double c2) {
  return ScalarField::analytic(
      n, [c0, c2](const Vec& z) { return c0 + c2 * z.squaredNorm(); },
      [c2](const Vec& z) { return Vec(2 * c2 * z); },
      [c2, n](const Vec&) { return Mat(2 * c2 * Mat::Identity(n, n)); });
}

ScalarField factor_from_json(const nlohmann::json& f, int n) {
  const std::string kind = f.at("kind").get<std::string>();
  if (kind == "schwarzschild") return schwarzschild_factor(n, f.at("A").get<double>());
  if (kind == "quadratic") return quadratic_factor(n, f.value("c0", 1.0), f.at("c2").get<double>());
  if (kind == "bubble") {
    nlohmann::json b = f;
    b["n"] = n;
    return bubble_field(BubbleParams::from_json(b));
  }
  throw ParameterError("metric json: unknown conformal factor kind \"" + kind + "\"");
}

}  // namespace

MetricField MetricField::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const int n = j.value("n", 3);
  if (n < 2) throw ParameterError("metric json: n must be at least 2");
  if (kind == "euclidean") return euclidean(n);
  if (kind == "conformal") {
    MetricField g = conformal_change(euclidean(n), factor_from_json(j.at("factor"), n));
    g.kind_ = "conformal";
    g.params_ = nlohmann::ordered_json{{"n", n}, {"factor", nlohmann::ordered_json::parse(j.at("factor").dump())}};
    return g;
  }
  if (kind == "fermi_synthetic") {
    const Mat pi = matrix_from_json(j.at("pi"), n - 1, "pi");
    const Mat beta = j.contains("beta") ? matrix_from_json(j.at("beta"), n - 1, "beta") : Mat::Zero(n - 1, n - 1);
    return fermi_synthetic(n, pi, beta);
  }
  if (kind == "fermi_horospherical") return fermi_horospherical(n, j.at("b").get<double>());
  throw ParameterError("metric json: unknown kind \"" + kind + "\"");
}

}  // namespace yamabe
