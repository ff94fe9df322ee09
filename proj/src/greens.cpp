#include "yamabe/greens.hpp"

#include <cmath>
#include <limits>

namespace yamabe {

namespace {

ScalarField pole(int n) {
  const double p = 2.0 - n;
  return ScalarField::analytic(
      n,
      [p](const Vec& z) { return std::pow(z.norm(), p); },
      [p](const Vec& z) {
        const double r = z.norm();
        return Vec(p * std::pow(r, p - 2) * z);
      },
      [p, n](const Vec& z) {
        const double r = z.norm();
        return Mat(p * std::pow(r, p - 2) * Mat::Identity(n, n) + p * (p - 2) * std::pow(r, p - 4) * z * z.transpose());
      });
}

// Least squares of y against the given basis columns over the selected nodes.
Vec fit(const Mat& B, const Vec& y) { return B.colPivHouseholderQr().solve(y); }

struct Annulus {
  std::vector<std::size_t> nodes;
};

Annulus annulus(const HalfBallGrid& grid, double r0, double r1) {
  Annulus a;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.node(i).norm();
    if (r >= r0 && r <= r1) a.nodes.push_back(i);
  }
  return a;
}

// beta in w ~ alpha + beta r^{2-n} on the annulus
double pole_component(const HalfBallGrid& grid, const Vec& w, double r0, double r1) {
  const Annulus a = annulus(grid, r0, r1);
  if (a.nodes.size() < 4) throw SolverError("green: fit annulus holds fewer than 4 nodes; refine the grid");
  const int n = grid.dim();
  Mat B(a.nodes.size(), 2);
  Vec y(a.nodes.size());
  for (std::size_t k = 0; k < a.nodes.size(); ++k) {
    const double r = grid.node(a.nodes[k]).norm();
    B(k, 0) = 1;
    B(k, 1) = std::pow(r, 2.0 - n);
    y(k) = w(a.nodes[k]);
  }
  return fit(B, y)(1);
}

double local_spacing(const HalfBallGrid& grid, double r) {
  const auto& ax = grid.axis(grid.dim() - 1);
  for (std::size_t k = 1; k < ax.size(); ++k)
    if (ax[k] >= r) return ax[k] - ax[k - 1];
  return ax.back() - ax[ax.size() - 2];
}

void finish(GreenField& G) {
  const HalfBallGrid& grid = *G.grid;
  G.min_value = G.values.minCoeff();
  G.leading_defect = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.node(i).norm();
    if (r < 2 * std::max(G.rho0, grid.min_spacing()))
      G.leading_defect = std::max(G.leading_defect, std::abs(std::pow(r, G.n - 2.0) * G.values(i) - 1));
  }
}

}  // namespace

double euclidean_green(const Vec& z, double delta) {
  const double p = 2.0 - static_cast<double>(z.size());
  return std::pow(z.norm(), p) - std::pow(delta, p);
}

GreenField GreenField::from_field(const ScalarField& field, const GridSpec& spec, double delta) {
  GreenField G;
  G.grid = std::make_shared<HalfBallGrid>(spec);
  G.n = spec.n;
  G.delta = delta;
  G.rho0 = spec.inner_radius;
  G.mode = "sampled";
  G.metric_kind = "none";
  G.values = G.grid->sample([&](const Vec& z) { return field.value(z); });
  const int n = G.n;
  G.regular = G.values - G.grid->sample([n](const Vec& z) { return std::pow(z.norm(), 2.0 - n); });
  finish(G);
  return G;
}

nlohmann::ordered_json GreenField::to_json() const {
  return nlohmann::ordered_json{{"n", n},
                                {"delta", delta},
                                {"rho0", rho0},
                                {"mode", mode},
                                {"metric", metric_kind},
                                {"grid", grid ? grid->spec().to_json() : nlohmann::ordered_json()},
                                {"nodes", grid ? grid->size() : 0},
                                {"pole_coefficient", pole_coefficient},
                                {"inner_sensitivity", inner_sensitivity},
                                {"min_value", min_value},
                                {"leading_defect", leading_defect}};
}

GreenField solve_green_mixed(const MetricField& g, double delta, double rho0, GridSpec spec, const GreenOptions& opt) {
  const int n = g.dim();
  if (!(delta > 0) || !(rho0 > 0) || rho0 >= delta / 8)
    throw ParameterError("solve_green_mixed: need 0 < rho0 < delta / 8");
  if (opt.mode != "subtraction" && opt.mode != "direct")
    throw ParameterError("solve_green_mixed: mode must be \"subtraction\" or \"direct\"");
  if (!(opt.fit_inner > 1) || !(opt.fit_outer > opt.fit_inner) || opt.fit_outer * 2 * rho0 >= delta)
    throw ParameterError("solve_green_mixed: fit annulus must lie inside the domain");
  spec.n = n;
  spec.radius = delta;
  spec.inner_radius = rho0;
  GreenField G;
  G.grid = std::make_shared<HalfBallGrid>(spec);
  const HalfBallGrid& grid = *G.grid;
  const double hloc = local_spacing(grid, rho0);
  if (hloc > 0.5 * rho0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "solve_green_mixed: grid spacing %.3g near the excision exceeds rho0/2 = %.3g", hloc,
                  0.5 * rho0);
    throw PreconditionError(buf);
  }
  G.n = n;
  G.delta = delta;
  G.rho0 = rho0;
  G.mode = opt.mode;
  G.metric_kind = g.kind();
  const ScalarField P = pole(n);
  const Vec Pn = grid.sample([&](const Vec& z) { return P.value(z); });

  if (opt.mode == "direct") {
    RobinProblem prob = RobinProblem::conformal(g);
    prob.outer = SphereClosure::homogeneous();
    prob.inner = SphereClosure::dirichlet([&](const Vec& z) { return P.value(z); });
    prob.label = "green_direct";
    const SparseSystem sys = assemble(prob, grid);
    G.values = solve(sys);
    G.regular = G.values - Pn;
  } else {
    RobinProblem p0 = RobinProblem::conformal(g);
    p0.f_int = [&](const Vec& z) { return -conformal_laplacian(g, P, z); };
    p0.f_bd = [&](const Vec& z) { return -conformal_boundary_operator(g, P, z); };
    p0.outer = SphereClosure::dirichlet([&](const Vec& z) { return -P.value(z); });
    p0.inner = SphereClosure::homogeneous();
    p0.label = "green_regular_part";
    RobinProblem p1 = RobinProblem::conformal(g);
    p1.outer = SphereClosure::homogeneous();
    p1.inner = SphereClosure::dirichlet([](const Vec&) { return 1.0; });
    p1.label = "green_capacity";
    const SparseSystem s0 = assemble(p0, grid);
    const SparseSystem s1 = assemble(p1, grid);
    const Vec w0 = solve(s0);
    const Vec w1 = solve(s1);
    const double a = opt.fit_inner * rho0, b = opt.fit_outer * rho0;
    const double b0 = pole_component(grid, w0, a, b), b1 = pole_component(grid, w1, a, b);
    if (!(std::abs(b1) > 0)) throw SolverError("solve_green_mixed: capacity potential has no pole component");
    G.pole_coefficient = -b0 / b1;
    const double A2 = -pole_component(grid, w0, 2 * a, 2 * b) / pole_component(grid, w1, 2 * a, 2 * b);
    G.inner_sensitivity = std::abs(A2 - G.pole_coefficient);
    G.regular = w0 + G.pole_coefficient * w1;
    G.values = Pn + G.regular;
  }
  finish(G);
  return G;
}

nlohmann::ordered_json ExpansionResult::to_json() const {
  nlohmann::ordered_json j{{"mode", mode},      {"A", A},         {"remainder_norm", remainder},
                           {"r_min", r_min},    {"r_max", r_max}, {"samples", samples},
                           {"leading_defect", leading_defect}};
  if (mode == "log-audit") j["log_coefficient"] = log_coefficient;
  return j;
}

ExpansionResult extract_expansion(const GreenField& G, int n, const std::string& mode, double r_min, double r_max) {
  if (!G.grid) throw PreconditionError("extract_expansion: empty Green field");
  if (n != G.n) throw ParameterError("extract_expansion: dimension mismatch");
  if (mode != "constant" && mode != "log-audit")
    throw ParameterError("extract_expansion: mode must be \"constant\" or \"log-audit\"");
  const HalfBallGrid& grid = *G.grid;
  if (r_min <= 0) {
    const double rho = std::sqrt(2 * std::max(G.rho0, grid.min_spacing()) * G.delta / 4);
    r_min = rho;
    r_max = 2 * rho;
  }
  if (!(r_max > r_min)) throw ParameterError("extract_expansion: need r_max > r_min");
  const Annulus a = annulus(grid, r_min, r_max);
  const int cols = mode == "log-audit" ? 2 : 1;
  ExpansionResult res;
  res.mode = mode;
  res.r_min = r_min;
  res.r_max = r_max;
  res.samples = a.nodes.size();
  res.leading_defect = G.leading_defect;
  if (a.nodes.size() < static_cast<std::size_t>(n + 2) || (cols == 2 && std::log(r_max / r_min) < 0.1))
    throw SolverError("extract_expansion: annulus too thin for a stable fit");
  Mat B(a.nodes.size(), cols);
  Vec y(a.nodes.size());
  for (std::size_t k = 0; k < a.nodes.size(); ++k) {
    const double r = grid.node(a.nodes[k]).norm();
    B(k, 0) = 1;
    if (cols == 2) B(k, 1) = std::log(r);
    y(k) = G.regular(a.nodes[k]);
  }
  const Vec c = fit(B, y);
  res.A = c(0);
  if (cols == 2) res.log_coefficient = c(1);
  res.remainder = (y - B * c).cwiseAbs().maxCoeff();
  return res;
}

}  // namespace yamabe
