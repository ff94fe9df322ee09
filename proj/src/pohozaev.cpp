#include "yamabe/pohozaev.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace yamabe {

namespace {

struct PParts {
  double mixed = 0, gradient = 0, radial = 0, K = 0, c = 0;
  double P_prime() const { return mixed + gradient + radial; }
  double P() const { return P_prime() + K + c; }
};

PParts p_parts(const ScalarField& u, double rho, double K, double c, int m) {
  const int n = u.dim();
  PParts p;
  const QuadratureRule S = hemisphere_rule(n, rho, m);
  const double pK = 2.0 * n / (n - 2.0);
  for (std::size_t k = 0; k < S.size(); ++k) {
    const Vec& z = S.nodes[k];
    const double r = z.norm();
    const double v = u.value(z);
    const Vec g = u.gradient(z);
    const double ur = g.dot(z) / r;
    const double w = S.weights[k];
    p.mixed += w * 0.5 * (n - 2.0) * v * ur;
    p.gradient += w * (-0.5 * r * g.squaredNorm());
    p.radial += w * r * ur * ur;
    if (K != 0) p.K += w * K * std::pow(v, pK);
  }
  p.K *= (n - 2.0) * rho / (2.0 * n);
  if (c != 0) {
    const QuadratureRule E = equator_rule(n, rho, m);
    const double pc = 2.0 * (n - 1.0) / (n - 2.0);
    for (std::size_t k = 0; k < E.size(); ++k) p.c += E.weights[k] * c * std::pow(u.value(E.nodes[k]), pc);
    p.c *= (n - 2.0) * rho / (2.0 * (n - 1.0));
  }
  return p;
}

void require_order(int m) {
  if (m < 4) throw QuadratureError("quadrature order must be at least 4");
}

double x_factor(const ScalarField& u, const Vec& z) {
  const int n = u.dim();
  return z.dot(u.gradient(z)) + 0.5 * (n - 2.0) * u.value(z);
}

struct RhsParts {
  double volume = 0, flat = 0, res_volume = 0, res_flat = 0;
};

RhsParts rhs_parts(const MetricField& g, const ScalarField& u, double rho, int m, double K, double c) {
  const int n = g.dim();
  RhsParts r;
  const double p1 = (n + 2.0) / (n - 2.0), p2 = double(n) / (n - 2.0);
  const QuadratureRule V = half_ball_rule(n, rho, m);
  for (std::size_t k = 0; k < V.size(); ++k) {
    const Vec& z = V.nodes[k];
    const double X = x_factor(u, z);
    const double Lg = conformal_laplacian(g, u, z);
    const double lap = u.hessian(z).trace();
    r.volume -= V.weights[k] * X * (Lg - lap);
    r.res_volume += V.weights[k] * X * (Lg + K * std::pow(u.value(z), p1));
  }
  const QuadratureRule D = disk_rule(n, rho, m);
  for (std::size_t k = 0; k < D.size(); ++k) {
    const Vec& z = D.nodes[k];
    const double X = x_factor(u, z);
    const double Bg = conformal_boundary_operator(g, u, z);
    const double dn = u.gradient(z)(n - 1);
    r.flat -= D.weights[k] * X * (Bg - dn);
    r.res_flat += D.weights[k] * X * (Bg + c * std::pow(u.value(z), p2));
  }
  return r;
}

}  // namespace

nlohmann::ordered_json PohozaevReport::to_json() const {
  return nlohmann::ordered_json{{"n", n},
                                {"rho", rho},
                                {"P", P},
                                {"P_prime", P_prime},
                                {"K_term", K_term},
                                {"c_term", c_term},
                                {"s_mixed", s_mixed},
                                {"s_gradient", s_gradient},
                                {"s_radial", s_radial},
                                {"quad_error", quad_error},
                                {"order", order}};
}

PohozaevReport pohozaev_P(const ScalarField& u, double rho, double K, double c, int order) {
  require_order(order);
  if (!(rho > 0)) throw ParameterError("pohozaev_P: rho must be positive");
  const PParts p = p_parts(u, rho, K, c, order);
  const PParts q = p_parts(u, rho, K, c, order / 2);
  PohozaevReport r;
  r.n = u.dim();
  r.rho = rho;
  r.order = order;
  r.s_mixed = p.mixed;
  r.s_gradient = p.gradient;
  r.s_radial = p.radial;
  r.P_prime = p.P_prime();
  r.K_term = p.K;
  r.c_term = p.c;
  r.P = r.P_prime + r.K_term + r.c_term;
  r.quad_error = std::abs(p.P() - q.P());
  return r;
}

nlohmann::ordered_json PohozaevRhs::to_json() const {
  return nlohmann::ordered_json{{"volume", volume},
                                {"flat", flat},
                                {"value", value},
                                {"residual_volume", residual_volume},
                                {"residual_flat", residual_flat},
                                {"quad_error", quad_error},
                                {"order", order}};
}

PohozaevRhs pohozaev_rhs(const MetricField& g, const ScalarField& u, double rho, int order, double K, double c) {
  require_order(order);
  if (g.dim() != u.dim()) throw ParameterError("pohozaev_rhs: dimension mismatch");
  if (!(rho > 0)) throw ParameterError("pohozaev_rhs: rho must be positive");
  const RhsParts a = rhs_parts(g, u, rho, order, K, c);
  const RhsParts b = rhs_parts(g, u, rho, order / 2, K, c);
  PohozaevRhs r;
  r.order = order;
  r.volume = a.volume;
  r.flat = a.flat;
  r.value = a.volume + a.flat;
  r.residual_volume = a.res_volume;
  r.residual_flat = a.res_flat;
  r.quad_error = std::abs(r.value - (b.volume + b.flat)) +
                 std::abs(a.res_volume + a.res_flat - b.res_volume - b.res_flat);
  return r;
}

VerificationReport check_pohozaev_identity(const MetricField& g, const ScalarField& u, double K, double c, double rho,
                                           const PohozaevCheckOptions& opt) {
  const int n = g.dim();
  const PohozaevReport P = pohozaev_P(u, rho, K, c, opt.order);
  const PohozaevRhs R = pohozaev_rhs(g, u, rho, opt.order, K, c);

  // PDE residuals at random points of B+_rho and D_rho
  Rng rng(opt.seed);
  const double p1 = (n + 2.0) / (n - 2.0), p2 = double(n) / (n - 2.0);
  double res_int = 0, res_bd = 0;
  for (int s = 0; s < opt.residual_samples; ++s) {
    Vec z(n);
    do {
      for (int d = 0; d < n; ++d) z(d) = rng.uniform(-rho, rho);
      z(n - 1) = std::abs(z(n - 1));
    } while (z.norm() >= rho);
    const double Lg = conformal_laplacian(g, u, z);
    const double nl = K * std::pow(u.value(z), p1);
    res_int = std::max(res_int, std::abs(Lg + nl) / std::max(1e-300, std::abs(Lg) + std::abs(nl)));
    Vec zb = z;
    zb(n - 1) = 0.0;
    const double Bg = conformal_boundary_operator(g, u, zb);
    const double nb = c * std::pow(u.value(zb), p2);
    res_bd = std::max(res_bd, std::abs(Bg + nb) / std::max(1e-300, std::abs(Bg) + std::abs(nb)));
  }
  const bool solves = res_int < opt.residual_threshold && res_bd < opt.residual_threshold;
  const double defect = std::abs(P.P - R.value);
  const double identity_defect = std::abs(P.P - R.value - R.residual_volume - R.residual_flat);

  VerificationReport r;
  r.id = "pohozaev.identity";
  r.anchor = "pohozaev.identity";
  r.inputs["metric"] = g.to_json();
  r.inputs["K"] = K;
  r.inputs["c"] = c;
  r.inputs["rho"] = rho;
  r.inputs["order"] = opt.order;
  r.computed["P"] = P.to_json();
  r.computed["rhs"] = R.to_json();
  r.computed["defect"] = defect;
  r.computed["identity_defect"] = identity_defect;
  r.computed["pde_residual_interior"] = res_int;
  r.computed["pde_residual_boundary"] = res_bd;
  r.computed["defect_binding"] = solves;
  r.reference["defect"] = 0.0;
  r.provenance = "identity";
  r.tolerance = opt.tolerance;
  r.norm = "abs";
  if (solves) {
    r.set(defect < opt.tolerance && identity_defect < opt.tolerance);
  } else {
    r.notes.push_back("u does not solve the system; |P - RHS| is non-binding, the residual-augmented identity is checked");
    r.set(identity_defect < opt.tolerance);
  }
  if (P.quad_error > opt.tolerance || R.quad_error > opt.tolerance)
    r.notes.push_back("quadrature error estimate above tolerance; raise the order");
  return r;
}

// ---------------------------------------------------------------- mass

MassPartial adm_mass_partial(const MetricField& g, double R, int order) {
  require_order(order);
  const int n = g.dim();
  MassPartial p;
  p.R = R;
  const QuadratureRule S = hemisphere_rule(n, R, order);
  for (std::size_t k = 0; k < S.size(); ++k) {
    const Vec& y = S.nodes[k];
    const auto dg = g.first_derivatives(y);
    double f = 0;
    for (int a = 0; a < n; ++a) {
      double t = 0;
      for (int b = 0; b < n; ++b) t += dg[b](a, b) - dg[a](b, b);
      f += t * y(a) / R;
    }
    p.sphere += S.weights[k] * f;
    p.decay = std::max(p.decay, (g.metric(y) - Mat::Identity(n, n)).cwiseAbs().maxCoeff());
  }
  const QuadratureRule E = equator_rule(n, R, order);
  for (std::size_t k = 0; k < E.size(); ++k) {
    const Vec& y = E.nodes[k];
    const Mat G = g.metric(y);
    double f = 0;
    for (int j = 0; j < n - 1; ++j) f += G(n - 1, j) * y(j) / R;
    p.equator += E.weights[k] * f;
  }
  p.total = p.sphere + p.equator;
  return p;
}

nlohmann::ordered_json MassReport::to_json() const {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& p : partials)
    rows.push_back({{"R", p.R}, {"sphere", p.sphere}, {"equator", p.equator}, {"total", p.total}, {"decay", p.decay}});
  return nlohmann::ordered_json{{"partials", rows},
                                {"extrapolated", extrapolated},
                                {"error_bar", error_bar},
                                {"decay_order", decay_order},
                                {"decay_verified", decay_verified}};
}

namespace {

// Least-squares polynomial in x through the points; returns the value at x = 0.
double poly_at_zero(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  const int m = static_cast<int>(x.size());
  Mat A(m, degree + 1);
  Vec b(m);
  for (int i = 0; i < m; ++i) {
    for (int d = 0; d <= degree; ++d) A(i, d) = std::pow(x[i], d);
    b(i) = y[i];
  }
  return A.colPivHouseholderQr().solve(b)(0);
}

}  // namespace

MassReport adm_mass(const MetricField& g, const std::vector<double>& radii, int order) {
  if (radii.empty()) throw ParameterError("adm_mass: empty radius list");
  const int n = g.dim();
  MassReport m;
  std::vector<double> x, y, lr, ld;
  for (double R : radii) {
    if (!(R > 0)) throw ParameterError("adm_mass: radii must be positive");
    m.partials.push_back(adm_mass_partial(g, R, order));
    x.push_back(1.0 / R);
    y.push_back(m.partials.back().total);
    if (m.partials.back().decay > 0) {
      lr.push_back(std::log(R));
      ld.push_back(std::log(m.partials.back().decay));
    }
  }
  const std::size_t k = x.size();
  if (k == 1) {
    m.extrapolated = y[0];
    m.error_bar = std::abs(y[0]);
  } else {
    const int deg = k >= 3 ? 2 : 1;
    m.extrapolated = poly_at_zero(x, y, deg);
    const double lower = deg == 2 ? poly_at_zero(x, y, 1) : y.back();
    m.error_bar = std::abs(m.extrapolated - lower);
  }
  const double need = 0.5 * (n - 2.0);
  if (ld.empty()) {
    m.decay_order = std::numeric_limits<double>::infinity();
    m.decay_verified = true;
  } else if (ld.size() >= 2) {
    const double mx = std::accumulate(lr.begin(), lr.end(), 0.0) / lr.size();
    const double my = std::accumulate(ld.begin(), ld.end(), 0.0) / ld.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lr.size(); ++i) {
      sxy += (lr[i] - mx) * (ld[i] - my);
      sxx += sq(lr[i] - mx);
    }
    m.decay_order = -sxy / sxx;
    m.decay_verified = m.decay_order > need;
  }
  return m;
}

// ---------------------------------------------------------------- I and the P'-I relation

double brendle_chen_I(const ScalarField& G, const Mat& pi0, double rho, int order) {
  if (G.dim() != 3) throw PreconditionError("brendle_chen_I: n = 3 only");
  if (pi0.rows() != 2 || pi0.cols() != 2) throw ParameterError("brendle_chen_I: pi0 must be 2x2");
  require_order(order);
  const QuadratureRule S = hemisphere_rule(3, rho, order);
  double first = 0, second = 0;
  for (std::size_t k = 0; k < S.size(); ++k) {
    const Vec& z = S.nodes[k];
    const double r = z.norm();
    const double Gr = G.gradient(z).dot(z) / r;
    first += S.weights[k] * (Gr / r + G.value(z) / (r * r));
    double q = 0;
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l) q += z(j) * z(l) * pi0(j, l);
    second += S.weights[k] * z(2) * q / std::pow(r, 5);
  }
  return 8 * first - 12 * second;
}

nlohmann::ordered_json PIRelation::to_json() const {
  nlohmann::ordered_json rs = nlohmann::ordered_json::array();
  for (const auto& r : rows) rs.push_back({{"rho", r.rho}, {"P_prime", r.P_prime}, {"I", r.I}, {"defect", r.defect}});
  return nlohmann::ordered_json{{"rows", rs}, {"C", C}, {"r_squared", r_squared}, {"degenerate", degenerate}};
}

std::string PIRelation::to_csv() const {
  std::ostringstream os;
  os << "rho,P_prime,I,defect\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.rho, r.P_prime, r.I, r.defect);
    os << buf;
  }
  return os.str();
}

PIRelation check_P_I_relation(const ScalarField& G, const Mat& pi0, const std::vector<double>& rhos, int order) {
  if (rhos.size() < 3) throw ParameterError("check_P_I_relation: need at least 3 radii");
  PIRelation out;
  double scale = 0;
  for (double rho : rhos) {
    PIRow r;
    r.rho = rho;
    r.P_prime = pohozaev_P(G, rho, 0, 0, order).P_prime;
    r.I = brendle_chen_I(G, pi0, rho, order);
    r.defect = r.P_prime + r.I / 16;
    scale = std::max({scale, std::abs(r.P_prime), std::abs(r.I / 16)});
    out.rows.push_back(r);
  }
  double sxy = 0, sxx = 0, sy = 0, dmax = 0;
  for (const auto& r : out.rows) {
    const double x = r.rho * std::abs(std::log(r.rho));
    sxy += x * r.defect;
    sxx += x * x;
    sy += r.defect;
    dmax = std::max(dmax, std::abs(r.defect));
  }
  out.C = sxy / sxx;
  const double mean = sy / out.rows.size();
  double ss_res = 0, ss_tot = 0;
  for (const auto& r : out.rows) {
    const double x = r.rho * std::abs(std::log(r.rho));
    ss_res += sq(r.defect - out.C * x);
    ss_tot += sq(r.defect - mean);
  }
  out.degenerate = dmax <= 1e-12 * std::max(1.0, scale);
  out.r_squared = ss_tot > 0 ? 1 - ss_res / ss_tot : 0.0;
  return out;
}

// ---------------------------------------------------------------- sign restriction

nlohmann::ordered_json SignExperiment::to_json() const {
  return nlohmann::ordered_json{{"radii", radii},           {"P_prime", P_prime},     {"liminf", liminf},
                                {"fit_error", fit_error},   {"limit_change", limit_change},
                                {"violation", violation},   {"aborted", aborted},     {"diagnostics", diagnostics}};
}

SignExperiment sign_restriction_experiment(const std::vector<ScalarField>& sequence, const std::vector<double>& radii,
                                           double tolerance, double convergence_tol, int order) {
  if (sequence.empty()) throw ParameterError("sign_restriction_experiment: empty sequence");
  if (radii.size() < 3) throw ParameterError("sign_restriction_experiment: need at least 3 radii");
  SignExperiment s;
  s.radii = radii;
  const ScalarField& G = sequence.back();
  if (sequence.size() >= 2) {
    const double rmid = radii[radii.size() / 2];
    const double a = pohozaev_P(G, rmid, 0, 0, order).P_prime;
    const double b = pohozaev_P(sequence[sequence.size() - 2], rmid, 0, 0, order).P_prime;
    // compare against the size of the individual surface terms
    const PohozaevReport full = pohozaev_P(G, rmid, 0, 0, order);
    const double scale = std::abs(full.s_mixed) + std::abs(full.s_gradient) + std::abs(full.s_radial);
    s.limit_change = std::abs(a - b) / std::max(scale, 1e-300);
    if (s.limit_change > convergence_tol) {
      s.aborted = true;
      char buf[160];
      std::snprintf(buf, sizeof buf, "G-limit not converged: relative change %.3e of P' at r = %.3g", s.limit_change,
                    rmid);
      s.diagnostics = buf;
      return s;
    }
  }
  for (double r : radii) s.P_prime.push_back(pohozaev_P(G, r, 0, 0, order).P_prime);
  const int m = static_cast<int>(radii.size());
  const int cols = m >= 4 ? 3 : 2;
  Mat A(m, cols);
  Vec y(m);
  for (int i = 0; i < m; ++i) {
    const double r = radii[i];
    A(i, 0) = 1;
    A(i, 1) = r;
    if (cols == 3) A(i, 2) = r * std::abs(std::log(r));
    y(i) = s.P_prime[i];
  }
  const Vec c = A.colPivHouseholderQr().solve(y);
  s.liminf = c(0);
  s.fit_error = (A * c - y).cwiseAbs().maxCoeff();
  s.violation = s.liminf < -(tolerance + s.fit_error);
  s.diagnostics = s.violation ? "liminf P'(G, r) < 0: sign restriction violated" : "no violation";
  return s;
}

}  // namespace yamabe
