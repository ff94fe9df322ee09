#include "yamabe/geometry.hpp"

#include <cmath>
#include <sstream>

namespace yamabe {

namespace {

double fd_h(double rel, const Vec& z) { return rel * (1.0 + z.norm()); }

Vec fd_gradient(const ScalarField::ValueFn& f, const Vec& z, double rel) {
  const double h = fd_h(rel, z);
  Vec g(z.size());
  Vec zp = z, zm = z;
  for (int a = 0; a < z.size(); ++a) {
    zp(a) = z(a) + h;
    zm(a) = z(a) - h;
    g(a) = (f(zp) - f(zm)) / (2 * h);
    zp(a) = zm(a) = z(a);
  }
  return g;
}

Mat fd_hessian(const ScalarField::ValueFn& f, const Vec& z, double rel) {
  const double h = fd_h(rel, z);
  const int n = static_cast<int>(z.size());
  Mat H(n, n);
  const double f0 = f(z);
  Vec w = z;
  for (int a = 0; a < n; ++a) {
    w(a) = z(a) + h;
    const double fp = f(w);
    w(a) = z(a) - h;
    const double fm = f(w);
    w(a) = z(a);
    H(a, a) = (fp - 2 * f0 + fm) / (h * h);
    for (int b = a + 1; b < n; ++b) {
      double s = 0;
      for (int sa : {1, -1})
        for (int sb : {1, -1}) {
          w(a) = z(a) + sa * h;
          w(b) = z(b) + sb * h;
          s += sa * sb * f(w);
        }
      w(a) = z(a);
      w(b) = z(b);
      H(a, b) = H(b, a) = s / (4 * h * h);
    }
  }
  return H;
}

std::vector<Mat> fd_metric_first(const MetricField::MatFn& g, const Vec& z, double rel) {
  const double h = fd_h(rel, z);
  const int n = static_cast<int>(z.size());
  std::vector<Mat> d(n);
  Vec w = z;
  for (int c = 0; c < n; ++c) {
    w(c) = z(c) + h;
    Mat gp = g(w);
    w(c) = z(c) - h;
    Mat gm = g(w);
    w(c) = z(c);
    d[c] = (gp - gm) / (2 * h);
  }
  return d;
}

std::vector<Mat> fd_metric_second(const MetricField::MatFn& g, const Vec& z, double rel) {
  const double h = fd_h(rel, z);
  const int n = static_cast<int>(z.size());
  std::vector<Mat> d(n * n);
  const Mat g0 = g(z);
  Vec w = z;
  for (int c = 0; c < n; ++c) {
    w(c) = z(c) + h;
    Mat gp = g(w);
    w(c) = z(c) - h;
    Mat gm = g(w);
    w(c) = z(c);
    d[c * n + c] = (gp - 2 * g0 + gm) / (h * h);
    for (int e = c + 1; e < n; ++e) {
      Mat s = Mat::Zero(n, n);
      for (int sc : {1, -1})
        for (int se : {1, -1}) {
          w(c) = z(c) + sc * h;
          w(e) = z(e) + se * h;
          s += (sc * se) * g(w);
        }
      w(c) = z(c);
      w(e) = z(e);
      d[c * n + e] = d[e * n + c] = s / (4 * h * h);
    }
  }
  return d;
}

Mat checked_inverse(const Mat& g) {
  Eigen::LDLT<Mat> ldlt(g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || std::abs(g.determinant()) < 1e-300)
    throw SingularMetricError("metric is not invertible/positive definite at the queried point");
  return ldlt.solve(Mat::Identity(g.rows(), g.cols()));
}

}  // namespace

// ---------------------------------------------------------------- ScalarField

ScalarField ScalarField::analytic(int n, ValueFn f, GradFn grad, HessFn hess) {
  ScalarField s;
  s.n_ = n;
  s.mode_ = DerivMode::analytic;
  s.f_ = std::move(f);
  s.grad_ = std::move(grad);
  s.hess_ = std::move(hess);
  return s;
}

ScalarField ScalarField::finite_difference(int n, ValueFn f, double rel_step) {
  ScalarField s;
  s.n_ = n;
  s.mode_ = DerivMode::finite_difference;
  s.step_ = rel_step;
  s.f_ = std::move(f);
  return s;
}

ScalarField ScalarField::constant(int n, double c) {
  return analytic(
      n, [c](const Vec&) { return c; }, [n](const Vec&) { return Vec::Zero(n); },
      [n](const Vec&) { return Mat::Zero(n, n); });
}

ScalarField ScalarField::coordinate(int n, int a) {
  return analytic(
      n, [a](const Vec& z) { return z(a); }, [n, a](const Vec&) { return Vec(Vec::Unit(n, a)); },
      [n](const Vec&) { return Mat::Zero(n, n); });
}

ScalarField ScalarField::squared_norm(int n) {
  return analytic(
      n, [](const Vec& z) { return z.squaredNorm(); }, [](const Vec& z) { return Vec(2 * z); },
      [n](const Vec&) { return Mat(2 * Mat::Identity(n, n)); });
}

double ScalarField::value(const Vec& z) const { return f_(z); }

Vec ScalarField::gradient(const Vec& z) const {
  if (mode_ == DerivMode::analytic) return grad_(z);
  return fd_gradient(f_, z, step_);
}

Mat ScalarField::hessian(const Vec& z) const {
  if (mode_ == DerivMode::analytic) return hess_(z);
  return fd_hessian(f_, z, step_);
}

ScalarField ScalarField::with_finite_differences(double rel_step) const {
  return finite_difference(n_, f_, rel_step);
}

ScalarField ScalarField::linear_combination(double a, const ScalarField& u, double b, const ScalarField& v) {
  const int n = u.dim();
  auto val = [a, b, u, v](const Vec& z) { return a * u.value(z) + b * v.value(z); };
  if (u.mode() == DerivMode::analytic && v.mode() == DerivMode::analytic) {
    return analytic(
        n, val, [a, b, u, v](const Vec& z) { return Vec(a * u.gradient(z) + b * v.gradient(z)); },
        [a, b, u, v](const Vec& z) { return Mat(a * u.hessian(z) + b * v.hessian(z)); });
  }
  return finite_difference(n, val, std::min(u.fd_step(), v.fd_step()));
}

ScalarField ScalarField::quotient(const ScalarField& u, const ScalarField& xi) {
  const int n = u.dim();
  auto val = [u, xi](const Vec& z) {
    const double x = xi.value(z);
    if (!(x > 0)) throw DomainError("quotient: nonpositive denominator");
    return u.value(z) / x;
  };
  if (u.mode() == DerivMode::analytic && xi.mode() == DerivMode::analytic) {
    auto grad = [u, xi](const Vec& z) {
      const double x = xi.value(z);
      return Vec(u.gradient(z) / x - u.value(z) * xi.gradient(z) / (x * x));
    };
    auto hess = [u, xi](const Vec& z) {
      const double x = xi.value(z), uu = u.value(z);
      const Vec gu = u.gradient(z), gx = xi.gradient(z);
      Mat H = u.hessian(z) / x - (gu * gx.transpose() + gx * gu.transpose()) / (x * x) -
              uu * xi.hessian(z) / (x * x) + 2 * uu * gx * gx.transpose() / (x * x * x);
      return H;
    };
    return analytic(n, val, grad, hess);
  }
  return finite_difference(n, val, std::min(u.fd_step(), xi.fd_step()));
}

// ---------------------------------------------------------------- MetricField

MetricField MetricField::analytic(int n, MatFn g, DerivFn dg, DerivFn ddg, bool fermi, std::string kind,
                                  nlohmann::ordered_json params) {
  MetricField m;
  m.n_ = n;
  m.fermi_ = fermi;
  m.mode_ = DerivMode::analytic;
  m.g_ = std::move(g);
  m.dg_ = std::move(dg);
  m.ddg_ = std::move(ddg);
  m.kind_ = std::move(kind);
  m.params_ = std::move(params);
  return m;
}

MetricField MetricField::finite_difference(int n, MatFn g, bool fermi, double rel_step, std::string kind,
                                           nlohmann::ordered_json params) {
  MetricField m;
  m.n_ = n;
  m.fermi_ = fermi;
  m.mode_ = DerivMode::finite_difference;
  m.step_ = rel_step;
  m.g_ = std::move(g);
  m.kind_ = std::move(kind);
  m.params_ = std::move(params);
  return m;
}

MetricField MetricField::euclidean(int n) {
  if (n < 2) throw ParameterError("euclidean: dimension must be at least 2");
  return analytic(
      n, [n](const Vec&) { return Mat(Mat::Identity(n, n)); },
      [n](const Vec&) { return std::vector<Mat>(n, Mat::Zero(n, n)); },
      [n](const Vec&) { return std::vector<Mat>(n * n, Mat::Zero(n, n)); }, true, "euclidean",
      nlohmann::ordered_json{{"n", n}});
}

MetricField MetricField::fermi_synthetic(int n, const Mat& pi, const Mat& beta) {
  if (pi.rows() != n - 1 || pi.cols() != n - 1 || beta.rows() != n - 1 || beta.cols() != n - 1)
    throw ParameterError("fermi_synthetic: pi and beta must be (n-1)x(n-1)");
  if ((pi - pi.transpose()).norm() > 0 || (beta - beta.transpose()).norm() > 0)
    throw ParameterError("fermi_synthetic: pi and beta must be symmetric");
  auto g = [n, pi, beta](const Vec& z) {
    Mat m = Mat::Identity(n, n);
    m.topLeftCorner(n - 1, n - 1) += -2.0 * pi * z(n - 1) + beta * z.squaredNorm();
    return m;
  };
  auto dg = [n, pi, beta](const Vec& z) {
    std::vector<Mat> d(n, Mat::Zero(n, n));
    for (int c = 0; c < n; ++c) {
      d[c].topLeftCorner(n - 1, n - 1) = 2.0 * beta * z(c);
      if (c == n - 1) d[c].topLeftCorner(n - 1, n - 1) += -2.0 * pi;
    }
    return d;
  };
  auto ddg = [n, beta](const Vec&) {
    std::vector<Mat> d(n * n, Mat::Zero(n, n));
    for (int c = 0; c < n; ++c) d[c * n + c].topLeftCorner(n - 1, n - 1) = 2.0 * beta;
    return d;
  };
  nlohmann::ordered_json p;
  p["n"] = n;
  p["pi"] = nlohmann::ordered_json::array();
  p["beta"] = nlohmann::ordered_json::array();
  for (int j = 0; j < n - 1; ++j) {
    nlohmann::ordered_json rp = nlohmann::ordered_json::array(), rb = nlohmann::ordered_json::array();
    for (int l = 0; l < n - 1; ++l) {
      rp.push_back(pi(j, l));
      rb.push_back(beta(j, l));
    }
    p["pi"].push_back(rp);
    p["beta"].push_back(rb);
  }
  return analytic(n, g, dg, ddg, true, "fermi_synthetic", p);
}

MetricField MetricField::fermi_horospherical(int n, double b) {
  auto g = [n, b](const Vec& z) {
    Mat m = Mat::Identity(n, n);
    m.topLeftCorner(n - 1, n - 1) *= std::exp(-2 * b * z(n - 1));
    return m;
  };
  auto dg = [n, b](const Vec& z) {
    std::vector<Mat> d(n, Mat::Zero(n, n));
    d[n - 1].topLeftCorner(n - 1, n - 1) = Mat::Identity(n - 1, n - 1) * (-2 * b * std::exp(-2 * b * z(n - 1)));
    return d;
  };
  auto ddg = [n, b](const Vec& z) {
    std::vector<Mat> d(n * n, Mat::Zero(n, n));
    d[(n - 1) * n + (n - 1)].topLeftCorner(n - 1, n - 1) =
        Mat::Identity(n - 1, n - 1) * (4 * b * b * std::exp(-2 * b * z(n - 1)));
    return d;
  };
  return analytic(n, g, dg, ddg, true, "fermi_horospherical", nlohmann::ordered_json{{"n", n}, {"b", b}});
}

nlohmann::ordered_json MetricField::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind_;
  for (auto it = params_.begin(); it != params_.end(); ++it) j[it.key()] = it.value();
  return j;
}

Mat MetricField::metric(const Vec& z) const { return g_(z); }

std::vector<Mat> MetricField::first_derivatives(const Vec& z) const {
  if (mode_ == DerivMode::analytic) return dg_(z);
  return fd_metric_first(g_, z, step_);
}

std::vector<Mat> MetricField::second_derivatives(const Vec& z) const {
  if (mode_ == DerivMode::analytic) return ddg_(z);
  return fd_metric_second(g_, z, step_);
}

MetricField MetricField::with_finite_differences(double rel_step) const {
  return finite_difference(n_, g_, fermi_, rel_step, kind_, params_);
}

MetricField conformal_change(const MetricField& g, const ScalarField& xi) {
  const int n = g.dim();
  if (n < 3) throw ParameterError("conformal_change: requires n >= 3");
  const double p = 4.0 / (n - 2);
  auto positive = [xi](const Vec& z) {
    const double x = xi.value(z);
    if (!(x > 0)) throw DomainError("conformal_change: nonpositive conformal factor");
    return x;
  };
  auto gm = [g, p, positive](const Vec& z) { return Mat(std::pow(positive(z), p) * g.metric(z)); };
  nlohmann::ordered_json params;
  params["base"] = g.to_json();
  if (g.mode() == DerivMode::analytic && xi.mode() == DerivMode::analytic) {
    auto dg = [g, xi, p, n, positive](const Vec& z) {
      const double x = positive(z);
      const Vec gx = xi.gradient(z);
      const Mat g0 = g.metric(z);
      const auto d0 = g.first_derivatives(z);
      std::vector<Mat> d(n);
      for (int c = 0; c < n; ++c) d[c] = p * std::pow(x, p - 1) * gx(c) * g0 + std::pow(x, p) * d0[c];
      return d;
    };
    auto ddg = [g, xi, p, n, positive](const Vec& z) {
      const double x = positive(z);
      const Vec gx = xi.gradient(z);
      const Mat hx = xi.hessian(z);
      const Mat g0 = g.metric(z);
      const auto d0 = g.first_derivatives(z);
      const auto dd0 = g.second_derivatives(z);
      const double x0 = std::pow(x, p), x1 = std::pow(x, p - 1), x2 = std::pow(x, p - 2);
      std::vector<Mat> d(n * n);
      for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e)
          d[c * n + e] = (p * (p - 1) * x2 * gx(c) * gx(e) + p * x1 * hx(c, e)) * g0 +
                         p * x1 * (gx(c) * d0[e] + gx(e) * d0[c]) + x0 * dd0[c * n + e];
      return d;
    };
    MetricField m = MetricField::analytic(n, gm, dg, ddg, false, "conformal", params);
    return m;
  }
  return MetricField::finite_difference(n, gm, false, std::min(g.step_, xi.fd_step()), "conformal", params);
}

// ---------------------------------------------------------------- curvature

std::vector<Mat> christoffel(const Mat& ginv, const std::vector<Mat>& dg) {
  const int n = static_cast<int>(ginv.rows());
  std::vector<Mat> G(n, Mat::Zero(n, n));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      // lowered: Gamma_{d,ab} = (d_a g_db + d_b g_da - d_d g_ab)/2
      Vec low(n);
      for (int d = 0; d < n; ++d) low(d) = 0.5 * (dg[a](d, b) + dg[b](d, a) - dg[d](a, b));
      const Vec up = ginv * low;
      for (int c = 0; c < n; ++c) G[c](a, b) = G[c](b, a) = up(c);
    }
  return G;
}

double scalar_curvature(const MetricField& g, const Vec& z) {
  const int n = g.dim();
  const Mat gm = g.metric(z);
  const Mat gi = checked_inverse(gm);
  const auto dg = g.first_derivatives(z);
  const auto ddg = g.second_derivatives(z);
  const auto G = christoffel(gi, dg);
  // d_e g^{cd} = -g^{cp} d_e g_pq g^{qd}
  std::vector<Mat> dgi(n);
  for (int e = 0; e < n; ++e) dgi[e] = -gi * dg[e] * gi;
  // dG[e][c](a,b) = d_e Gamma^c_ab
  std::vector<std::vector<Mat>> dG(n, std::vector<Mat>(n, Mat::Zero(n, n)));
  for (int e = 0; e < n; ++e)
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        Vec low(n), dlow(n);
        for (int d = 0; d < n; ++d) {
          low(d) = 0.5 * (dg[a](d, b) + dg[b](d, a) - dg[d](a, b));
          dlow(d) = 0.5 * (ddg[e * n + a](d, b) + ddg[e * n + b](d, a) - ddg[e * n + d](a, b));
        }
        const Vec v = dgi[e] * low + gi * dlow;
        for (int c = 0; c < n; ++c) dG[e][c](a, b) = dG[e][c](b, a) = v(c);
      }
  // R_bd = d_a G^a_bd - d_d G^a_ba + G^a_ae G^e_bd - G^a_de G^e_ba
  double R = 0;
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      if (gi(b, d) == 0.0) continue;
      double Ric = 0;
      for (int a = 0; a < n; ++a) {
        Ric += dG[a][a](b, d) - dG[d][a](b, a);
        for (int e = 0; e < n; ++e) Ric += G[a](a, e) * G[e](b, d) - G[a](d, e) * G[e](b, a);
      }
      R += gi(b, d) * Ric;
    }
  return R;
}

double laplace_beltrami(const MetricField& g, const ScalarField& u, const Vec& z) {
  const int n = g.dim();
  const Mat gi = checked_inverse(g.metric(z));
  const auto G = christoffel(gi, g.first_derivatives(z));
  const Vec du = u.gradient(z);
  const Mat H = u.hessian(z);
  double s = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double cov = H(a, b);
      for (int c = 0; c < n; ++c) cov -= G[c](a, b) * du(c);
      s += gi(a, b) * cov;
    }
  return s;
}

double conformal_laplacian(const MetricField& g, const ScalarField& u, const Vec& z) {
  const int n = g.dim();
  if (n < 3) throw ParameterError("conformal_laplacian: requires n >= 3");
  if (z(n - 1) < 0) throw DomainError("conformal_laplacian: point outside the half-space");
  return laplace_beltrami(g, u, z) - (n - 2.0) / (4.0 * (n - 1.0)) * scalar_curvature(g, z) * u.value(z);
}

BoundaryGeometry boundary_geometry(const MetricField& g, const Vec& zbar) {
  const int n = g.dim();
  if (zbar(n - 1) != 0.0) throw DomainError("boundary_geometry: point is not on the boundary");
  const Mat gm = g.metric(zbar);
  const Mat gi = checked_inverse(gm);
  const auto G = christoffel(gi, g.first_derivatives(zbar));
  const double s = std::sqrt(gi(n - 1, n - 1));
  BoundaryGeometry bg;
  bg.eta = gi.col(n - 1) / s;
  bg.pi = Mat(n - 1, n - 1);
  for (int j = 0; j < n - 1; ++j)
    for (int l = 0; l < n - 1; ++l) bg.pi(j, l) = G[n - 1](j, l) / s;
  const Mat gamma_inv = checked_inverse(gm.topLeftCorner(n - 1, n - 1));
  bg.h = (gamma_inv.cwiseProduct(bg.pi)).sum() / (n - 1.0);
  return bg;
}

double conformal_boundary_operator(const MetricField& g, const BoundaryGeometry& bg, const ScalarField& u,
                                   const Vec& zbar) {
  const int n = g.dim();
  if (zbar(n - 1) != 0.0) throw DomainError("conformal_boundary_operator: point is not on the boundary");
  return bg.eta.dot(u.gradient(zbar)) - 0.5 * (n - 2.0) * bg.h * u.value(zbar);
}

double conformal_boundary_operator(const MetricField& g, const ScalarField& u, const Vec& zbar) {
  return conformal_boundary_operator(g, boundary_geometry(g, zbar), u, zbar);
}

// ---------------------------------------------------------------- audits

VerificationReport check_conformal_law(const MetricField& g, const ScalarField& xi, const ScalarField& u,
                                       const std::vector<Vec>& interior, const std::vector<Vec>& boundary,
                                       double tolerance) {
  const int n = g.dim();
  const MetricField gt = conformal_change(g, xi);
  const ScalarField w = ScalarField::quotient(u, xi);
  double max_int = 0, max_bd = 0, scale_int = 0, scale_bd = 0;
  for (const Vec& z : interior) {
    const double lhs = conformal_laplacian(gt, w, z);
    const double rhs = std::pow(xi.value(z), -(n + 2.0) / (n - 2.0)) * conformal_laplacian(g, u, z);
    max_int = std::max(max_int, std::abs(lhs - rhs));
    scale_int = std::max(scale_int, std::abs(rhs));
  }
  for (const Vec& z : boundary) {
    const double lhs = conformal_boundary_operator(gt, w, z);
    const double rhs = std::pow(xi.value(z), -double(n) / (n - 2.0)) * conformal_boundary_operator(g, u, z);
    max_bd = std::max(max_bd, std::abs(lhs - rhs));
    scale_bd = std::max(scale_bd, std::abs(rhs));
  }
  VerificationReport r;
  r.id = "geometry.conformal_law";
  r.anchor = "conformal.transformation_laws";
  r.inputs["metric"] = g.to_json();
  r.inputs["interior_samples"] = interior.size();
  r.inputs["boundary_samples"] = boundary.size();
  r.inputs["mode"] = (xi.mode() == DerivMode::analytic && u.mode() == DerivMode::analytic &&
                      g.mode() == DerivMode::analytic)
                         ? "analytic"
                         : "finite_difference";
  r.computed["interior_max_abs_residual"] = max_int;
  r.computed["boundary_max_abs_residual"] = max_bd;
  r.computed["interior_scale"] = scale_int;
  r.computed["boundary_scale"] = scale_bd;
  r.reference["residual"] = 0.0;
  r.provenance = "identity";
  r.tolerance = tolerance;
  r.set(max_int < tolerance && max_bd < tolerance);
  return r;
}

VerificationReport fermi_expansion_audit(const MetricField& g, const Mat& pi0, const FermiAuditOptions& opt) {
  const int n = g.dim();
  if (!g.is_fermi()) throw PreconditionError("fermi_expansion_audit: metric is not declared in Fermi form");
  VerificationReport r;
  r.id = "geometry.fermi_expansion";
  r.anchor = "fermi.expansion";
  r.inputs["metric"] = g.to_json();
  r.inputs["radius"] = opt.radius;
  r.inputs["levels"] = opt.levels;
  r.provenance = "closed_form";
  r.tolerance = opt.coefficient_tol;

  // Fermi form at sampled points.
  Rng rng(opt.seed);
  double form_defect = 0;
  std::vector<Vec> dirs;
  for (int k = 0; k < opt.directions; ++k) {
    Vec d(n);
    for (int a = 0; a < n; ++a) d(a) = rng.uniform(-1, 1);
    d(n - 1) = std::abs(d(n - 1)) + 0.1;
    dirs.push_back(d.normalized());
  }
  for (int lev = 0; lev < opt.levels; ++lev) {
    const double rho = opt.radius * std::ldexp(1.0, -lev);
    for (const Vec& d : dirs) {
      const Mat m = g.metric(rho * d);
      form_defect = std::max(form_defect, std::abs(m(n - 1, n - 1) - 1.0));
      for (int j = 0; j < n - 1; ++j) form_defect = std::max(form_defect, std::abs(m(j, n - 1)));
    }
  }
  if (form_defect > 1e-12)
    throw PreconditionError("fermi_expansion_audit: g_nn != 1 or g_jn != 0 at sampled points");

  // Linear coefficient in z_n by Richardson on c(t) = (g(t e_n) - I)/t.
  const Mat I = Mat::Identity(n, n);
  auto c_of = [&](double t) {
    Vec z = Vec::Zero(n);
    z(n - 1) = t;
    return Mat((g.metric(z) - I) / t);
  };
  auto det_of = [&](double t) {
    Vec z = Vec::Zero(n);
    z(n - 1) = t;
    return (g.metric(z).determinant() - 1.0) / t;
  };
  const double t = opt.radius;
  const Mat lin = 2.0 * c_of(t / 2) - c_of(t);
  const double det_lin = 2.0 * det_of(t / 2) - det_of(t);
  const Mat pi_fit = -0.5 * lin.topLeftCorner(n - 1, n - 1);
  const double h0 = pi0.trace() / (n - 1.0);

  // Remainder |g - I + 2 pi0 z_n| on dyadic radii, order fit.
  std::vector<double> rem;
  for (int lev = 0; lev < opt.levels; ++lev) {
    const double rho = opt.radius * std::ldexp(1.0, -lev);
    double mx = 0;
    for (const Vec& d : dirs) {
      const Vec z = rho * d;
      Mat e = g.metric(z) - I;
      e.topLeftCorner(n - 1, n - 1) += 2.0 * pi0 * z(n - 1);
      mx = std::max(mx, e.cwiseAbs().maxCoeff());
    }
    rem.push_back(mx);
  }
  double order = 0;
  bool remainder_zero = true;
  for (double v : rem) remainder_zero = remainder_zero && v < 1e-14;
  if (!remainder_zero) {
    // least-squares slope of log rem vs log rho
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int m = static_cast<int>(rem.size());
    for (int lev = 0; lev < m; ++lev) {
      const double x = std::log(opt.radius * std::ldexp(1.0, -lev));
      const double y = std::log(std::max(rem[lev], 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    order = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  const double pi_err = (pi_fit - pi0).cwiseAbs().maxCoeff();
  // det(I - 2 pi z_n) = 1 - 2 tr(pi) z_n + ...; sqrt(det) has coefficient -(n-1) h.
  const double det_ref = -2.0 * (n - 1.0) * h0;
  const double det_err = std::abs(det_lin - det_ref);

  nlohmann::ordered_json pij = nlohmann::ordered_json::array();
  for (int j = 0; j < n - 1; ++j) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int l = 0; l < n - 1; ++l) row.push_back(pi_fit(j, l));
    pij.push_back(row);
  }
  r.computed["pi_fit"] = pij;
  r.computed["pi_max_error"] = pi_err;
  r.computed["mean_curvature_fit"] = pi_fit.trace() / (n - 1.0);
  r.computed["det_linear_coefficient"] = det_lin;
  r.computed["sqrt_det_linear_coefficient"] = 0.5 * det_lin;
  r.computed["remainders"] = rem;
  r.computed["remainder_order"] = remainder_zero ? nlohmann::ordered_json("exact") : nlohmann::ordered_json(order);
  r.reference["mean_curvature"] = h0;
  r.reference["det_linear_coefficient"] = det_ref;
  r.reference["remainder_order_min"] = 1.9;
  const bool order_ok = remainder_zero || order >= 1.9;
  r.set(pi_err < opt.coefficient_tol && det_err < opt.coefficient_tol && order_ok);
  return r;
}

}  // namespace yamabe
