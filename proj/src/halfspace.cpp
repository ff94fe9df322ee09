#include "yamabe/halfspace.hpp"

#include <cmath>

namespace yamabe {

namespace {

double rel(double res, double t1, double t2) {
  const double s = std::abs(t1) + std::abs(t2);
  return s > 0 ? std::abs(res) / s : std::abs(res);
}

struct BubbleCore {
  Vec w;       // (y' - c, y_n + eps)
  double D;    // |w|^2 - eps^2 kappa
  double m;    // (n-2)/2
  double scale;  // eps^m
};

BubbleCore core(const BubbleParams& p, const Vec& y) {
  p.validate();
  if (y.size() != p.n) throw ParameterError("bubble: point dimension does not match n");
  require_half_space(y, "bubble");
  BubbleCore c;
  c.w = y;
  c.w.head(p.n - 1) -= p.center_or_zero();
  c.w(p.n - 1) += p.eps;
  c.D = c.w.squaredNorm() - p.eps * p.eps * p.kappa;
  if (!(c.D > 0)) throw DomainError("bubble: nonpositive denominator");
  c.m = 0.5 * (p.n - 2);
  c.scale = std::pow(p.eps, c.m);
  return c;
}

}  // namespace

void BubbleParams::validate() const {
  if (n < 3) throw ParameterError("BubbleParams: n must be at least 3");
  if (!(kappa >= 0.0 && kappa < 1.0)) throw ParameterError("BubbleParams: kappa must lie in [0,1)");
  if (!(eps > 0.0)) throw ParameterError("BubbleParams: eps must be positive");
  if (center.size() != 0 && center.size() != n - 1) throw ParameterError("BubbleParams: center must have length n-1");
}

BubbleParams BubbleParams::canonical(double kappa, int n) {
  BubbleParams p;
  p.kappa = kappa;
  p.eps = 1.0;
  p.n = n;
  p.center = Vec::Zero(n - 1);
  return p;
}

BubbleParams BubbleParams::from_json(const nlohmann::json& j) {
  BubbleParams p;
  p.kappa = j.at("kappa").get<double>();
  p.eps = j.value("eps", 1.0);
  p.n = j.value("n", 3);
  p.center = Vec::Zero(p.n - 1);
  if (j.contains("center")) {
    const auto& c = j.at("center");
    if (static_cast<int>(c.size()) != p.n - 1) throw ParameterError("BubbleParams: center must have length n-1");
    for (int i = 0; i < p.n - 1; ++i) p.center(i) = c.at(i).get<double>();
  }
  p.validate();
  return p;
}

nlohmann::ordered_json BubbleParams::to_json() const {
  nlohmann::ordered_json j;
  j["kappa"] = kappa;
  j["eps"] = eps;
  const Vec c = center_or_zero();
  j["center"] = std::vector<double>(c.data(), c.data() + c.size());
  j["n"] = n;
  return j;
}

PointEval eval_bubble(const BubbleParams& p, const Vec& y) {
  const BubbleCore c = core(p, y);
  const double m = c.m;
  const double f0 = std::pow(c.D, -m);
  const double f1 = -m * f0 / c.D;
  const double f2 = m * (m + 1) * f0 / (c.D * c.D);
  PointEval e;
  e.value = c.scale * f0;
  e.grad = c.scale * 2.0 * f1 * c.w;
  e.hess = c.scale * (4.0 * f2 * c.w * c.w.transpose() + 2.0 * f1 * Mat::Identity(p.n, p.n));
  return e;
}

std::vector<Mat> bubble_third_derivatives(const BubbleParams& p, const Vec& y) {
  const BubbleCore c = core(p, y);
  const double m = c.m;
  const double f0 = std::pow(c.D, -m);
  const double f2 = m * (m + 1) * f0 / (c.D * c.D);
  const double f3 = -m * (m + 1) * (m + 2) * f0 / (c.D * c.D * c.D);
  const int n = p.n;
  std::vector<Mat> T(n, Mat::Zero(n, n));
  const Mat ww = c.w * c.w.transpose();
  for (int k = 0; k < n; ++k) {
    // 8 f''' w_a w_b w_k + 4 f'' (d_ak w_b + d_bk w_a + d_ab w_k)
    T[k] = 8.0 * f3 * c.w(k) * ww + 4.0 * f2 * c.w(k) * Mat::Identity(n, n);
    T[k].row(k) += 4.0 * f2 * c.w.transpose();
    T[k].col(k) += 4.0 * f2 * c.w;
    T[k] *= c.scale;
  }
  return T;
}

ScalarField bubble_field(const BubbleParams& p) {
  p.validate();
  return ScalarField::analytic(
      p.n, [p](const Vec& y) { return eval_bubble(p, y).value; },
      [p](const Vec& y) { return eval_bubble(p, y).grad; }, [p](const Vec& y) { return eval_bubble(p, y).hess; });
}

ResidualPair residual_system(const ScalarField& u, double kappa, const Vec& y) {
  const int n = static_cast<int>(y.size());
  const double v = u.value(y);
  const double lap = u.hessian(y).trace();
  const double nonlin = n * (n - 2.0) * kappa * std::pow(v, (n + 2.0) / (n - 2.0));
  ResidualPair r;
  r.interior = lap - nonlin;
  r.interior_rel = rel(r.interior, lap, nonlin);
  if (on_boundary(y)) {
    const double dn = u.gradient(y)(n - 1);
    const double b = (n - 2.0) * std::pow(v, double(n) / (n - 2.0));
    r.boundary = dn + b;
    r.boundary_rel = rel(r.boundary, dn, b);
  }
  return r;
}

ResidualPair residual_system(const BubbleParams& p, const Vec& y) {
  const PointEval e = eval_bubble(p, y);
  const int n = p.n;
  const double lap = e.hess.trace();
  const double nonlin = n * (n - 2.0) * p.kappa * std::pow(e.value, (n + 2.0) / (n - 2.0));
  ResidualPair r;
  r.interior = lap - nonlin;
  r.interior_rel = rel(r.interior, lap, nonlin);
  if (on_boundary(y)) {
    const double dn = e.grad(n - 1);
    const double b = (n - 2.0) * std::pow(e.value, double(n) / (n - 2.0));
    r.boundary = dn + b;
    r.boundary_rel = rel(r.boundary, dn, b);
  }
  return r;
}

PointEval eval_horosphere(const HorosphereParams& p, const Vec& y) {
  if (!(p.eps > 0)) throw ParameterError("horosphere: eps must be positive");
  if (p.n < 3 || y.size() != p.n) throw ParameterError("horosphere: dimension mismatch");
  const int k = p.reading == HorosphereReading::normal ? p.n - 1 : 0;
  const double base = 2.0 * y(k) + p.eps;
  if (!(base > 0)) throw DomainError("horosphere: nonpositive base");
  const double m = 0.5 * (p.n - 2);
  PointEval e;
  e.value = std::pow(base, -m);
  e.grad = Vec::Zero(p.n);
  e.grad(k) = -2.0 * m * std::pow(base, -m - 1);
  e.hess = Mat::Zero(p.n, p.n);
  e.hess(k, k) = 4.0 * m * (m + 1) * std::pow(base, -m - 2);
  return e;
}

ScalarField horosphere_field(const HorosphereParams& p) {
  return ScalarField::analytic(
      p.n, [p](const Vec& y) { return eval_horosphere(p, y).value; },
      [p](const Vec& y) { return eval_horosphere(p, y).grad; },
      [p](const Vec& y) { return eval_horosphere(p, y).hess; });
}

ResidualPair residual_horosphere(const HorosphereParams& p, const Vec& y) {
  return residual_system(horosphere_field(p), 1.0, y);
}

PointEval eval_jacobi(const BubbleParams& p, int a, const Vec& y) {
  const int n = p.n;
  if (a < 1 || a > n) throw ParameterError("jacobi: index out of range");
  const PointEval U = eval_bubble(p, y);
  PointEval J;
  if (a < n) {
    const auto T = bubble_third_derivatives(p, y);
    J.value = U.grad(a - 1);
    J.grad = U.hess.col(a - 1);
    J.hess = T[a - 1];
    return J;
  }
  const double m = 0.5 * (n - 2);
  Vec x = y;
  x.head(n - 1) -= p.center_or_zero();
  const auto T = bubble_third_derivatives(p, y);
  J.value = m * U.value + x.dot(U.grad);
  J.grad = (m + 1) * U.grad + U.hess * x;
  J.hess = (m + 2) * U.hess;
  for (int c = 0; c < n; ++c) J.hess += x(c) * T[c];
  return J;
}

double eval_jacobi_field(int a, double kappa, const Vec& y) {
  return eval_jacobi(BubbleParams::canonical(kappa, static_cast<int>(y.size())), a, y).value;
}

ScalarField jacobi_field(const BubbleParams& p, int a) {
  if (a < 1 || a > p.n) throw ParameterError("jacobi: index out of range");
  return ScalarField::analytic(
      p.n, [p, a](const Vec& y) { return eval_jacobi(p, a, y).value; },
      [p, a](const Vec& y) { return eval_jacobi(p, a, y).grad; },
      [p, a](const Vec& y) { return eval_jacobi(p, a, y).hess; });
}

ResidualPair linearized_residual(const ScalarField& psi, const BubbleParams& p, const Vec& y) {
  const int n = p.n;
  const double U = eval_bubble(p, y).value;
  const double v = psi.value(y);
  const double lap = psi.hessian(y).trace();
  const double pot = n * (n + 2.0) * p.kappa * std::pow(U, 4.0 / (n - 2.0)) * v;
  ResidualPair r;
  r.interior = lap - pot;
  r.interior_rel = rel(r.interior, lap, pot);
  if (on_boundary(y)) {
    const double dn = psi.gradient(y)(n - 1);
    const double rob = n * std::pow(U, 2.0 / (n - 2.0)) * v;
    r.boundary = dn + rob;
    r.boundary_rel = rel(r.boundary, dn, rob);
  }
  return r;
}

ResidualPair linearized_residual(const ScalarField& psi, double kappa, const Vec& y) {
  return linearized_residual(psi, BubbleParams::canonical(kappa, static_cast<int>(y.size())), y);
}

}  // namespace yamabe
