#include "yamabe/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace yamabe {

Rule1D gauss_jacobi(int m, double alpha, double beta) {
  if (m < 1) throw ParameterError("gauss_jacobi: need at least one node");
  if (alpha <= -1 || beta <= -1) throw ParameterError("gauss_jacobi: alpha, beta must exceed -1");
  Mat J = Mat::Zero(m, m);
  const double ab = alpha + beta;
  for (int k = 0; k < m; ++k) {
    if (k == 0)
      J(0, 0) = (beta - alpha) / (ab + 2);
    else
      J(k, k) = (beta * beta - alpha * alpha) / ((2 * k + ab) * (2 * k + ab + 2));
    if (k >= 1) {
      const double num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
      const double den = sq(2 * k + ab) * (2 * k + ab + 1) * (2 * k + ab - 1);
      J(k, k - 1) = J(k - 1, k) = std::sqrt(num / den);
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  const double mu0 = std::pow(2.0, ab + 1) * std::tgamma(alpha + 1) * std::tgamma(beta + 1) / std::tgamma(ab + 2);
  Rule1D r;
  r.x.resize(m);
  r.w.resize(m);
  for (int k = 0; k < m; ++k) {
    r.x[k] = es.eigenvalues()(k);
    r.w[k] = mu0 * sq(es.eigenvectors()(0, k));
  }
  return r;
}

Rule1D gauss_legendre(int m) { return gauss_jacobi(m, 0.0, 0.0); }

Rule1D gauss_legendre(int m, double a, double b) {
  Rule1D r = gauss_legendre(m);
  for (int k = 0; k < m; ++k) {
    r.x[k] = 0.5 * (a + b) + 0.5 * (b - a) * r.x[k];
    r.w[k] *= 0.5 * (b - a);
  }
  return r;
}

double QuadratureRule::integrate(const std::function<double(const Vec&)>& f) const {
  double s = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
  return s;
}

double QuadratureRule::total_weight() const {
  double s = 0;
  for (double w : weights) s += w;
  return s;
}

QuadratureRule sphere_rule(int d, int m, double radius) {
  if (d < 1) throw ParameterError("sphere_rule: dimension must be at least 1");
  QuadratureRule q;
  q.domain = "sphere";
  q.order = m;
  if (d == 1) {
    const int M = 4 * m;
    for (int k = 0; k < M; ++k) {
      const double phi = (k + 0.5) * 2 * kPi / M;
      Vec v(2);
      v << radius * std::cos(phi), radius * std::sin(phi);
      q.nodes.push_back(v);
      q.weights.push_back(2 * kPi * radius / M);
    }
    return q;
  }
  const Rule1D t = gauss_jacobi(m, 0.5 * (d - 2), 0.5 * (d - 2));
  for (int i = 0; i < m; ++i) {
    const double s = std::sqrt(std::max(0.0, 1 - t.x[i] * t.x[i]));
    const QuadratureRule sub = sphere_rule(d - 1, m, radius * s);
    for (std::size_t k = 0; k < sub.size(); ++k) {
      Vec v(d + 1);
      v.head(d) = sub.nodes[k];
      v(d) = radius * t.x[i];
      q.nodes.push_back(v);
      // sub weights carry (radius*s)^{d-1}; the polar measure has radius^d s^{d-2} dt
      const double sub_unit = s > 0 ? sub.weights[k] / std::pow(radius * s, d - 1) : 0.0;
      q.weights.push_back(t.w[i] * sub_unit * std::pow(radius, d));
    }
  }
  return q;
}

QuadratureRule hemisphere_rule(int n, double rho, int m) {
  if (n < 2) throw ParameterError("hemisphere_rule: n must be at least 2");
  QuadratureRule q;
  q.domain = "hemisphere";
  q.order = m;
  const int d = n - 1;
  if (n == 2) {
    const Rule1D th = gauss_legendre(2 * m, 0.0, kPi);
    for (int i = 0; i < 2 * m; ++i) {
      Vec v(2);
      v << rho * std::cos(th.x[i]), rho * std::sin(th.x[i]);
      q.nodes.push_back(v);
      q.weights.push_back(rho * th.w[i]);
    }
    return q;
  }
  // polar angle theta from e_n; t = cos(theta)
  std::vector<double> ts, ws;
  if (d == 2) {
    const Rule1D t = gauss_legendre(m, 0.0, 1.0);
    ts = t.x;
    ws = t.w;
  } else {
    const Rule1D th = gauss_legendre(m, 0.0, 0.5 * kPi);
    for (int i = 0; i < m; ++i) {
      ts.push_back(std::cos(th.x[i]));
      ws.push_back(th.w[i] * std::pow(std::sin(th.x[i]), d - 1));
    }
  }
  const QuadratureRule sub = sphere_rule(d - 1, m, 1.0);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double s = std::sqrt(std::max(0.0, 1 - ts[i] * ts[i]));
    for (std::size_t k = 0; k < sub.size(); ++k) {
      Vec v(n);
      v.head(n - 1) = rho * s * sub.nodes[k];
      v(n - 1) = rho * ts[i];
      q.nodes.push_back(v);
      q.weights.push_back(ws[i] * sub.weights[k] * std::pow(rho, d));
    }
  }
  return q;
}

QuadratureRule equator_rule(int n, double rho, int m) {
  if (n < 3) throw ParameterError("equator_rule: n must be at least 3");
  const QuadratureRule s = sphere_rule(n - 2, m, rho);
  QuadratureRule q;
  q.domain = "equator";
  q.order = m;
  for (std::size_t k = 0; k < s.size(); ++k) {
    Vec v = Vec::Zero(n);
    v.head(n - 1) = s.nodes[k];
    q.nodes.push_back(v);
    q.weights.push_back(s.weights[k]);
  }
  return q;
}

QuadratureRule disk_rule(int n, double rho, int m) {
  if (n < 3) throw ParameterError("disk_rule: n must be at least 3");
  const int dim = n - 1;
  const Rule1D r = gauss_jacobi(m, 0.0, dim - 1.0);
  const QuadratureRule s = sphere_rule(dim - 1, m, 1.0);
  QuadratureRule q;
  q.domain = "disk";
  q.order = m;
  for (int i = 0; i < m; ++i) {
    const double rr = 0.5 * rho * (1 + r.x[i]);
    const double wr = r.w[i] * std::pow(0.5 * rho, dim);
    for (std::size_t k = 0; k < s.size(); ++k) {
      Vec v = Vec::Zero(n);
      v.head(dim) = rr * s.nodes[k];
      q.nodes.push_back(v);
      q.weights.push_back(wr * s.weights[k]);
    }
  }
  return q;
}

QuadratureRule half_ball_rule(int n, double rho, int m) {
  const Rule1D r = gauss_jacobi(m, 0.0, n - 1.0);
  const QuadratureRule h = hemisphere_rule(n, 1.0, m);
  QuadratureRule q;
  q.domain = "half_ball";
  q.order = m;
  for (int i = 0; i < m; ++i) {
    const double rr = 0.5 * rho * (1 + r.x[i]);
    const double wr = r.w[i] * std::pow(0.5 * rho, n);
    for (std::size_t k = 0; k < h.size(); ++k) {
      q.nodes.push_back(rr * h.nodes[k]);
      q.weights.push_back(wr * h.weights[k]);
    }
  }
  return q;
}

QuadratureRule ball_rule(int n, double rho, int m) {
  const Rule1D r = gauss_jacobi(m, 0.0, n - 1.0);
  const QuadratureRule s = sphere_rule(n - 1, m, 1.0);
  QuadratureRule q;
  q.domain = "ball";
  q.order = m;
  for (int i = 0; i < m; ++i) {
    const double rr = 0.5 * rho * (1 + r.x[i]);
    const double wr = r.w[i] * std::pow(0.5 * rho, n);
    for (std::size_t k = 0; k < s.size(); ++k) {
      q.nodes.push_back(rr * s.nodes[k]);
      q.weights.push_back(wr * s.weights[k]);
    }
  }
  return q;
}

QuadEstimate integrate_with_estimate(const std::function<QuadratureRule(int)>& make_rule,
                                     const std::function<double(const Vec&)>& f, int m) {
  const double coarse = make_rule(m).integrate(f);
  const double fine = make_rule(2 * m).integrate(f);
  return {fine, std::abs(fine - coarse), 2 * m};
}

}  // namespace yamabe
