#include "yamabe/hyperbolic.hpp"

#include "yamabe/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace yamabe {

namespace {

void require_kappa(double kappa, const char* where) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw ParameterError(std::string(where) + ": kappa must lie in (0,1)");
}

double rel(double res, double t1, double t2) {
  const double s = std::abs(t1) + std::abs(t2);
  return s > 0 ? std::abs(res) / s : std::abs(res);
}

Vec spatial(const Vec& z) { return z.tail(z.size() - 1); }

// Unit hyperboloid from the unit Poincare ball.
Vec poincare_to_unit(const Vec& u) {
  const double s = u.squaredNorm();
  if (!(s < 1.0)) throw DomainError("hyperbolic: point outside the Poincare ball");
  Vec z(u.size() + 1);
  z(0) = (1 + s) / (1 - s);
  z.tail(u.size()) = 2 * u / (1 - s);
  return z;
}

Mat poincare_to_unit_jacobian(const Vec& u) {
  const int n = static_cast<int>(u.size());
  const double q = 1 - u.squaredNorm();
  Mat J(n + 1, n);
  J.row(0) = 4 * u.transpose() / (q * q);
  J.bottomRows(n) = 2 * Mat::Identity(n, n) / q + 4 * u * u.transpose() / (q * q);
  return J;
}

// Boost in the (z_0, z_n) plane that takes (cosh t, 0, .., sinh t) to (1, 0, .., 0).
Vec boost(const Vec& z, double t) {
  Vec w = z;
  const int k = static_cast<int>(z.size()) - 1;
  w(0) = std::cosh(t) * z(0) - std::sinh(t) * z(k);
  w(k) = -std::sinh(t) * z(0) + std::cosh(t) * z(k);
  return w;
}

Mat boost_matrix(int n, double t) {
  Mat B = Mat::Identity(n + 1, n + 1);
  B(0, 0) = B(n, n) = std::cosh(t);
  B(0, n) = B(n, 0) = -std::sinh(t);
  return B;
}

Vec gaussian_direction(int n, Rng& rng) {
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) {
      const double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
      v(i) = std::sqrt(-2 * std::log(u1)) * std::cos(2 * kPi * u2);
    }
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

bool on_ball_boundary(const GeodesicBallSpec& spec, const Vec& z, double tol = 1e-9) {
  const double z0b = spec.rk() * std::cosh(spec.t0);
  return std::abs(z(0) - z0b) <= tol * z0b;
}

void require_on_hyperboloid(double kappa, const Vec& z, const char* where) {
  if (hyperboloid_defect(kappa, z) > 1e-10 || !(z(0) > 0))
    throw DomainError(std::string(where) + ": point is not on the hyperboloid");
}

}  // namespace

double r_kappa(double kappa) {
  require_kappa(kappa, "r_kappa");
  return 0.5 / std::sqrt(kappa);
}

double minkowski(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.size() < 2) throw ParameterError("minkowski: dimension mismatch");
  return -a(0) * b(0) + a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
}

double hyperboloid_defect(double kappa, const Vec& z) {
  const double r2 = sq(r_kappa(kappa));
  return std::abs(minkowski(z, z) + r2) / r2;
}

double GeodesicBallSpec::boundary_radius() const { return rk() * std::sinh(t0); }

GeodesicBallSpec GeodesicBallSpec::with_rule(double kappa, int n, RadiusRule rule) {
  require_kappa(kappa, "GeodesicBallSpec");
  if (n < 2) throw ParameterError("GeodesicBallSpec: n must be at least 2");
  GeodesicBallSpec s;
  s.kappa = kappa;
  s.n = n;
  const double two_r = 2 * r_kappa(kappa);
  // coth t0 = 2 r_kappa  <=>  tanh t0 = sqrt(kappa)
  s.t0 = rule == RadiusRule::coth ? std::atanh(1.0 / two_r) : std::acosh(two_r);
  return s;
}

GeodesicBallSpec GeodesicBallSpec::from_json(const nlohmann::json& j) {
  const double kappa = j.at("kappa").get<double>();
  const int n = j.value("n", 3);
  RadiusRule rule = RadiusRule::coth;
  if (j.contains("rule")) {
    const std::string r = j.at("rule").get<std::string>();
    if (r == "cosh")
      rule = RadiusRule::cosh;
    else if (r != "coth")
      throw ParameterError("GeodesicBallSpec: rule must be \"coth\" or \"cosh\"");
  }
  GeodesicBallSpec s = with_rule(kappa, n, rule);
  if (j.contains("t0") && !j.at("t0").is_string()) {
    s.t0 = j.at("t0").get<double>();
    if (!(s.t0 > 0)) throw ParameterError("GeodesicBallSpec: t0 must be positive");
  } else if (j.contains("t0") && j.at("t0").get<std::string>() != "auto") {
    throw ParameterError("GeodesicBallSpec: t0 must be a number or \"auto\"");
  }
  return s;
}

nlohmann::ordered_json GeodesicBallSpec::to_json() const {
  return nlohmann::ordered_json{{"kappa", kappa}, {"t0", t0}, {"n", n}, {"r_kappa", rk()}};
}

double ball_conformal_factor(double kappa, const Vec& xi) {
  if (kappa < 0) throw ParameterError("ball_conformal_factor: kappa must be nonnegative");
  Vec w = xi;
  w(w.size() - 1) += 1.0;
  const double base = 1.0 - kappa * w.squaredNorm();
  if (!(base > 0)) throw DomainError("ball_conformal_factor: point outside the model ball");
  return 1.0 / (base * base);
}

Mat ball_metric(double kappa, const Vec& xi) {
  const int n = static_cast<int>(xi.size());
  return ball_conformal_factor(kappa, xi) * Mat::Identity(n, n);
}

Vec map_F(const Vec& y) {
  Vec w = y;
  w(w.size() - 1) += 1.0;
  const double s = w.squaredNorm();
  if (!(s > 0)) throw DomainError("map_F: the puncture -e_n has no image");
  Vec x = w / s;
  x(x.size() - 1) -= 1.0;
  return x;
}

Vec map_F_inv(const Vec& x) { return map_F(x); }

Mat map_F_jacobian(const Vec& y) {
  const int n = static_cast<int>(y.size());
  Vec w = y;
  w(n - 1) += 1.0;
  const double s = w.squaredNorm();
  if (!(s > 0)) throw DomainError("map_F_jacobian: the puncture -e_n has no image");
  return (Mat::Identity(n, n) - 2.0 * w * w.transpose() / s) / s;
}

VerificationReport pullback_audit(double kappa, const std::vector<Vec>& samples, double tolerance) {
  if (samples.empty()) throw ParameterError("pullback_audit: no samples");
  const int n = static_cast<int>(samples.front().size());
  BubbleParams p = BubbleParams::canonical(kappa, n);
  double worst = 0;
  for (const Vec& y : samples) {
    const Mat DF = map_F_jacobian(y);
    const Mat pull = DF.transpose() * ball_metric(kappa, map_F(y)) * DF;
    const double expected = std::pow(eval_bubble(p, y).value, 4.0 / (n - 2.0));
    const Mat diff = pull - expected * Mat::Identity(n, n);
    worst = std::max(worst, diff.cwiseAbs().maxCoeff() / expected);
  }
  VerificationReport r;
  r.id = "hyperbolic.pullback";
  r.anchor = "hyperbolic.inversion_pullback";
  r.inputs = {{"kappa", kappa}, {"n", n}, {"samples", samples.size()}};
  r.computed = {{"max_componentwise_rel_error", worst}};
  r.reference = {{"max_componentwise_rel_error", 0.0}};
  r.provenance = "identity";
  r.tolerance = tolerance;
  r.norm = "max_componentwise_relative";
  r.set(worst < tolerance);
  return r;
}

double ball_geodesic_radius_t0(double kappa) {
  require_kappa(kappa, "ball_geodesic_radius_t0");
  return std::atanh(std::sqrt(kappa));
}

Vec ball_hyperbolic_center(double kappa, int n) {
  const double t0 = ball_geodesic_radius_t0(kappa);
  Vec xi = Vec::Zero(n);
  xi(n - 1) = std::tanh(0.5 * t0) / std::sqrt(kappa) - 1.0;
  return xi;
}

Vec ball_to_hyperboloid(double kappa, const Vec& xi) {
  const double sk = std::sqrt(kappa);
  Vec u = xi;
  u(u.size() - 1) += 1.0;
  u *= sk;
  return r_kappa(kappa) * boost(poincare_to_unit(u), ball_geodesic_radius_t0(kappa));
}

Vec hyperboloid_to_ball(double kappa, const Vec& z) {
  require_on_hyperboloid(kappa, z, "hyperboloid_to_ball");
  const int n = static_cast<int>(z.size()) - 1;
  const Vec unit = boost(z / r_kappa(kappa), -ball_geodesic_radius_t0(kappa));
  Vec xi = unit.tail(n) / (1.0 + unit(0)) / std::sqrt(kappa);
  xi(n - 1) -= 1.0;
  return xi;
}

Mat ball_to_hyperboloid_jacobian(double kappa, const Vec& xi) {
  const int n = static_cast<int>(xi.size());
  const double sk = std::sqrt(kappa);
  Vec u = xi;
  u(n - 1) += 1.0;
  u *= sk;
  return r_kappa(kappa) * sk * boost_matrix(n, ball_geodesic_radius_t0(kappa)) * poincare_to_unit_jacobian(u);
}

Vec map_F_kappa(double kappa, const Vec& y) { return ball_to_hyperboloid(kappa, map_F(y)); }

MetricField hyperboloid_graph_metric(double kappa, int n) {
  const double a2 = sq(r_kappa(kappa));
  // g_ij = delta_ij - x_i x_j / S,  S = a^2 + |x|^2
  auto g = [n, a2](const Vec& x) {
    const double S = a2 + x.squaredNorm();
    return Mat(Mat::Identity(n, n) - x * x.transpose() / S);
  };
  auto dg = [n, a2](const Vec& x) {
    const double S = a2 + x.squaredNorm();
    std::vector<Mat> d(n, Mat::Zero(n, n));
    const Mat xx = x * x.transpose();
    for (int c = 0; c < n; ++c) {
      d[c] = 2 * x(c) * xx / (S * S);
      d[c].row(c) -= x.transpose() / S;
      d[c].col(c) -= x / S;
    }
    return d;
  };
  auto ddg = [n, a2](const Vec& x) {
    const double S = a2 + x.squaredNorm();
    std::vector<Mat> d(n * n, Mat::Zero(n, n));
    for (int c = 0; c < n; ++c)
      for (int e = 0; e < n; ++e) {
        Mat& m = d[c * n + e];
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double dic = i == c, djc = j == c, die = i == e, dje = j == e, dce = c == e;
            m(i, j) = -(dic * dje + die * djc) / S +
                      2 * ((dic * x(j) + x(i) * djc) * x(e) + (die * x(j) * x(c) + x(i) * dje * x(c) + x(i) * x(j) * dce)) /
                          (S * S) -
                      8 * x(i) * x(j) * x(c) * x(e) / (S * S * S);
          }
      }
    return d;
  };
  return MetricField::analytic(n, g, dg, ddg, false, "hyperboloid_graph",
                               nlohmann::ordered_json{{"kappa", kappa}, {"n", n}});
}

Vec graph_chart_point(double kappa, const Vec& x) {
  Vec z(x.size() + 1);
  z(0) = std::sqrt(sq(r_kappa(kappa)) + x.squaredNorm());
  z.tail(x.size()) = x;
  return z;
}

Vec conormal(const GeodesicBallSpec& spec, const Vec& z) {
  require_on_hyperboloid(spec.kappa, z, "conormal");
  if (!on_ball_boundary(spec, z)) throw PreconditionError("conormal: point is not on the boundary sphere");
  const double a = spec.rk();
  const Vec x = spatial(z);
  const double r = x.norm();
  Vec nu(z.size());
  nu(0) = r;
  nu.tail(x.size()) = z(0) * x / r;
  return -nu / a;
}

ScalarField ambient_coordinate_field(double kappa, int n, int a) {
  if (a < 0 || a > n) throw ParameterError("ambient_coordinate_field: index out of range");
  if (a > 0) return ScalarField::coordinate(n, a - 1);
  const double a2 = sq(r_kappa(kappa));
  return ScalarField::analytic(
      n, [a2](const Vec& x) { return std::sqrt(a2 + x.squaredNorm()); },
      [a2](const Vec& x) { return Vec(x / std::sqrt(a2 + x.squaredNorm())); },
      [a2, n](const Vec& x) {
        const double z0 = std::sqrt(a2 + x.squaredNorm());
        return Mat((Mat::Identity(n, n) - x * x.transpose() / (z0 * z0)) / z0);
      });
}

ResidualPair ball_eigen_residual(const GeodesicBallSpec& spec, const ScalarField& f, double c, double beta,
                                 const Vec& z) {
  require_on_hyperboloid(spec.kappa, z, "ball_eigen_residual");
  const double z0b = spec.rk() * std::cosh(spec.t0);
  if (z(0) > z0b * (1 + 1e-9)) throw DomainError("ball_eigen_residual: point outside the geodesic ball");
  const Vec x = spatial(z);
  const MetricField g = hyperboloid_graph_metric(spec.kappa, spec.n);
  const double v = f.value(x);
  const double lap = laplace_beltrami(g, f, x);
  ResidualPair r;
  r.interior = lap - c * v;
  r.interior_rel = rel(r.interior, lap, c * v);
  if (on_ball_boundary(spec, z)) {
    // chart components of nu are its spatial components
    const Vec nu = conormal(spec, z);
    const double dn = f.gradient(x).dot(nu.tail(x.size()));
    r.boundary = dn + beta * v;
    r.boundary_rel = rel(r.boundary, dn, beta * v);
  }
  return r;
}

ResidualPair coordinate_eigenfunction_residual(const GeodesicBallSpec& spec, int a, const Vec& z) {
  const double rk = spec.rk();
  return ball_eigen_residual(spec, ambient_coordinate_field(spec.kappa, spec.n, a), spec.n / (rk * rk),
                             1.0 / (rk * std::tanh(spec.t0)), z);
}

ResidualPair transported_eigen_residual(const GeodesicBallSpec& spec, int a, const Vec& z) {
  return ball_eigen_residual(spec, ambient_coordinate_field(spec.kappa, spec.n, a), 4.0 * spec.n * spec.kappa, 2.0,
                             z);
}

std::vector<Vec> sample_geodesic_ball(const GeodesicBallSpec& spec, int count, Rng& rng) {
  std::vector<Vec> out;
  const double a = spec.rk();
  for (int i = 0; i < count; ++i) {
    const Vec dir = gaussian_direction(spec.n, rng);
    const double t = spec.t0 * std::pow(rng.uniform(), 1.0 / spec.n);
    Vec z(spec.n + 1);
    z(0) = a * std::cosh(t);
    z.tail(spec.n) = a * std::sinh(t) * dir;
    out.push_back(z);
  }
  return out;
}

std::vector<Vec> sample_geodesic_sphere(const GeodesicBallSpec& spec, int count, Rng& rng) {
  std::vector<Vec> out;
  const double a = spec.rk();
  for (int i = 0; i < count; ++i) {
    const Vec dir = gaussian_direction(spec.n, rng);
    Vec z(spec.n + 1);
    z(0) = a * std::cosh(spec.t0);
    z.tail(spec.n) = a * std::sinh(spec.t0) * dir;
    out.push_back(z);
  }
  return out;
}

namespace {

std::vector<std::vector<int>> monomial_exponents(int n, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> alpha(n, 0);
  // enumerate by total degree, then lexicographically
  for (int d = 0; d <= degree; ++d) {
    std::function<void(int, int)> rec = [&](int i, int left) {
      if (i == n - 1) {
        alpha[i] = left;
        out.push_back(alpha);
        return;
      }
      for (int k = left; k >= 0; --k) {
        alpha[i] = k;
        rec(i + 1, left - k);
      }
    };
    rec(0, d);
  }
  return out;
}

void eval_monomials(const std::vector<std::vector<int>>& ex, const Vec& x, double r0, Vec& val, Mat& grad) {
  const int n = static_cast<int>(x.size());
  const int K = static_cast<int>(ex.size());
  const Vec s = x / r0;
  val.resize(K);
  grad.resize(n, K);
  for (int k = 0; k < K; ++k) {
    double v = 1;
    for (int i = 0; i < n; ++i) v *= std::pow(s(i), ex[k][i]);
    val(k) = v;
    for (int i = 0; i < n; ++i) {
      if (ex[k][i] == 0) {
        grad(i, k) = 0;
        continue;
      }
      double d = ex[k][i] * std::pow(s(i), ex[k][i] - 1) / r0;
      for (int j = 0; j < n; ++j)
        if (j != i) d *= std::pow(s(j), ex[k][j]);
      grad(i, k) = d;
    }
  }
}

}  // namespace

BallEigenResult discrete_ball_eigenproblem(const GeodesicBallSpec& spec, int degree, double coefficient_scale) {
  require_kappa(spec.kappa, "discrete_ball_eigenproblem");
  if (degree < 1) throw ParameterError("discrete_ball_eigenproblem: degree must be at least 1");
  if (!(spec.t0 > 0)) throw ParameterError("discrete_ball_eigenproblem: t0 must be positive");
  const int n = spec.n;
  const double a = spec.rk();
  const double a2 = a * a;
  const double r0 = spec.boundary_radius();
  const double c = coefficient_scale * 4.0 * n * spec.kappa;
  const double beta = 2.0;

  const auto ex = monomial_exponents(n, degree);
  const int K = static_cast<int>(ex.size());
  const int m = 2 * degree + 10;
  const QuadratureRule vol = ball_rule(n, r0, m);
  const QuadratureRule bnd = sphere_rule(n - 1, m, r0);

  Mat A = Mat::Zero(K, K), M = Mat::Zero(K, K);
  Vec val;
  Mat grad;
  for (std::size_t q = 0; q < vol.size(); ++q) {
    const Vec& x = vol.nodes[q];
    const double z0 = std::sqrt(a2 + x.squaredNorm());
    const double w = vol.weights[q] * a / z0;  // sqrt(det g) = a / z_0
    eval_monomials(ex, x, r0, val, grad);
    // g^{ij} = delta_ij + x_i x_j / a^2
    const Vec xg = grad.transpose() * x;
    A.noalias() += w * (grad.transpose() * grad + xg * xg.transpose() / a2 + c * val * val.transpose());
    M.noalias() += w * val * val.transpose();
  }
  for (std::size_t q = 0; q < bnd.size(); ++q) {
    eval_monomials(ex, bnd.nodes[q], r0, val, grad);
    A.noalias() -= beta * bnd.weights[q] * val * val.transpose();
  }
  A = 0.5 * (A + A.transpose());
  M = 0.5 * (M + M.transpose());

  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(A, M);
  if (es.info() != Eigen::Success) throw SolverError("discrete_ball_eigenproblem: eigensolver failed");
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return std::abs(es.eigenvalues()(i)) < std::abs(es.eigenvalues()(j)); });

  BallEigenResult res;
  res.degree = degree;
  res.basis_size = K;
  res.boundary_coefficient = 1.0 / (a * std::tanh(spec.t0));
  res.coordinate_boundary_defect = std::abs(res.boundary_coefficient - beta);
  // Operator scale: zeroth-order plus boundary term per unit mass.
  const double scale = c + beta * n / r0;
  res.threshold = 1e-7 * scale;
  for (int k : order) res.eigenvalues.push_back(es.eigenvalues()(k));

  // degree-one monomials x_a / r0 sit at basis indices 1..n
  Mat E = Mat::Zero(K, n);
  for (int k = 0; k < K; ++k) {
    int deg = 0, idx = -1;
    for (int i = 0; i < n; ++i) {
      deg += ex[k][i];
      if (ex[k][i] == 1) idx = i;
    }
    if (deg == 1) E(k, idx) = 1.0;
  }
  const Mat G = E.transpose() * M * E;
  for (int k : order) {
    if (std::abs(es.eigenvalues()(k)) >= res.threshold) break;
    ++res.kernel_count;
    const Vec v = es.eigenvectors().col(k);
    const Vec coef = G.ldlt().solve(E.transpose() * M * v);
    const Vec d = v - E * coef;
    res.fit_residuals.push_back(std::sqrt(std::max(0.0, d.dot(M * d)) / v.dot(M * v)));
  }
  return res;
}

}  // namespace yamabe
