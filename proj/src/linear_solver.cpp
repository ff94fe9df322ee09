#include "yamabe/linear_solver.hpp"

#include <Eigen/SparseLU>
#ifdef YAMABE_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace yamabe {

std::string to_string(NodeClass c) {
  switch (c) {
    case NodeClass::interior: return "interior";
    case NodeClass::flat_face: return "flat_face";
    case NodeClass::sphere_face: return "sphere_face";
  }
  return "?";
}

// ---------------------------------------------------------------- grid

GridSpec GridSpec::from_json(const nlohmann::json& j) {
  GridSpec s;
  s.n = j.value("n", 3);
  s.radius = j.value("radius", 1.0);
  s.cells = j.value("cells", 16);
  s.inner_radius = j.value("inner_radius", 0.0);
  if (j.contains("h0"))
    s.stretch = stretch_for(s.radius, s.cells, j.at("h0").get<double>());
  else
    s.stretch = j.value("stretch", 0.0);
  s.normal_cells = j.value("normal_cells", 0);
  if (j.contains("h0_normal"))
    s.normal_stretch = stretch_for(s.radius, s.cells_normal(), j.at("h0_normal").get<double>());
  else
    s.normal_stretch = j.value("normal_stretch", -1.0);
  return s;
}

nlohmann::ordered_json GridSpec::to_json() const {
  return nlohmann::ordered_json{{"n", n},
                                {"radius", radius},
                                {"cells", cells},
                                {"stretch", stretch},
                                {"normal_cells", cells_normal()},
                                {"normal_stretch", stretch_normal()},
                                {"inner_radius", inner_radius}};
}

double GridSpec::stretch_for(double radius, int cells, double h0) {
  const double target = h0 * cells / radius;  // s / sinh(s)
  if (!(target > 0)) throw ParameterError("GridSpec: h0 must be positive");
  if (target >= 1.0) return 0.0;
  double lo = 1e-8, hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid / std::sinh(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

double axis_coord(double radius, int cells, double stretch, int k) {
  if (stretch <= 0) return radius * k / cells;
  return radius * std::sinh(stretch * k / cells) / std::sinh(stretch);
}

}  // namespace

HalfBallGrid::HalfBallGrid(const GridSpec& spec) : spec_(spec) {
  const int n = spec.n;
  const int N = spec.cells;
  if (n < 3 || n > 5) throw ParameterError("HalfBallGrid: n must be 3, 4 or 5");
  if (N < 2 || spec.cells_normal() < 2) throw ParameterError("HalfBallGrid: need at least 2 cells per half-axis");
  if (!(spec.radius > 0)) throw ParameterError("HalfBallGrid: radius must be positive");
  if (spec.inner_radius < 0 || spec.inner_radius >= spec.radius)
    throw ParameterError("HalfBallGrid: inner radius must lie in [0, radius)");
  for (int k = -N; k <= N; ++k) axis_t_.push_back(axis_coord(spec.radius, N, spec.stretch, k));
  for (int k = 0; k <= spec.cells_normal(); ++k)
    axis_n_.push_back(axis_coord(spec.radius, spec.cells_normal(), spec.stretch_normal(), k));

  stride_.assign(n, 1);
  long total = 1;
  for (int d = n - 1; d >= 0; --d) {
    stride_[d] = total;
    total *= static_cast<long>(axis(d).size());
  }
  box_.assign(total, -1);
  std::vector<int> idx(n, 0);
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Vec y(n);
    for (int d = 0; d < n; ++d) {
      idx[d] = static_cast<int>(rem / stride_[d]);
      rem %= stride_[d];
      y(d) = axis(d)[idx[d]];
    }
    if (!inside(y)) continue;
    box_[flat] = static_cast<int>(nodes_.size());
    nodes_.push_back(y);
    classes_.push_back(idx[n - 1] == 0 ? NodeClass::flat_face : NodeClass::interior);
    index_.push_back(idx);
  }
  if (nodes_.empty()) throw ParameterError("HalfBallGrid: no nodes");

  // control volumes and closure points
  weights_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double w = 1;
    for (int d = 0; d < n; ++d) {
      double arms[2];
      for (int sgn = 0; sgn < 2; ++sgn) {
        const int step = sgn ? 1 : -1;
        std::vector<int> q = index_[i];
        q[d] += step;
        const auto& ax = axis(d);
        if (d == n - 1 && q[d] < 0) {
          arms[sgn] = 0;  // ghost side of the flat face
          continue;
        }
        const bool in_box = q[d] >= 0 && q[d] < static_cast<int>(ax.size());
        const double H = in_box ? std::abs(ax[q[d]] - ax[index_[i][d]]) : 0.0;
        if (in_box && lookup(q) >= 0) {
          arms[sgn] = H;
          continue;
        }
        // arm ends on a sphere
        const Vec& p = nodes_[i];
        const double s = step;
        double t = std::numeric_limits<double>::infinity();
        const double disc_o = sq(p(d)) - p.squaredNorm() + sq(spec.radius);
        t = -s * p(d) + std::sqrt(std::max(0.0, disc_o));
        if (spec.inner_radius > 0) {
          const double disc_i = sq(p(d)) - p.squaredNorm() + sq(spec.inner_radius);
          if (disc_i >= 0) {
            const double ti = -s * p(d) - std::sqrt(disc_i);
            if (ti > 0) t = std::min(t, ti);
          }
        }
        if (in_box) t = std::min(t, H);
        arms[sgn] = t;
        Vec b = p;
        b(d) += s * t;
        sphere_points_.push_back(b);
      }
      w *= 0.5 * (arms[0] + arms[1]);
    }
    weights_(i) = w;
  }
}

bool HalfBallGrid::inside(const Vec& y) const {
  const double margin = 1e-9 * spec_.radius;
  const double r = y.norm();
  if (!(r < spec_.radius - margin)) return false;
  if (spec_.inner_radius > 0 && !(r > spec_.inner_radius + margin)) return false;
  return y(spec_.n - 1) >= 0;
}

std::string HalfBallGrid::id() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "n%d_R%g_N%d_s%.6g_Nn%d_sn%.6g_in%g", spec_.n, spec_.radius, spec_.cells,
                spec_.stretch, spec_.cells_normal(), spec_.stretch_normal(), spec_.inner_radius);
  return buf;
}

int HalfBallGrid::lookup(const std::vector<int>& idx) const {
  long flat = 0;
  for (int d = 0; d < spec_.n; ++d) {
    if (idx[d] < 0 || idx[d] >= static_cast<int>(axis(d).size())) return -1;
    flat += stride_[d] * idx[d];
  }
  return box_[flat];
}

int HalfBallGrid::origin() const {
  std::vector<int> idx(spec_.n, spec_.cells);
  idx[spec_.n - 1] = 0;
  return lookup(idx);
}

double HalfBallGrid::min_spacing() const {
  return std::min(axis_n_[1] - axis_n_[0], axis_t_[spec_.cells + 1] - axis_t_[spec_.cells]);
}
double HalfBallGrid::max_spacing() const {
  const std::size_t a = axis_n_.size() - 1, b = axis_t_.size() - 1;
  return std::max(axis_n_[a] - axis_n_[a - 1], axis_t_[b] - axis_t_[b - 1]);
}

Vec HalfBallGrid::sample(const std::function<double(const Vec&)>& f) const {
  Vec v(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) v(i) = f(nodes_[i]);
  return v;
}

std::size_t HalfBallGrid::count(NodeClass c) const {
  if (c == NodeClass::sphere_face) return sphere_points_.size();
  return static_cast<std::size_t>(std::count(classes_.begin(), classes_.end(), c));
}

namespace {

// 3-point first-derivative weights for arms hm (behind) and hp (ahead).
struct D1 {
  double m, c, p;
};
D1 d1_weights(double hm, double hp) {
  return {-hp / (hm * (hm + hp)), (hp - hm) / (hp * hm), hm / (hp * (hm + hp))};
}
struct D2 {
  double m, c, p;
};
D2 d2_weights(double hm, double hp) { return {2 / (hm * (hm + hp)), -2 / (hm * hp), 2 / (hp * (hm + hp))}; }

}  // namespace

Vec HalfBallGrid::gradient(const Vec& field, std::size_t i) const {
  const int n = spec_.n;
  Vec g(n);
  for (int d = 0; d < n; ++d) {
    const auto& ax = axis(d);
    const int k = index_[i][d];
    auto nb = [&](int step) {
      std::vector<int> q = index_[i];
      q[d] += step;
      return lookup(q);
    };
    const int m1 = nb(-1), p1 = nb(1);
    if (m1 >= 0 && p1 >= 0) {
      const D1 w = d1_weights(ax[k] - ax[k - 1], ax[k + 1] - ax[k]);
      g(d) = w.m * field(m1) + w.c * field(i) + w.p * field(p1);
      continue;
    }
    const int dir = p1 >= 0 ? 1 : -1;
    const int a1 = dir > 0 ? p1 : m1;
    if (a1 < 0) throw SolverError("grid gradient: isolated node");
    const int a2 = nb(2 * dir);
    const double h1 = ax[k + dir] - ax[k];
    if (a2 >= 0) {
      // one-sided 3-point formula through x0, x1, x2
      const double h2 = ax[k + 2 * dir] - ax[k];
      const double w1 = h2 / (h1 * (h2 - h1)), w2 = -h1 / (h2 * (h2 - h1)), w0 = -(w1 + w2);
      g(d) = w0 * field(i) + w1 * field(a1) + w2 * field(a2);
    } else {
      g(d) = (field(a1) - field(i)) / h1;
    }
  }
  return g;
}

Mat HalfBallGrid::hessian(const Vec& field, std::size_t i) const {
  const int n = spec_.n;
  Mat H(n, n);
  for (int e = 0; e < n; ++e) {
    const auto& ax = axis(e);
    const int k = index_[i][e];
    auto nb = [&](int step) {
      std::vector<int> q = index_[i];
      q[e] += step;
      return lookup(q);
    };
    const int m1 = nb(-1), p1 = nb(1);
    Vec dcol(n);
    if (m1 >= 0 && p1 >= 0) {
      const double hm = ax[k] - ax[k - 1], hp = ax[k + 1] - ax[k];
      const D1 w = d1_weights(hm, hp);
      dcol = w.m * gradient(field, m1) + w.c * gradient(field, i) + w.p * gradient(field, p1);
      const D2 w2 = d2_weights(hm, hp);
      dcol(e) = w2.m * field(m1) + w2.c * field(i) + w2.p * field(p1);
    } else {
      const int dir = p1 >= 0 ? 1 : -1;
      const int a1 = dir > 0 ? p1 : m1;
      if (a1 < 0) throw SolverError("grid hessian: isolated node");
      const double h1 = ax[k + dir] - ax[k];
      dcol = (gradient(field, a1) - gradient(field, i)) / h1;
    }
    H.col(e) = dcol;
  }
  return 0.5 * (H + H.transpose());
}

// ---------------------------------------------------------------- closures, problems

SphereClosure SphereClosure::dirichlet(std::function<double(const Vec&)> g) {
  SphereClosure c;
  c.kind = Kind::dirichlet;
  c.value = std::move(g);
  return c;
}

SphereClosure SphereClosure::homogeneous() {
  return dirichlet([](const Vec&) { return 0.0; });
}

SphereClosure SphereClosure::decay(double exponent) {
  SphereClosure c;
  c.kind = Kind::decay;
  c.exponent = exponent;
  return c;
}

std::string SphereClosure::describe() const {
  if (kind == Kind::dirichlet) return "dirichlet";
  char buf[64];
  std::snprintf(buf, sizeof buf, "decay(p=%g)", exponent);
  return buf;
}

RobinProblem RobinProblem::laplacian(int n) {
  RobinProblem p;
  p.n = n;
  p.interior = [n](const Vec&) { return InteriorCoeffs{Mat::Identity(n, n), Vec::Zero(n), 0.0}; };
  p.c_bd = [](const Vec&) { return 0.0; };
  p.f_int = [](const Vec&) { return 0.0; };
  p.f_bd = [](const Vec&) { return 0.0; };
  p.label = "laplacian";
  return p;
}

RobinProblem RobinProblem::linearized(const BubbleParams& b) {
  b.validate();
  const int n = b.n;
  RobinProblem p = laplacian(n);
  p.interior = [b, n](const Vec& y) {
    const double U = eval_bubble(b, y).value;
    return InteriorCoeffs{Mat::Identity(n, n), Vec::Zero(n), n * (n + 2.0) * b.kappa * std::pow(U, 4.0 / (n - 2.0))};
  };
  p.c_bd = [b, n](const Vec& y) { return n * std::pow(eval_bubble(b, y).value, 2.0 / (n - 2.0)); };
  p.label = "linearized_bubble";
  return p;
}

RobinProblem RobinProblem::conformal(const MetricField& g) {
  if (!g.is_fermi()) throw PreconditionError("RobinProblem::conformal: metric must be declared Fermi");
  const int n = g.dim();
  RobinProblem p = laplacian(n);
  p.interior = [g, n](const Vec& z) {
    const Mat gi = g.metric(z).inverse();
    const auto G = christoffel(gi, g.first_derivatives(z));
    Vec b = Vec::Zero(n);
    for (int c = 0; c < n; ++c)
      for (int a = 0; a < n; ++a)
        for (int e = 0; e < n; ++e) b(c) -= gi(a, e) * G[c](a, e);
    const double R = scalar_curvature(g, z);
    return InteriorCoeffs{gi, b, (n - 2.0) / (4.0 * (n - 1.0)) * R};
  };
  p.c_bd = [g, n](const Vec& z) {
    Vec zb = z;
    zb(n - 1) = 0.0;
    return -0.5 * (n - 2.0) * boundary_geometry(g, zb).h;
  };
  p.label = "conformal_" + g.kind();
  return p;
}

// ---------------------------------------------------------------- assembly

namespace {

struct ArmInfo {
  int node = -1;  // neighbour unknown, or -1
  double h = 0;
  bool ghost = false;
  bool inner = false;  // closure on the inner sphere
  Vec point;           // closure point
};

ArmInfo arm(const HalfBallGrid& grid, std::size_t i, int d, int step) {
  const int n = grid.dim();
  const auto& ax = grid.axis(d);
  std::vector<int> q = grid.multi_index(i);
  const int k = q[d];
  q[d] += step;
  ArmInfo a;
  if (d == n - 1 && q[d] < 0) {
    a.ghost = true;
    return a;
  }
  const bool in_box = q[d] >= 0 && q[d] < static_cast<int>(ax.size());
  const double H = in_box ? std::abs(ax[q[d]] - ax[k]) : 0.0;
  if (in_box) {
    const int id = grid.lookup(q);
    if (id >= 0) {
      a.node = id;
      a.h = H;
      return a;
    }
  }
  const Vec& p = grid.node(i);
  const double R = grid.radius(), rho = grid.spec().inner_radius;
  double t = -step * p(d) + std::sqrt(std::max(0.0, sq(p(d)) - p.squaredNorm() + R * R));
  if (rho > 0) {
    const double disc = sq(p(d)) - p.squaredNorm() + rho * rho;
    if (disc >= 0) {
      const double ti = -step * p(d) - std::sqrt(disc);
      if (ti > 0 && ti < t) {
        t = ti;
        a.inner = true;
      }
    }
  }
  if (in_box && t > H) t = H;
  a.h = t;
  a.point = p;
  a.point(d) += step * t;
  return a;
}

// Closure value at b as const + coef * u_p.
std::pair<double, double> closure_value(const SphereClosure& c, const Vec& p, const Vec& b) {
  if (c.kind == SphereClosure::Kind::dirichlet) return {c.value(b), 0.0};
  return {0.0, std::pow(p.norm() / b.norm(), c.exponent)};
}

const SphereClosure& closure_for(const RobinProblem& prob, const HalfBallGrid& grid, const Vec& b, bool inner_hint) {
  if (grid.spec().inner_radius <= 0) return prob.outer;
  if (inner_hint) return prob.inner;
  const double r = b.norm();
  return std::abs(r - grid.spec().inner_radius) < std::abs(r - grid.radius()) ? prob.inner : prob.outer;
}

void require_finite(double v, const HalfBallGrid& grid, std::size_t i, const char* what) {
  if (std::isfinite(v)) return;
  std::ostringstream os;
  os << "assemble: " << what << " is not finite at node " << i << " (";
  for (int d = 0; d < grid.dim(); ++d) os << (d ? ", " : "") << grid.node(i)(d);
  os << ")";
  throw AssemblyError(os.str());
}

}  // namespace

SparseSystem assemble(const RobinProblem& prob, const HalfBallGrid& grid) {
  const int n = grid.dim();
  if (prob.n != n) throw ParameterError("assemble: problem and grid dimensions differ");
  const std::size_t N = grid.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(N * (2 * n + 1 + (n > 1 ? 4 : 0)));
  SparseSystem sys;
  sys.rhs = Vec::Zero(N);
  sys.boundary_factor = Vec::Zero(N);
  sys.weights = grid.weights();
  sys.grid = &grid;
  sys.grid_id = grid.id();

  for (std::size_t i = 0; i < N; ++i) {
    const Vec& p = grid.node(i);
    InteriorCoeffs co;
    double fint = 0;
    try {
      co = prob.interior(p);
      fint = prob.f_int(p);
    } catch (const Error& e) {
      throw AssemblyError(std::string("assemble: coefficient evaluation failed at node ") + std::to_string(i) +
                          ": " + e.what());
    }
    for (int a = 0; a < n; ++a) {
      require_finite(co.b(a), grid, i, "first-order coefficient");
      for (int b = 0; b < n; ++b) require_finite(co.a(a, b), grid, i, "principal coefficient");
    }
    require_finite(co.q, grid, i, "zeroth-order coefficient");
    require_finite(fint, grid, i, "interior source");

    double diag = -co.q;
    double rhs = fint;
    const bool flat = grid.node_class(i) == NodeClass::flat_face;

    for (int d = 0; d < n; ++d) {
      ArmInfo am = arm(grid, i, d, -1), ap = arm(grid, i, d, +1);
      if (am.ghost) am.h = ap.h;
      const D2 w2 = d2_weights(am.h, ap.h);
      const D1 w1 = d1_weights(am.h, ap.h);
      const double wm = co.a(d, d) * w2.m + co.b(d) * w1.m;
      const double wp = co.a(d, d) * w2.p + co.b(d) * w1.p;
      diag += co.a(d, d) * w2.c + co.b(d) * w1.c;

      auto add_arm = [&](const ArmInfo& A, double w) {
        if (A.node >= 0) {
          trip.emplace_back(i, A.node, w);
          return;
        }
        const SphereClosure& c = closure_for(prob, grid, A.point, A.inner);
        const auto [k0, k1] = closure_value(c, p, A.point);
        require_finite(k0, grid, i, "closure value");
        rhs -= w * k0;
        diag += w * k1;
      };
      add_arm(ap, wp);
      if (am.ghost) {
        // u(-h) = u(h) - 2 h d_n u with s d_n u = f_bd - c_bd u
        const double a_nn = co.a(n - 1, n - 1);
        const double s = 1.0 / std::sqrt(a_nn);
        const double cbd = prob.c_bd(p), fbd = prob.f_bd(p);
        require_finite(cbd, grid, i, "boundary coefficient");
        require_finite(fbd, grid, i, "boundary source");
        add_arm(ap, wm);
        const double bf = 2 * ap.h * wm / s;
        diag += bf * cbd;
        rhs += bf * fbd;
        sys.boundary_factor(i) = bf;
      } else {
        add_arm(am, wm);
      }
    }

    // mixed derivatives
    for (int d = 0; d < n; ++d)
      for (int e = d + 1; e < n; ++e) {
        const double a_de = 0.5 * (co.a(d, e) + co.a(e, d));
        if (std::abs(a_de) < 1e-14) continue;
        if (flat && e == n - 1)
          throw PreconditionError("assemble: mixed normal derivative on the flat face (chart is not Fermi)");
        const auto& axd = grid.axis(d);
        const auto& axe = grid.axis(e);
        const auto& mi = grid.multi_index(i);
        auto span = [&](const std::vector<double>& ax, int k, int step) {
          const int kk = k + step;
          if (kk < 0 || kk >= static_cast<int>(ax.size())) return ax[k] - ax[k - step];  // mirror
          return std::abs(ax[kk] - ax[k]);
        };
        const double hdm = span(axd, mi[d], -1), hdp = span(axd, mi[d], 1);
        const double hem = span(axe, mi[e], -1), hep = span(axe, mi[e], 1);
        const D1 wd = d1_weights(hdm, hdp), we = d1_weights(hem, hep);
        const double wdv[3] = {wd.m, wd.c, wd.p}, wev[3] = {we.m, we.c, we.p};
        const double offd[3] = {-hdm, 0, hdp}, offe[3] = {-hem, 0, hep};
        for (int sd = 0; sd < 3; ++sd)
          for (int se = 0; se < 3; ++se) {
            const double w = 2 * a_de * wdv[sd] * wev[se];
            if (w == 0) continue;
            std::vector<int> q = mi;
            q[d] += sd - 1;
            q[e] += se - 1;
            const int id = grid.lookup(q);
            if (id >= 0) {
              trip.emplace_back(i, id, w);
              continue;
            }
            Vec b = p;
            b(d) += offd[sd];
            b(e) += offe[se];
            const SphereClosure& c = closure_for(prob, grid, b, false);
            const auto [k0, k1] = closure_value(c, p, b);
            rhs -= w * k0;
            diag += w * k1;
          }
      }
    trip.emplace_back(i, i, diag);
    sys.rhs(i) = rhs;
  }
  sys.A.resize(N, N);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.A.makeCompressed();
  return sys;
}

Vec residual(const SparseSystem& sys, const Vec& u) { return sys.A * u - sys.rhs; }

// ---------------------------------------------------------------- factorization

#ifdef YAMABE_HAVE_UMFPACK
namespace {
// Exposes UMFPACK's transposed solve on the existing numeric factorization.
class UmfLU : public Eigen::UmfPackLU<SpMat> {
 public:
  bool solve_transposed(const Vec& b, Vec& x) const {
    x.resize(b.size());
    Vec rhs = b;
    return Eigen::umfpack_solve(UMFPACK_At, mp_matrix.outerIndexPtr(), mp_matrix.innerIndexPtr(),
                                mp_matrix.valuePtr(), x.data(), rhs.data(), m_numeric, m_control.data(),
                                m_umfpackInfo.data()) == 0;
  }
};
}  // namespace
#endif

struct Factorization::Impl {
  SpMat A;  // the LU objects keep a reference to it
#ifdef YAMABE_HAVE_UMFPACK
  UmfLU lu;
#else
  Eigen::SparseLU<SpMat> lu;
#endif
};

Factorization::Factorization(const SpMat& A) : impl_(std::make_unique<Impl>()) {
  impl_->A = A;
  impl_->A.makeCompressed();
  impl_->lu.compute(impl_->A);
  if (impl_->lu.info() != Eigen::Success) throw SolverError("Factorization: sparse LU failed (singular matrix?)");
}

Factorization::~Factorization() = default;

Vec Factorization::solve(const Vec& b) const {
  Vec x = impl_->lu.solve(b);
  if (impl_->lu.info() != Eigen::Success) throw SolverError("Factorization: solve failed");
  return x;
}

Vec Factorization::solve_transpose(const Vec& b) const {
#ifdef YAMABE_HAVE_UMFPACK
  Vec x;
  if (!impl_->lu.solve_transposed(b, x)) throw SolverError("Factorization: transpose solve failed");
#else
  Vec x = impl_->lu.transpose().solve(b);
#endif
  return x;
}

std::string Factorization::backend() const {
#ifdef YAMABE_HAVE_UMFPACK
  return "umfpack";
#else
  return "eigen_sparselu";
#endif
}

Vec solve(const SparseSystem& sys, const Vec& rhs, double tol) {
  if (rhs.size() != sys.A.rows()) throw ParameterError("solve: rhs length mismatch");
  const double bn = rhs.norm();
  if (bn == 0) return Vec::Zero(rhs.size());
  Factorization f(sys.A);
  Vec x = f.solve(rhs);
  double rel = (sys.A * x - rhs).norm() / bn;
  if (!(rel < tol)) {
    // one step of iterative refinement
    x += f.solve(rhs - sys.A * x);
    rel = (sys.A * x - rhs).norm() / bn;
  }
  if (!(rel < tol)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "solve: relative residual %.3e above %.1e (ill-conditioned system)", rel, tol);
    throw SolverError(buf);
  }
  return x;
}

Vec solve(const SparseSystem& sys, double tol) { return solve(sys, sys.rhs, tol); }

// ---------------------------------------------------------------- near-null space

NearNullResult near_null_space(const SparseSystem& sys, const NearNullOptions& opt) {
  const Eigen::Index N = sys.A.rows();
  const int m = opt.k + opt.extra;
  if (opt.k < 1 || opt.extra < 0 || m > N) throw ParameterError("near_null_space: bad block size");
  const Vec sw = sys.weights.cwiseSqrt();
  const Factorization fac(sys.A);

  // Block Lanczos with full reorthogonalization on M = At^{-1} At^{-T}, At = W^{1/2} A W^{-1/2};
  // its largest eigenvalues are 1 / sigma^2 for the smallest singular values of At.
  auto apply = [&](const Vec& x) { return Vec(sw.cwiseProduct(sys.A * x.cwiseQuotient(sw))); };
  auto inv = [&](const Vec& b) { return Vec(sw.cwiseProduct(fac.solve(b.cwiseQuotient(sw)))); };
  auto invT = [&](const Vec& b) { return Vec(fac.solve_transpose(sw.cwiseProduct(b)).cwiseQuotient(sw)); };

  // Block Krylov space (block size p) so that degenerate pairs, such as the
  // symmetric tangential kernel modes, are each found.
  const int p = std::max(1, opt.block);
  const int maxdim = static_cast<int>(std::min<Eigen::Index>(N, std::max(opt.max_iterations, m + p)));
  const int maxblocks = maxdim / p;
  Mat Q(N, maxblocks * p);
  Mat T = Mat::Zero(maxblocks * p, maxblocks * p);
  Rng rng(opt.seed);
  {
    Mat X0(N, p);
    for (int j = 0; j < p; ++j)
      for (Eigen::Index i = 0; i < N; ++i) X0(i, j) = rng.uniform(-1, 1);
    Eigen::HouseholderQR<Mat> qr0(X0);
    Q.leftCols(p) = qr0.householderQ() * Mat::Identity(N, p);
  }

  NearNullResult res;
  Mat S;  // Ritz coefficients, descending Ritz values
  int dim = 0;
  bool converged = false;
  for (int blk = 0; blk < maxblocks; ++blk) {
    const int c0 = blk * p;
    dim = c0 + p;
    Mat W(N, p);
    for (int j = 0; j < p; ++j) W.col(j) = inv(invT(Q.col(c0 + j)));
    T.block(0, c0, dim, p) = Q.leftCols(dim).transpose() * W;
    for (int pass = 0; pass < 2; ++pass) W -= Q.leftCols(dim) * (Q.leftCols(dim).transpose() * W);
    Eigen::HouseholderQR<Mat> qr(W);
    const Mat Rn = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
    res.iterations = blk + 1;

    Mat Tsym = T.topLeftCorner(dim, dim).triangularView<Eigen::Upper>();
    Tsym = Mat(Tsym.selfadjointView<Eigen::Upper>());
    Eigen::SelfAdjointEigenSolver<Mat> es(Tsym);
    S = es.eigenvectors().rowwise().reverse();
    const Vec theta = es.eigenvalues().reverse();
    if (dim >= m) {
      converged = true;
      for (int i = 0; i < opt.k; ++i)
        if ((Rn * S.block(c0, i, p, 1)).norm() > opt.tol * theta(i)) converged = false;
      if (converged) break;
    }
    const double scale = std::max(1e-300, std::abs(theta(0)));
    if (blk + 1 == maxblocks || Rn.diagonal().cwiseAbs().minCoeff() <= 1e-13 * scale) break;
    Q.middleCols(dim, p) = qr.householderQ() * Mat::Identity(N, p);
  }
  if (!converged) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "near_null_space: block Lanczos did not converge within dimension %d (tol %.1e); raise "
                  "max_iterations",
                  dim, opt.tol);
    throw SolverError(buf);
  }
  const int mm = std::min(m, dim);
  const Mat X = Q.leftCols(dim) * S.leftCols(mm);
  // refine with an SVD of At restricted to span(X)
  Mat Y(N, mm);
  for (int j = 0; j < mm; ++j) Y.col(j) = apply(X.col(j));
  Eigen::HouseholderQR<Mat> qr(Y);
  const Mat R = qr.matrixQR().topRows(mm).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Mat> svd(R, Eigen::ComputeFullV);
  const Vec sig = svd.singularValues().reverse();
  const Mat V = svd.matrixV().rowwise().reverse();
  const Mat ritz = X * V;
  const double h = sys.grid ? sys.grid->min_spacing() : 1.0;
  res.threshold = opt.threshold_coefficient * h * h;
  for (int j = 0; j < std::min(opt.k, mm); ++j) {
    res.singular_values.push_back(sig(j));
    Vec v = ritz.col(j).cwiseQuotient(sw);
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    v /= v(imax);
    res.vectors.push_back(v);
    if (sig(j) < res.threshold) ++res.count_below;
  }
  if (res.count_below > 0 && res.count_below < static_cast<int>(res.singular_values.size()))
    res.gap_ratio = res.singular_values[res.count_below] / res.singular_values[res.count_below - 1];
  return res;
}

// ---------------------------------------------------------------- kernel fit

KernelFit fit_kernel_combination(const HalfBallGrid& grid, const Vec& psi, const BubbleParams& p, double radius) {
  const int n = grid.dim();
  if (p.n != n) throw ParameterError("fit_kernel_combination: dimension mismatch");
  if (psi.size() != static_cast<Eigen::Index>(grid.size())) throw ParameterError("fit_kernel_combination: field size");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (radius <= 0 || grid.node(i).norm() <= radius) rows.push_back(i);
  if (rows.size() < static_cast<std::size_t>(n)) throw PreconditionError("fit_kernel_combination: too few nodes");
  Mat WJ(rows.size(), n);
  Vec Wpsi(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    const double sw = std::sqrt(grid.weights()(i));
    for (int a = 1; a <= n; ++a) WJ(k, a - 1) = sw * eval_jacobi(p, a, grid.node(i)).value;
    Wpsi(k) = sw * psi(i);
  }
  Eigen::ColPivHouseholderQR<Mat> qr(WJ);
  const Mat R = qr.matrixR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
  const double dmax = R.diagonal().cwiseAbs().maxCoeff(), dmin = R.diagonal().cwiseAbs().minCoeff();
  if (!(dmin > 1e-12 * dmax)) throw PreconditionError("fit_kernel_combination: degenerate kernel samples on this grid");
  KernelFit f;
  f.coefficients = qr.solve(Wpsi);
  const double nn = Wpsi.norm();
  f.residual = nn > 0 ? (Wpsi - WJ * f.coefficients).norm() / nn : 0.0;
  return f;
}

KernelFit fit_kernel_combination(const HalfBallGrid& grid, const Vec& psi, double kappa, double radius) {
  return fit_kernel_combination(grid, psi, BubbleParams::canonical(kappa, grid.dim()), radius);
}

double cutoff_chi(double eps, double r, double delta_prime) {
  if (!(eps > 0) || !(delta_prime > 0)) throw ParameterError("cutoff_chi: eps and delta' must be positive");
  const double x = eps * r;
  if (x <= delta_prime) return 1.0;
  if (x >= 2 * delta_prime) return 0.0;
  const double t = (x - delta_prime) / delta_prime;
  return 1.0 - t * t * t * (10 - 15 * t + 6 * t * t);
}

// ---------------------------------------------------------------- correction term

CorrectionSpec CorrectionSpec::from_json(const nlohmann::json& j) {
  CorrectionSpec s;
  const auto& p = j.at("pi0");
  if (!p.is_array() || p.size() != 2 || p[0].size() != 2 || p[1].size() != 2)
    throw ParameterError("CorrectionSpec: pi0 must be 2x2");
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) s.pi0(a, b) = p[a][b].get<double>();
  s.eps = j.value("eps", 0.01);
  s.kappa = j.value("kappa", 0.5);
  s.delta_prime = j.value("delta_prime", 1.0);
  if (j.value("profile", std::string("phi")) == "phi_tilde") s.profile_eps = 1.0 / (1.0 - s.kappa);
  s.closure = SphereClosure::decay(j.value("closure_exponent", 0.0));
  return s;
}

nlohmann::ordered_json CorrectionSpec::to_json() const {
  return nlohmann::ordered_json{{"pi0", {{pi0(0, 0), pi0(0, 1)}, {pi0(1, 0), pi0(1, 1)}}},
                                {"eps", eps},
                                {"kappa", kappa},
                                {"delta_prime", delta_prime},
                                {"profile_eps", profile_eps},
                                {"closure", closure.describe()}};
}

namespace {

BubbleParams profile_bubble(const CorrectionSpec& s) {
  BubbleParams b = BubbleParams::canonical(s.kappa, 3);
  b.eps = s.profile_eps;
  return b;
}

}  // namespace

double correction_source(const CorrectionSpec& spec, const Vec& y) {
  if (y.size() != 3) throw ParameterError("correction_source: n = 3 only");
  const double chi = cutoff_chi(spec.eps, y.norm(), spec.delta_prime);
  if (chi == 0) return 0.0;
  const Mat H = eval_bubble(profile_bubble(spec), y).hess;
  double s = 0;
  for (int j = 0; j < 2; ++j)
    for (int l = 0; l < 2; ++l) s += spec.pi0(j, l) * H(j, l);
  const double lambda = 1.0 - spec.kappa;
  return -2.0 * chi / (spec.profile_eps * lambda) * spec.eps * y(2) * s;
}

namespace {

DecayFit decay_fit(const HalfBallGrid& grid, const Vec& phi, int s, double scale) {
  const double R = grid.radius();
  DecayFit f;
  f.r_min = R / 4;
  f.r_max = R / 2;
  const int shells = 6;
  std::vector<double> shell_max(shells, 0.0);
  std::vector<double> shell_r(shells);
  const double lr0 = std::log(f.r_min), lr1 = std::log(f.r_max);
  for (int k = 0; k < shells; ++k) shell_r[k] = std::exp(lr0 + (k + 0.5) * (lr1 - lr0) / shells);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.node(i).norm();
    const double v = s == 0 ? std::abs(phi(i)) : grid.gradient(phi, i).norm();
    if (scale > 0) f.constant = std::max(f.constant, std::pow(1 + r, s) * v / scale);
    if (r < f.r_min || r >= f.r_max) continue;
    const int k = std::min(shells - 1, static_cast<int>((std::log(r) - lr0) / (lr1 - lr0) * shells));
    shell_max[k] = std::max(shell_max[k], v);
  }
  std::vector<double> xs, ys;
  for (int k = 0; k < shells; ++k)
    if (shell_max[k] > 0) {
      xs.push_back(std::log(shell_r[k]));
      ys.push_back(std::log(shell_max[k]));
    }
  if (xs.size() < 3) {
    f.exponent = std::numeric_limits<double>::quiet_NaN();
    return f;
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += sq(xs[k] - mx);
  }
  f.exponent = sxy / sxx;
  return f;
}

}  // namespace

nlohmann::ordered_json CorrectionResult::to_json() const {
  nlohmann::ordered_json j;
  j["kernel_coefficients"] = std::vector<double>(kernel_coefficients.data(),
                                                 kernel_coefficients.data() + kernel_coefficients.size());
  j["phi_at_origin"] = phi_at_origin;
  j["d1_phi_at_origin"] = d1_at_origin;
  j["d2_phi_at_origin"] = d2_at_origin;
  j["sup_norm"] = sup_norm;
  j["interior_residual"] = interior_residual;
  j["decay_s0"] = {{"exponent", s0.exponent}, {"constant", s0.constant}, {"r_min", s0.r_min}, {"r_max", s0.r_max}};
  j["decay_s1"] = {{"exponent", s1.exponent}, {"constant", s1.constant}, {"r_min", s1.r_min}, {"r_max", s1.r_max}};
  j["warnings"] = warnings;
  return j;
}

CorrectionResult solve_correction_term(const CorrectionSpec& spec, const HalfBallGrid& grid) {
  if (grid.dim() != 3) throw PreconditionError("solve_correction_term: n = 3 only");
  if (spec.pi0.rows() != 2 || spec.pi0.cols() != 2) throw ParameterError("solve_correction_term: pi0 must be 2x2");
  if ((spec.pi0 - spec.pi0.transpose()).cwiseAbs().maxCoeff() > 1e-14)
    throw ParameterError("solve_correction_term: pi0 must be symmetric");
  const double pin = spec.pi0.norm();
  if (std::abs(spec.pi0.trace()) > 1e-12 * std::max(1.0, pin))
    throw PreconditionError("solve_correction_term: pi0 must be trace-free");
  const int o = grid.origin();
  if (o < 0) throw PreconditionError("solve_correction_term: grid has no node at the origin");

  const BubbleParams V = profile_bubble(spec);
  RobinProblem prob = RobinProblem::linearized(V);
  prob.f_int = [spec](const Vec& y) { return correction_source(spec, y); };
  prob.outer = spec.closure;
  prob.label = "correction_term";
  const SparseSystem sys = assemble(prob, grid);

  CorrectionResult res;
  res.phibar = sys.rhs.cwiseAbs().maxCoeff() > 0 ? solve(sys) : Vec(Vec::Zero(grid.size()));

  // add c_a J_a so that phi(0) = d_1 phi(0) = d_2 phi(0) = 0 (discrete values)
  std::vector<Vec> J(3);
  Mat M(3, 3);
  for (int a = 0; a < 3; ++a) {
    J[a] = grid.sample([&](const Vec& y) { return eval_jacobi(V, a + 1, y).value; });
    const Vec gJ = grid.gradient(J[a], o);
    M(0, a) = J[a](o);
    M(1, a) = gJ(0);
    M(2, a) = gJ(1);
  }
  const Vec gphi = grid.gradient(res.phibar, o);
  const Vec target(Eigen::Vector3d(-res.phibar(o), -gphi(0), -gphi(1)));
  res.kernel_coefficients = M.fullPivLu().solve(target);
  res.phi = res.phibar;
  for (int a = 0; a < 3; ++a) res.phi += res.kernel_coefficients(a) * J[a];

  const Vec g0 = grid.gradient(res.phi, o);
  res.phi_at_origin = res.phi(o);
  res.d1_at_origin = g0(0);
  res.d2_at_origin = g0(1);
  res.sup_norm = res.phi.cwiseAbs().maxCoeff();
  const Vec r = residual(sys, res.phi);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.node_class(i) == NodeClass::interior) res.interior_residual = std::max(res.interior_residual, std::abs(r(i)));
  const double scale = spec.eps * pin;
  res.s0 = decay_fit(grid, res.phi, 0, scale);
  res.s1 = decay_fit(grid, res.phi, 1, scale);
  if (!(res.s0.exponent == res.s0.exponent) || !(res.s1.exponent == res.s1.exponent))
    res.warnings.push_back("truncation radius too small for a stable decay fit");
  if (2 * spec.delta_prime / spec.eps < grid.radius())
    res.warnings.push_back("cutoff support ends inside the truncation radius");
  return res;
}

// ---------------------------------------------------------------- Newton

NewtonResult solve_yamabe_system(const MetricField& g, double K, double c, const HalfBallGrid& grid,
                                 const SphereClosure& outer, const Vec& initial, const NewtonOptions& opt) {
  const int n = grid.dim();
  if (g.dim() != n) throw ParameterError("solve_yamabe_system: dimension mismatch");
  if (initial.size() != static_cast<Eigen::Index>(grid.size())) throw ParameterError("solve_yamabe_system: initial size");
  RobinProblem prob = RobinProblem::conformal(g);
  prob.outer = outer;
  const SparseSystem sys = assemble(prob, grid);
  const double p1 = (n + 2.0) / (n - 2.0), p2 = double(n) / (n - 2.0);
  const SpMat absA = sys.A.cwiseAbs();

  auto F = [&](const Vec& u) {
    Vec r = sys.A * u - sys.rhs;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      r(i) += K * std::pow(u(i), p1) + sys.boundary_factor(i) * c * std::pow(u(i), p2);
    return r;
  };
  auto scale_of = [&](const Vec& u) { return std::max(1e-300, (absA * u.cwiseAbs()).maxCoeff()); };

  NewtonResult res;
  res.u = initial;
  Vec r = F(res.u);
  double rn = r.cwiseAbs().maxCoeff() / scale_of(res.u);
  for (int it = 0; it < opt.max_iterations && rn > opt.tol; ++it) {
    SpMat J = sys.A;
    for (Eigen::Index i = 0; i < J.rows(); ++i)
      J.coeffRef(i, i) += K * p1 * std::pow(res.u(i), p1 - 1) +
                          sys.boundary_factor(i) * c * p2 * std::pow(res.u(i), p2 - 1);
    J.makeCompressed();
    const Factorization fac(J);
    const Vec du = fac.solve(-r);
    double step = 1.0;
    Vec trial;
    double tn = 0;
    for (int ls = 0; ls < 20; ++ls, step *= 0.5) {
      trial = res.u + step * du;
      if (trial.minCoeff() <= 0) continue;
      tn = F(trial).cwiseAbs().maxCoeff() / scale_of(trial);
      if (tn < rn || ls == 19) break;
    }
    if (trial.minCoeff() <= 0) throw SolverError("solve_yamabe_system: Newton left the positive cone");
    res.u = trial;
    r = F(res.u);
    rn = r.cwiseAbs().maxCoeff() / scale_of(res.u);
    res.iterations = it + 1;
  }
  res.residual = rn;
  res.converged = rn <= opt.tol;
  return res;
}

std::string field_to_csv(const HalfBallGrid& grid, const Vec& field) {
  std::ostringstream os;
  for (int d = 0; d < grid.dim(); ++d) os << "y" << d + 1 << ",";
  os << "class,value\n";
  char buf[40];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int d = 0; d < grid.dim(); ++d) {
      std::snprintf(buf, sizeof buf, "%.17g,", grid.node(i)(d));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", field(i));
    os << to_string(grid.node_class(i)) << "," << buf << "\n";
  }
  return os.str();
}

}  // namespace yamabe
