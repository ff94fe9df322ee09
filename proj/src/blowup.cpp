#include "yamabe/blowup.hpp"

#include <algorithm>
#include <cmath>

namespace yamabe {

namespace {

double half_exp(int n) { return 0.5 * (n - 2.0); }

void require_decreasing(const std::vector<double>& eps, const char* where) {
  if (eps.empty()) throw ParameterError(std::string(where) + ": empty eps list");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0)) throw ParameterError(std::string(where) + ": eps must be positive");
    if (i > 0 && !(eps[i] < eps[i - 1])) throw ParameterError(std::string(where) + ": eps must be strictly decreasing");
  }
}

void finish_peaks(BlowupSequence& s) {
  const Vec o = Vec::Zero(s.n);
  s.M.clear();
  s.eps.clear();
  for (const auto& u : s.fields) {
    const double m = u.value(o);
    s.M.push_back(m);
    s.eps.push_back(std::pow(m, -2.0 / (s.n - 2.0)));
  }
}

ScalarField sum_fields(const ScalarField& a, const ScalarField& b) {
  return ScalarField::linear_combination(1.0, a, 1.0, b);
}

ScalarField perturbed(const ScalarField& u, const PerturbationSpec& p) {
  if (p.kind == "none" || p.amplitude == 0) return u;
  const double a = p.amplitude;
  const int n = u.dim();
  return ScalarField::analytic(
      n, [u, a](const Vec& z) { return u.value(z) * (1 + a * std::sin(z(0))); },
      [u, a](const Vec& z) {
        Vec g = u.gradient(z) * (1 + a * std::sin(z(0)));
        g(0) += u.value(z) * a * std::cos(z(0));
        return g;
      },
      [u, a, n](const Vec& z) {
        const double f = 1 + a * std::sin(z(0)), f1 = a * std::cos(z(0)), f2 = -a * std::sin(z(0));
        Mat H = u.hessian(z) * f;
        const Vec g = u.gradient(z);
        Vec e = Vec::Zero(n);
        e(0) = 1;
        H += f1 * (g * e.transpose() + e * g.transpose()) + f2 * u.value(z) * e * e.transpose();
        return H;
      });
}

// Slope of log C against log M when M increases strictly, against the index otherwise.
GrowthFit growth(const std::vector<double>& C, const std::vector<double>& M, double tol, bool want_nonneg) {
  GrowthFit g;
  const std::size_t k = C.size();
  if (k < 2) {
    g.bounded = true;
    return g;
  }
  bool inc = M.size() == k;
  for (std::size_t i = 1; inc && i < k; ++i) inc = M[i] > M[i - 1];
  std::vector<double> x(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    x[i] = inc ? std::log(M[i]) : static_cast<double>(i);
    y[i] = std::log(std::max(C[i], 1e-300));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < k; ++i) mx += x[i] / k, my += y[i] / k;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < k; ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += sq(x[i] - mx);
  g.slope = sxx > 0 ? sxy / sxx : 0.0;
  g.bounded = want_nonneg ? g.slope >= -tol : g.slope <= tol;
  return g;
}

nlohmann::ordered_json growth_json(const GrowthFit& g) {
  return nlohmann::ordered_json{{"slope", g.slope}, {"bounded", g.bounded}};
}

}  // namespace

// ---------------------------------------------------------------- sequences

PerturbationSpec PerturbationSpec::from_json(const nlohmann::json& j) {
  PerturbationSpec p;
  p.kind = j.value("kind", p.kind);
  p.amplitude = j.value("amplitude", p.amplitude);
  p.bound = j.value("bound", p.bound);
  return p;
}

nlohmann::ordered_json PerturbationSpec::to_json() const {
  return nlohmann::ordered_json{{"kind", kind}, {"amplitude", amplitude}, {"bound", bound}};
}

nlohmann::ordered_json BlowupSequence::to_json() const {
  nlohmann::ordered_json c = nlohmann::ordered_json::array();
  for (const auto& v : extra_centres) c.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return nlohmann::ordered_json{{"n", n},
                                {"kappa", kappa},
                                {"kind", kind},
                                {"chart_radius", chart_radius},
                                {"bubble_eps", bubble_eps},
                                {"M", M},
                                {"eps", eps},
                                {"extra_centres", c},
                                {"perturbation", perturbation.to_json()},
                                {"max_residual", max_residual}};
}

BlowupSequence synth_blowup_sequence(double kappa, const std::vector<double>& eps, const PerturbationSpec& pert, int n,
                                     double chart_radius, int residual_samples, std::uint64_t seed) {
  require_decreasing(eps, "synth_blowup_sequence");
  if (pert.kind != "none" && pert.kind != "multiplicative_sin")
    throw ParameterError("synth_blowup_sequence: unknown perturbation kind \"" + pert.kind + "\"");
  if (!(std::abs(pert.amplitude) < pert.bound))
    throw ParameterError("synth_blowup_sequence: perturbation amplitude exceeds the configured bound");
  BlowupSequence s;
  s.n = n;
  s.kappa = kappa;
  s.chart_radius = chart_radius;
  s.kind = "one_bubble";
  s.bubble_eps = eps;
  s.perturbation = pert;
  for (double e : eps) {
    BubbleParams b = BubbleParams::canonical(kappa, n);
    b.eps = e;
    b.validate();
    s.fields.push_back(perturbed(bubble_field(b), pert));
  }
  finish_peaks(s);

  // residuals relative to the largest |Delta u| (interior) and |d_n u| (boundary) seen
  Rng rng(seed);
  for (const auto& u : s.fields) {
    double ri = 0, rb = 0, si = 0, sb = 0;
    for (int k = 0; k < residual_samples; ++k) {
      Vec z(n);
      do {
        for (int d = 0; d < n; ++d) z(d) = rng.uniform(-chart_radius, chart_radius);
        z(n - 1) = std::abs(z(n - 1));
      } while (z.norm() >= chart_radius);
      if (k % 2) z(n - 1) = 0.0;
      const ResidualPair r = residual_system(u, kappa, z);
      ri = std::max(ri, std::abs(r.interior));
      si = std::max(si, std::abs(u.hessian(z).trace()));
      if (r.has_boundary()) {
        rb = std::max(rb, std::abs(r.boundary));
        sb = std::max(sb, std::abs(u.gradient(z)(n - 1)));
      }
    }
    s.max_residual = std::max({s.max_residual, ri / std::max(si, 1e-300), rb / std::max(sb, 1e-300)});
  }
  return s;
}

BlowupSequence two_bubble_sequence(double kappa, const std::vector<double>& eps, const Vec& offset, double scale,
                                   int n, double chart_radius) {
  require_decreasing(eps, "two_bubble_sequence");
  if (offset.size() != n - 1) throw ParameterError("two_bubble_sequence: offset must have length n-1");
  if (!(scale > 0)) throw ParameterError("two_bubble_sequence: scale must be positive");
  BlowupSequence s;
  s.n = n;
  s.kappa = kappa;
  s.chart_radius = chart_radius;
  s.kind = "two_bubble";
  s.bubble_eps = eps;
  if (offset.norm() > 0) {
    Vec c = Vec::Zero(n);
    c.head(n - 1) = offset;
    s.extra_centres.push_back(c);
  }
  for (double e : eps) {
    BubbleParams a = BubbleParams::canonical(kappa, n);
    a.eps = e;
    BubbleParams b = a;
    b.eps = e * scale;
    b.center = offset;
    s.fields.push_back(sum_fields(bubble_field(a), bubble_field(b)));
  }
  finish_peaks(s);
  return s;
}

BlowupSequence constant_sequence(const std::vector<double>& values, int n, double chart_radius) {
  BlowupSequence s;
  s.n = n;
  s.chart_radius = chart_radius;
  s.kind = "constant";
  for (double v : values) {
    if (!(v > 0)) throw ParameterError("constant_sequence: values must be positive");
    s.fields.push_back(ScalarField::constant(n, v));
  }
  finish_peaks(s);
  return s;
}

BlowupSequence slowed_decay_sequence(const std::vector<double>& eps, int n, double chart_radius) {
  require_decreasing(eps, "slowed_decay_sequence");
  BlowupSequence s;
  s.n = n;
  s.chart_radius = chart_radius;
  s.kind = "slowed_decay";
  s.bubble_eps = eps;
  const double m = half_exp(n);
  for (double e : eps) {
    // e^{-m} (1 + t)^{-m/2}, t = |z|^2 / e^2
    s.fields.push_back(ScalarField::analytic(
        n, [e, m](const Vec& z) { return std::pow(e, -m) * std::pow(1 + z.squaredNorm() / (e * e), -0.5 * m); },
        [e, m](const Vec& z) {
          const double t = 1 + z.squaredNorm() / (e * e);
          return Vec(std::pow(e, -m) * (-m) * std::pow(t, -0.5 * m - 1) / (e * e) * z);
        },
        [e, m, n](const Vec& z) {
          const double t = 1 + z.squaredNorm() / (e * e);
          const double a = std::pow(e, -m) * (-m) / (e * e);
          return Mat(a * std::pow(t, -0.5 * m - 1) * Mat::Identity(n, n) +
                     a * (-0.5 * m - 1) * std::pow(t, -0.5 * m - 2) * 2 / (e * e) * z * z.transpose());
        }));
  }
  finish_peaks(s);
  return s;
}

// ---------------------------------------------------------------- rescaling

ScalarField rescale(const ScalarField& u, double eps) {
  if (!(eps > 0)) throw ParameterError("rescale: eps must be positive");
  const int n = u.dim();
  const double f = std::pow(eps, half_exp(n));
  return ScalarField::analytic(
      n, [u, eps, f](const Vec& y) { return f * u.value(eps * y); },
      [u, eps, f](const Vec& y) { return Vec(f * eps * u.gradient(eps * y)); },
      [u, eps, f](const Vec& y) { return Mat(f * eps * eps * u.hessian(eps * y)); });
}

ScalarField limit_profile(double kappa, int n) {
  BubbleParams b = BubbleParams::canonical(kappa, n);
  const double lam = b.lambda();
  // lambda^m U_kappa(lambda y) is the bubble with eps = 1 / lambda
  b.eps = 1.0 / lam;
  return bubble_field(b);
}

nlohmann::ordered_json ConvergenceAudit::to_json() const {
  nlohmann::ordered_json rs = nlohmann::ordered_json::array();
  for (const auto& r : rows)
    rs.push_back({{"i", r.i}, {"R", r.R}, {"truncated", r.truncated}, {"C0", r.c0}, {"C1", r.c1}, {"C2", r.c2}});
  return nlohmann::ordered_json{{"use_lambda", use_lambda}, {"rows", rs}};
}

ConvergenceAudit bubble_convergence_audit(const BlowupSequence& seq, const std::vector<double>& R, bool use_lambda,
                                          int samples, std::uint64_t seed) {
  if (!R.empty() && R.size() != seq.size()) throw ParameterError("bubble_convergence_audit: R list length mismatch");
  const int n = seq.n;
  ConvergenceAudit a;
  a.use_lambda = use_lambda;
  const ScalarField prof = use_lambda ? limit_profile(seq.kappa, n) : bubble_field(BubbleParams::canonical(seq.kappa, n));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    ConvergenceRow row;
    row.i = i;
    row.R = R.empty() ? 0.25 / std::sqrt(seq.eps[i]) : R[i];
    const double chart = seq.chart_radius / seq.eps[i];
    if (row.R > chart) {
      row.R = chart;
      row.truncated = true;
    }
    const ScalarField v = rescale(seq.fields[i], seq.eps[i]);
    Rng rng(seed);
    for (int k = 0; k <= samples; ++k) {
      Vec y = Vec::Zero(n);
      if (k > 0) {
        do {
          for (int d = 0; d < n; ++d) y(d) = rng.uniform(-row.R, row.R);
          y(n - 1) = std::abs(y(n - 1));
        } while (y.norm() >= row.R);
        if (k % 4 == 0) y(n - 1) = 0.0;
      }
      row.c0 = std::max(row.c0, std::abs(v.value(y) - prof.value(y)));
      row.c1 = std::max(row.c1, (v.gradient(y) - prof.gradient(y)).cwiseAbs().maxCoeff());
      row.c2 = std::max(row.c2, (v.hessian(y) - prof.hessian(y)).cwiseAbs().maxCoeff());
    }
    a.rows.push_back(row);
  }
  return a;
}

// ---------------------------------------------------------------- isolated bound

double isolated_constant(const ScalarField& u, double delta, const std::vector<Vec>& centres,
                         const IsolatedOptions& opt, double r_min) {
  const int n = u.dim();
  const double m = half_exp(n);
  const int shells = std::max(1, static_cast<int>(std::ceil(opt.per_decade * std::log10(delta / r_min))));
  const QuadratureRule unit = hemisphere_rule(n, 1.0, opt.order);
  std::vector<Vec> origins{Vec::Zero(n)};
  for (const auto& c : centres) origins.push_back(c);
  double C = 0;
  for (const auto& c : origins) {
    for (int k = 0; k <= shells; ++k) {
      const double r = delta * std::pow(10.0, -static_cast<double>(k) / opt.per_decade);
      for (const auto& w : unit.nodes) {
        const Vec z = c + r * w;
        const double rz = z.norm();
        if (rz >= delta || rz == 0) continue;
        C = std::max(C, u.value(z) * std::pow(rz, m));
      }
    }
  }
  return C;
}

nlohmann::ordered_json IsolatedBound::to_json() const {
  return nlohmann::ordered_json{{"delta", delta}, {"C", C}, {"growth", growth_json(growth)}};
}

IsolatedBound isolated_bound_constant(const BlowupSequence& seq, double delta, const IsolatedOptions& opt) {
  if (!(delta > 0)) throw ParameterError("isolated_bound_constant: delta must be positive");
  IsolatedBound b;
  b.delta = delta;
  double r_min = opt.r_min;
  if (r_min <= 0) {
    r_min = delta * 1e-3;
    for (double e : seq.eps) r_min = std::min(r_min, e * 1e-3);
  }
  for (const auto& u : seq.fields) b.C.push_back(isolated_constant(u, delta, seq.extra_centres, opt, r_min));
  b.growth = growth(b.C, seq.M, 0.1, false);
  return b;
}

// ---------------------------------------------------------------- spherical averages

namespace {

SphericalAverage average_at(const ScalarField& u, double r, int order) {
  const int n = u.dim();
  const double m = half_exp(n);
  const QuadratureRule S = hemisphere_rule(n, r, order);
  double iu = 0, iur = 0;
  for (std::size_t k = 0; k < S.size(); ++k) {
    const Vec& z = S.nodes[k];
    iu += S.weights[k] * u.value(z);
    iur += S.weights[k] * u.gradient(z).dot(z) / r;
  }
  const double area = 0.5 * sphere_area(n - 1) * std::pow(r, n - 1);
  SphericalAverage a;
  a.ubar = iu / area;
  const double ubar_r = iur / area;
  a.w = std::pow(r, m) * a.ubar;
  a.dw = m * std::pow(r, m - 1) * a.ubar + std::pow(r, m) * ubar_r;
  return a;
}

}  // namespace

SphericalAverage spherical_average_w(const ScalarField& u, double r, int order) {
  if (!(r > 0)) throw ParameterError("spherical_average_w: r must be positive");
  if (order < 4) throw QuadratureError("spherical_average_w: order must be at least 4");
  SphericalAverage a = average_at(u, r, order);
  const SphericalAverage b = average_at(u, r, order / 2);
  a.dw_error = std::abs(a.dw - b.dw);
  return a;
}

// ---------------------------------------------------------------- simple check

nlohmann::ordered_json SimpleCheck::to_json() const {
  nlohmann::ordered_json rs = nlohmann::ordered_json::array();
  for (const auto& r : rows)
    rs.push_back({{"i", r.i},
                  {"count", r.count},
                  {"critical_radii", r.critical_radii},
                  {"post_negative", r.post_negative},
                  {"refinements", r.refinements},
                  {"verdict", to_string(r.verdict)}});
  return nlohmann::ordered_json{
      {"delta", delta}, {"rows", rs}, {"first_index", first_index}, {"verdict", to_string(verdict)}};
}

namespace {

// Signs of w' on the ladder; 0 where the sign is not certified.
struct SignLadder {
  std::vector<double> r;
  std::vector<int> sign;
  bool certified = true;
};

SignLadder sign_ladder(const ScalarField& u, double r0, double r1, int per_decade, int order) {
  SignLadder L;
  const int k = std::max(2, static_cast<int>(std::ceil(per_decade * std::log10(r1 / r0))));
  for (int j = 0; j <= k; ++j) {
    // stay strictly inside (0, delta)
    const double r = r0 * std::pow(r1 / r0, static_cast<double>(j) / k) * (j == k ? 0.999 : 1.0);
    const SphericalAverage a = spherical_average_w(u, r, order);
    const int n = u.dim();
    const double scale = std::abs(half_exp(n) * std::pow(r, half_exp(n) - 1) * a.ubar) + std::abs(a.dw);
    int s = 0;
    if (std::abs(a.dw) > std::max(4 * a.dw_error, 1e-12 * scale)) s = a.dw > 0 ? 1 : -1;
    if (s == 0) L.certified = false;
    L.r.push_back(r);
    L.sign.push_back(s);
  }
  return L;
}

}  // namespace

SimpleCheck simple_blowup_check(const BlowupSequence& seq, double delta, const SimpleOptions& opt) {
  if (!(delta > 0)) throw ParameterError("simple_blowup_check: delta must be positive");
  SimpleCheck out;
  out.delta = delta;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    SimpleRow row;
    row.i = i;
    const double scale = seq.eps.empty() ? delta : std::min(seq.eps[i], delta);
    const double r0 = opt.r_min_factor * scale;
    int prev = -1;
    bool settled = false;
    SignLadder L;
    for (int ref = 0; ref <= opt.max_refinements; ++ref) {
      L = sign_ladder(seq.fields[i], r0, delta, opt.per_decade << ref, opt.order);
      int count = 0;
      for (std::size_t k = 1; k < L.sign.size(); ++k)
        if (L.sign[k] != L.sign[k - 1]) ++count;
      row.refinements = ref;
      if (L.certified && count == prev) {
        settled = true;
        break;
      }
      prev = L.certified ? count : -1;
    }
    row.count = 0;
    row.critical_radii.clear();
    for (std::size_t k = 1; k < L.sign.size(); ++k)
      if (L.sign[k] != L.sign[k - 1]) {
        ++row.count;
        row.critical_radii.push_back(std::sqrt(L.r[k] * L.r[k - 1]));
      }
    row.post_negative = !L.sign.empty() && L.sign.back() < 0 && row.count > 0;
    if (!settled)
      row.verdict = Verdict::indeterminate;
    else
      row.verdict = row.count == 1 && row.post_negative && L.sign.front() > 0 ? Verdict::pass : Verdict::fail;
    out.rows.push_back(row);
  }
  // first index from which every row passes
  out.first_index = -1;
  for (int i = static_cast<int>(out.rows.size()) - 1; i >= 0; --i) {
    if (out.rows[i].verdict != Verdict::pass) break;
    out.first_index = i;
  }
  if (out.rows.empty())
    out.verdict = Verdict::indeterminate;
  else if (out.first_index >= 0)
    out.verdict = Verdict::pass;
  else
    out.verdict = out.rows.back().verdict == Verdict::indeterminate ? Verdict::indeterminate : Verdict::fail;
  return out;
}

// ---------------------------------------------------------------- bounds (a)/(b)

nlohmann::ordered_json SimpleBounds::to_json() const {
  nlohmann::ordered_json rs = nlohmann::ordered_json::array();
  for (const auto& r : rows)
    rs.push_back(
        {{"i", r.i}, {"r_i", r.r_i}, {"upper", r.upper}, {"lower", r.lower}, {"nodes", r.nodes}, {"empty", r.empty}});
  return nlohmann::ordered_json{{"delta", delta},
                                {"rows", rs},
                                {"upper_growth", growth_json(upper_growth)},
                                {"lower_decay", growth_json(lower_decay)}};
}

SimpleBounds simple_bounds_audit(const BlowupSequence& seq, const GreenField& G, double delta, double R_factor) {
  if (!G.grid) throw PreconditionError("simple_bounds_audit: empty Green field");
  if (G.n != seq.n) throw ParameterError("simple_bounds_audit: dimension mismatch");
  const HalfBallGrid& grid = *G.grid;
  const int n = seq.n;
  SimpleBounds b;
  b.delta = delta;
  std::vector<double> up, lo, M;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    SimpleBoundsRow row;
    row.i = i;
    row.r_i = R_factor * std::sqrt(seq.eps[i]);
    row.lower = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Vec& z = grid.node(k);
      const double r = z.norm();
      if (r < row.r_i || r >= delta) continue;
      const double Mu = seq.M[i] * seq.fields[i].value(z);
      row.upper = std::max(row.upper, Mu * std::pow(r, n - 2.0));
      if (G.values(k) > 0) row.lower = std::min(row.lower, Mu / G.values(k));
      ++row.nodes;
    }
    row.empty = row.nodes == 0;
    if (row.empty) row.lower = 0;
    b.rows.push_back(row);
    if (!row.empty) {
      up.push_back(row.upper);
      lo.push_back(row.lower);
      M.push_back(seq.M[i]);
    }
  }
  b.upper_growth = growth(up, M, 0.1, false);
  b.lower_decay = growth(lo, M, 0.1, true);
  if (up.size() < b.rows.size()) b.upper_growth.bounded = b.lower_decay.bounded = false;
  return b;
}

// ---------------------------------------------------------------- refined approximation

RefinedSequence solve_refined_sequence(const Mat& pi0, double kappa, const std::vector<double>& eps,
                                       const RefinedOptions& opt) {
  require_decreasing(eps, "solve_refined_sequence");
  if (pi0.rows() != 2 || pi0.cols() != 2) throw ParameterError("solve_refined_sequence: pi0 must be 2x2");
  RefinedSequence s;
  s.pi0 = pi0;
  s.kappa = kappa;
  s.eps = eps;
  GridSpec spec;
  spec.n = 3;
  spec.radius = opt.radius;
  spec.cells = opt.cells;
  spec.stretch = GridSpec::stretch_for(opt.radius, opt.cells, opt.h0);
  s.grid = std::make_shared<HalfBallGrid>(spec);
  const HalfBallGrid& grid = *s.grid;
  const ScalarField prof = limit_profile(kappa, 3);
  const Vec seed = grid.sample([&](const Vec& y) { return prof.value(y); });
  const SphereClosure outer = SphereClosure::dirichlet([prof](const Vec& y) { return prof.value(y); });
  const double K = -3 * kappa, c = 1.0;

  const NewtonResult flat = solve_yamabe_system(MetricField::euclidean(3), K, c, grid, outer, seed, opt.newton);
  if (!flat.converged) throw SolverError("solve_refined_sequence: Newton did not converge for the flat profile");
  s.profile = flat.u;
  for (double e : eps) {
    // metric of the chart seen at scale e: g(e y)
    const MetricField g = MetricField::fermi_synthetic(3, e * pi0, Mat::Zero(2, 2));
    const NewtonResult r = solve_yamabe_system(g, K, c, grid, outer, flat.u, opt.newton);
    if (!r.converged) throw SolverError("solve_refined_sequence: Newton did not converge");
    s.v.push_back(r.u);
    s.newton_iterations.push_back(r.iterations);
    s.newton_residuals.push_back(r.residual);
  }
  return s;
}

std::vector<CorrectionSpec> matching_corrections(const RefinedSequence& seq) {
  std::vector<CorrectionSpec> out;
  for (double e : seq.eps) {
    CorrectionSpec c;
    c.pi0 = seq.pi0;
    c.eps = e;
    c.kappa = seq.kappa;
    c.profile_eps = 1.0 / (1.0 - seq.kappa);
    out.push_back(c);
  }
  return out;
}

nlohmann::ordered_json RefinedAudit::to_json() const {
  nlohmann::ordered_json rs = nlohmann::ordered_json::array();
  for (const auto& r : rows)
    rs.push_back({{"eps", r.eps},
                  {"with_phi", {r.with_phi[0], r.with_phi[1], r.with_phi[2]}},
                  {"without_phi", {r.without_phi[0], r.without_phi[1], r.without_phi[2]}}});
  nlohmann::ordered_json j{{"rows", rs}};
  for (int s = 0; s < 3; ++s) {
    j["s" + std::to_string(s)] = {{"slope_with", slope_with[s]},
                                  {"slope_without", slope_without[s]},
                                  {"bounded_with", bounded_with[s]},
                                  {"grows_without", grows_without[s]}};
  }
  return j;
}

namespace {

// Adds c_a J_a so that e(0) = d_1 e(0) = d_2 e(0) = 0, the normalization of the correction term.
Vec normalize_kernel(const HalfBallGrid& grid, const Vec& e, const std::vector<Vec>& J) {
  const int o = grid.origin();
  Mat A(3, 3);
  for (int a = 0; a < 3; ++a) {
    const Vec g = grid.gradient(J[a], o);
    A(0, a) = J[a](o);
    A(1, a) = g(0);
    A(2, a) = g(1);
  }
  const Vec ge = grid.gradient(e, o);
  const Vec c = A.fullPivLu().solve(Vec(Eigen::Vector3d(-e(o), -ge(0), -ge(1))));
  Vec out = e;
  for (int a = 0; a < 3; ++a) out += c(a) * J[a];
  return out;
}

void weighted_norms(const HalfBallGrid& grid, const Vec& e, double radius, double scale, double* out) {
  out[0] = out[1] = out[2] = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.node(i).norm();
    if (r > radius) continue;
    out[0] = std::max(out[0], std::abs(e(i)));
    out[1] = std::max(out[1], (1 + r) * grid.gradient(e, i).norm());
    out[2] = std::max(out[2], sq(1 + r) * grid.hessian(e, i).norm());
  }
  for (int s = 0; s < 3; ++s) out[s] /= scale;
}

}  // namespace

RefinedAudit refined_approx_audit(const RefinedSequence& seq, const std::vector<CorrectionSpec>& specs,
                                  const std::vector<CorrectionResult>& phis, const RefinedOptions& opt) {
  if (specs.size() != seq.eps.size() || phis.size() != seq.eps.size())
    throw PreconditionError("refined_approx_audit: one correction term per sequence member is required");
  const HalfBallGrid& grid = *seq.grid;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if ((specs[i].pi0 - seq.pi0).cwiseAbs().maxCoeff() > 1e-14 || std::abs(specs[i].eps - seq.eps[i]) > 1e-14 * seq.eps[i])
      throw PreconditionError("refined_approx_audit: correction term does not match (pi0, eps) of the sequence");
    if (phis[i].phi.size() != static_cast<Eigen::Index>(grid.size()))
      throw PreconditionError("refined_approx_audit: correction term lives on a different grid");
  }
  BubbleParams V = BubbleParams::canonical(seq.kappa, 3);
  V.eps = 1.0 / (1.0 - seq.kappa);
  std::vector<Vec> J(3);
  for (int a = 0; a < 3; ++a) J[a] = grid.sample([&](const Vec& y) { return eval_jacobi(V, a + 1, y).value; });

  RefinedAudit A;
  std::vector<double> inv, w[3], wo[3];
  for (std::size_t i = 0; i < seq.eps.size(); ++i) {
    RefinedRow row;
    row.eps = seq.eps[i];
    const Vec d = seq.v[i] - seq.profile;
    weighted_norms(grid, normalize_kernel(grid, d - phis[i].phi, J), opt.audit_radius, row.eps, row.with_phi);
    weighted_norms(grid, normalize_kernel(grid, d, J), opt.audit_radius, row.eps, row.without_phi);
    A.rows.push_back(row);
    inv.push_back(1.0 / row.eps);
    for (int s = 0; s < 3; ++s) w[s].push_back(row.with_phi[s]), wo[s].push_back(row.without_phi[s]);
  }
  for (int s = 0; s < 3; ++s) {
    const GrowthFit a = growth(w[s], inv, opt.growth_slope, false);
    const GrowthFit b = growth(wo[s], inv, opt.growth_slope, false);
    A.slope_with[s] = a.slope;
    A.slope_without[s] = b.slope;
    A.bounded_with[s] = a.bounded;
    A.grows_without[s] = !b.bounded;
  }
  return A;
}

// ---------------------------------------------------------------- sign experiment

std::vector<ScalarField> green_candidates(const BlowupSequence& seq) {
  std::vector<ScalarField> G;
  for (std::size_t i = 0; i < seq.size(); ++i)
    G.push_back(ScalarField::linear_combination(seq.M[i], seq.fields[i], 0.0, seq.fields[i]));
  return G;
}

nlohmann::ordered_json BlowupSignExperiment::to_json() const {
  nlohmann::ordered_json j = experiment.to_json();
  j["scaling_constant"] = scaling_constant;
  return j;
}

BlowupSignExperiment blowup_sign_experiment(const BlowupSequence& seq, const std::vector<double>& radii,
                                            double tolerance, double convergence_tol, int order) {
  BlowupSignExperiment b;
  b.experiment = sign_restriction_experiment(green_candidates(seq), radii, tolerance, convergence_tol, order);
  const int n = seq.n;
  const double K = -n * (n - 2.0) * seq.kappa, c = n - 2.0;
  for (std::size_t i = 0; i < seq.size(); ++i)
    for (double r : radii)
      b.scaling_constant =
          std::max(b.scaling_constant, std::abs(pohozaev_P(seq.fields[i], r, K, c, order).P) / (seq.eps[i] * r));
  return b;
}

}  // namespace yamabe
