#include "ulab/pdelab.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

namespace ulab {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
  return s;
}

// sin(pi m t), exactly zero at the ends of the unit interval
double sinpi(int m, double t) {
  if (t == 0 || t == 1) return 0;
  return std::sin(kPi * m * t);
}
// int_{t0}^{t1} cos(pi m t) dt
double jcos(int m, double t0, double t1) {
  if (m == 0) return t1 - t0;
  return (sinpi(m, t1) - sinpi(m, t0)) / (kPi * m);
}
// int sin(p pi x / l) sin(q pi x / l) over [x0, x1]
double iss(int p, int q, double x0, double x1, double l) {
  return 0.5 * l * (jcos(p - q, x0 / l, x1 / l) - jcos(p + q, x0 / l, x1 / l));
}
double icc(int p, int q, double x0, double x1, double l) {
  return 0.5 * l * (jcos(p - q, x0 / l, x1 / l) + jcos(p + q, x0 / l, x1 / l));
}

// time weight sum_m c_m cos(2 pi m t / T) on [0, T]
struct Weight {
  double T = 1;
  std::vector<double> c{1.0};
};
Weight unit_weight(double T) { return {T, {1.0}}; }
Weight eta_weight(double T) { return {T, {0.5, -0.5}}; }          // sin^2(pi t / T)
Weight eta2_weight(double T) { return {T, {0.375, -0.5, 0.125}}; }  // sin^4

double c0(double x, double T) { return x == 0 ? T : std::sin(x * T) / x; }
double s0(double x, double T) {
  if (x == 0) return 0;
  double h = std::sin(0.5 * x * T);
  return 2 * h * h / x;
}
// int_0^T w(t) cos(nu t) dt and the sine version
double wcos(const Weight& w, double nu) {
  double kap = 2 * kPi / w.T, s = 0;
  for (std::size_t m = 0; m < w.c.size(); ++m) {
    if (w.c[m] == 0) continue;
    s += m == 0 ? w.c[0] * c0(nu, w.T)
                : w.c[m] * 0.5 * (c0(nu + m * kap, w.T) + c0(nu - m * kap, w.T));
  }
  return s;
}
double wsin(const Weight& w, double nu) {
  double kap = 2 * kPi / w.T, s = 0;
  for (std::size_t m = 0; m < w.c.size(); ++m) {
    if (w.c[m] == 0) continue;
    s += m == 0 ? w.c[0] * s0(nu, w.T)
                : w.c[m] * 0.5 * (s0(nu + m * kap, w.T) + s0(nu - m * kap, w.T));
  }
  return s;
}
struct Prod {
  double cc, ss, sc, cs;  // int w f(p t) g(q t), first letter for p
};
Prod products(const Weight& w, double p, double q) {
  double cm = wcos(w, p - q), cp = wcos(w, p + q);
  double sm = wsin(w, p - q), sp = wsin(w, p + q);
  return {0.5 * (cm + cp), 0.5 * (cm - cp), 0.5 * (sp + sm), 0.5 * (sp - sm)};
}

// composite Gauss-Legendre nodes on [t0, t1], panels of at most len
struct Nodes {
  std::vector<double> t, w;
};
Nodes gl_nodes(double t0, double t1, double len) {
  static gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(8);
  int panels = std::max(1, (int)std::ceil((t1 - t0) / len - 1e-12));
  Nodes n;
  double h = (t1 - t0) / panels;
  for (int p = 0; p < panels; ++p)
    for (int i = 0; i < 8; ++i) {
      double x, wt;
      gsl_integration_glfixed_point(t0 + p * h, t0 + (p + 1) * h, i, &x, &wt, tab);
      n.t.push_back(x);
      n.w.push_back(wt);
    }
  return n;
}

// panel length: half a period of the fastest frequency, 16 nodes per period
double period(double freq) { return freq > 0 ? kPi / freq : 1e300; }

struct Box {
  Vec lo, hi;
};
Box region_box(const ControlProblem& p) {
  const auto& o = p.obs;
  Box bx;
  if (!o.boundary) return {o.lo, o.hi};
  if (p.geometry == Geometry::Interval) {
    double x = o.side == 0 ? 0 : p.L;
    bx.lo = bx.hi = Vec::Constant(1, x);
    return bx;
  }
  bool vertical = o.side < 2;  // side along y
  double len = vertical ? p.b : p.a;
  double s0 = o.s0, s1 = o.s1 < o.s0 ? len : o.s1;
  if (o.s1 < o.s0) s0 = 0;
  double fixed = o.side == 0 ? 0 : o.side == 1 ? p.a : o.side == 2 ? 0 : p.b;
  bx.lo.resize(2);
  bx.hi.resize(2);
  if (vertical) {
    bx.lo << fixed, s0;
    bx.hi << fixed, s1;
  } else {
    bx.lo << s0, fixed;
    bx.hi << s1, fixed;
  }
  return bx;
}

std::pair<double, double> segment(const ControlProblem& p) {
  const auto& o = p.obs;
  double len = o.side < 2 ? p.b : p.a;
  if (o.s1 < o.s0) return {0, len};
  return {o.s0, o.s1};
}

int index_of(const std::vector<Mode>& ms, int j, int k) {
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (ms[i].j == j && ms[i].k == k) return (int)i;
  return -1;
}

double q_entry(const ControlProblem& p, const Mode& m, const Mode& n, bool mass_only) {
  const auto& o = p.obs;
  if (p.geometry == Geometry::Interval) {
    double L = p.L, c = 2 / L;
    if (o.boundary) {
      double dm = std::sqrt(c) * m.j * kPi / L, dn = std::sqrt(c) * n.j * kPi / L;
      if (o.side == 1) {
        dm *= (m.j % 2 ? -1 : 1);
        dn *= (n.j % 2 ? -1 : 1);
      }
      return dm * dn;
    }
    double x0 = o.lo[0], x1 = o.hi[0];
    double v = c * iss(m.j, n.j, x0, x1, L);
    if (!mass_only) v += c * (m.j * kPi / L) * (n.j * kPi / L) * icc(m.j, n.j, x0, x1, L);
    return v;
  }
  double a = p.a, b = p.b, c = 4 / (a * b);
  if (o.boundary) {
    auto [s0, s1] = segment(p);
    if (o.side < 2) {
      double v = c * (m.j * kPi / a) * (n.j * kPi / a) * iss(m.k, n.k, s0, s1, b);
      if (o.side == 1 && (m.j + n.j) % 2) v = -v;
      return v;
    }
    double v = c * (m.k * kPi / b) * (n.k * kPi / b) * iss(m.j, n.j, s0, s1, a);
    if (o.side == 3 && (m.k + n.k) % 2) v = -v;
    return v;
  }
  double x0 = o.lo[0], x1 = o.hi[0], y0 = o.lo[1], y1 = o.hi[1];
  double sx = iss(m.j, n.j, x0, x1, a), sy = iss(m.k, n.k, y0, y1, b);
  double v = sx * sy;
  if (!mass_only) {
    v += (m.j * kPi / a) * (n.j * kPi / a) * icc(m.j, n.j, x0, x1, a) * sy;
    v += (m.k * kPi / b) * (n.k * kPi / b) * sx * icc(m.k, n.k, y0, y1, b);
  }
  return c * v;
}

std::vector<Mode> subset(const std::vector<Mode>& ms, const std::vector<int>& idx) {
  std::vector<Mode> r;
  for (int i : idx) r.push_back(ms[i]);
  return r;
}

// free wave observability Gramian on x = (c, d)
Mat wave_gramian_free(const std::vector<Mode>& ms, const Mat& Q, double T) {
  int n = (int)ms.size();
  Mat G = Mat::Zero(2 * n, 2 * n);
  Weight w = unit_weight(T);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      if (Q(k, l) == 0) continue;
      double p = ms[k].omega, q = ms[l].omega;
      Prod pr = products(w, p, q);
      G(k, l) = Q(k, l) * pr.cc;
      G(k, n + l) = Q(k, l) * pr.cs / q;
      G(n + k, l) = Q(k, l) * pr.sc / p;
      G(n + k, n + l) = Q(k, l) * pr.ss / (p * q);
    }
  return 0.5 * (G + G.transpose());
}

// penalized control Gramian block, z = (a, a'/omega) layout
Mat control_gramian_free(const std::vector<Mode>& rows, const std::vector<Mode>& cols,
                         const Mat& Q, const Weight& w) {
  int r = (int)rows.size(), c = (int)cols.size();
  Mat G = Mat::Zero(2 * r, 2 * c);
  for (int k = 0; k < r; ++k)
    for (int l = 0; l < c; ++l) {
      if (Q(k, l) == 0) continue;
      double p = rows[k].omega, q = cols[l].omega;
      Prod pr = products(w, p, q);
      double f = Q(k, l) / (p * q);
      G(k, l) = f * pr.ss;
      G(k, c + l) = f * pr.sc;
      G(r + k, l) = f * pr.cs;
      G(r + k, c + l) = f * pr.cc;
    }
  return G;
}

// first order generator on (a, a')
Mat wave_generator(const ControlProblem& p, const std::vector<Mode>& ms) {
  int n = (int)ms.size();
  LowerOrder lo = lower_order_matrices(p, ms);
  Mat K = lo.V + lo.W1;
  for (int i = 0; i < n; ++i) K(i, i) += ms[i].lambda;
  Mat A = Mat::Zero(2 * n, 2 * n);
  A.topRightCorner(n, n) = Mat::Identity(n, n);
  A.bottomLeftCorner(n, n) = -K;
  A.bottomRightCorner(n, n) = -lo.W0;
  return A;
}

double fastest(const Mat& A, const std::vector<Mode>& ms) {
  int n = (int)ms.size();
  double lam = 0;
  for (const auto& m : ms) lam = std::max(lam, m.lambda);
  Mat K = -A.bottomLeftCorner(n, n);
  for (int i = 0; i < n; ++i) K(i, i) -= ms[i].lambda;
  double pert = K.cwiseAbs().rowwise().sum().maxCoeff();
  double damp = A.bottomRightCorner(n, n).cwiseAbs().rowwise().sum().maxCoeff();
  return std::sqrt(lam + pert) + damp;
}

// calls fn(t, weight, e^{tA} M) at Gauss-Legendre nodes of [0, T]
void exp_nodes(const Mat& A, const Mat& M, double T, double freq,
               const std::function<void(double, double, const Mat&)>& fn) {
  double len = std::min(T, period(freq));
  int panels = std::max(1, (int)std::ceil(T / len - 1e-12));
  double h = T / panels;
  Nodes base = gl_nodes(0, h, h);
  std::vector<Mat> off;
  for (double t : base.t) off.push_back((t * A).exp());
  Mat step = (h * A).exp();
  Mat cur = M;  // e^{p h A} M
  for (int p = 0; p < panels; ++p) {
    for (std::size_t i = 0; i < base.t.size(); ++i) {
      Mat E = off[i] * cur;
      fn(p * h + base.t[i], base.w[i], E);
    }
    cur = step * cur;
  }
}

Mat wave_gramian_generic(const ControlProblem& p, const std::vector<Mode>& ms, const Mat& Q) {
  int n = (int)ms.size();
  Mat A = wave_generator(p, ms);
  Mat G = Mat::Zero(2 * n, 2 * n);
  // rows of e^{tA} for a: transpose trick, e^{tA^T} [I; 0]
  Mat top = Mat::Zero(2 * n, n);
  top.topRows(n) = Mat::Identity(n, n);
  exp_nodes(A.transpose(), top, p.T, fastest(A, ms), [&](double, double w, const Mat& E) {
    // E = e^{t A^T}[I;0] = Phi^T
    G.noalias() += w * (E * Q * E.transpose());
  });
  return 0.5 * (G + G.transpose());
}

Mat schrodinger_gramian(const ControlProblem& p, const std::vector<Mode>& ms, const Mat& Q) {
  int n = (int)ms.size();
  double T = p.T;
  auto kern = [&](double d) { return d == 0 ? 2 * T : 2 * std::sin(d * T) / d; };
  if (p.free()) {
    Mat G(n, n);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) G(k, l) = Q(k, l) * kern(ms[k].lambda - ms[l].lambda);
    return 0.5 * (G + G.transpose());
  }
  LowerOrder lo = lower_order_matrices(p, ms);
  Mat H = lo.V;
  for (int i = 0; i < n; ++i) H(i, i) += ms[i].lambda;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()));
  const Mat& P = es.eigenvectors();
  const Vec& d = es.eigenvalues();
  Mat R = P.transpose() * Q * P;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) R(k, l) *= kern(d[k] - d[l]);
  Mat G = P * R * P.transpose();
  return 0.5 * (G + G.transpose());
}

void check_schrodinger_terms(const ControlProblem& p) {
  if (p.W0 || p.W1) throw InvalidInput("Schrodinger problems take V only");
}

constexpr int kMaxDense = 1200;

}  // namespace

std::string to_string(Geometry g) { return g == Geometry::Interval ? "interval" : "rectangle"; }

ObsRegion boundary_side(int side, double s0, double s1) {
  ObsRegion o;
  o.boundary = true;
  o.side = side;
  o.s0 = s0;
  o.s1 = s1;
  return o;
}

ObsRegion interior_box(const Vec& lo, const Vec& hi) {
  ObsRegion o;
  o.boundary = false;
  o.lo = lo;
  o.hi = hi;
  return o;
}

ControlProblem interval_problem(double L, double T, ObsRegion obs, int N) {
  ControlProblem p;
  p.geometry = Geometry::Interval;
  p.L = L;
  p.T = T;
  p.obs = std::move(obs);
  p.N = N;
  auto v = problem_violations(p);
  if (!v.empty()) throw InvalidInput("interval problem: " + join(v));
  return p;
}

ControlProblem rectangle_problem(double a, double b, double T, ObsRegion obs, int Nx, int Ny) {
  ControlProblem p;
  p.geometry = Geometry::Rectangle;
  p.a = a;
  p.b = b;
  p.T = T;
  p.obs = std::move(obs);
  p.Nx = Nx;
  p.Ny = Ny;
  auto v = problem_violations(p);
  if (!v.empty()) throw InvalidInput("rectangle problem: " + join(v));
  return p;
}

std::vector<std::string> problem_violations(const ControlProblem& p) {
  std::vector<std::string> v;
  if (!(p.T > 0)) v.push_back("T must be positive");
  const auto& o = p.obs;
  if (p.geometry == Geometry::Interval) {
    if (!(p.L > 0)) v.push_back("L must be positive");
    if (p.N < 1) v.push_back("N must be at least 1");
    if (o.boundary) {
      if (o.side != 0 && o.side != 1) v.push_back("interval side must be 0 or 1");
    } else if (o.lo.size() != 1 || o.hi.size() != 1 || !(o.lo[0] < o.hi[0]) || o.lo[0] < 0 ||
               o.hi[0] > p.L) {
      v.push_back("interior set must be a nonempty subinterval of [0, L]");
    }
  } else {
    if (!(p.a > 0) || !(p.b > 0)) v.push_back("side lengths must be positive");
    if (p.Nx < 1 || p.Ny < 1) v.push_back("Nx and Ny must be at least 1");
    if (o.boundary) {
      if (o.side < 0 || o.side > 3) {
        v.push_back("rectangle side must be in 0..3");
      } else if (o.s1 >= o.s0) {
        double len = o.side < 2 ? p.b : p.a;
        if (!(o.s0 >= 0 && o.s1 <= len && o.s1 > o.s0))
          v.push_back("boundary segment must be a nonempty part of the side");
      }
    } else if (o.lo.size() != 2 || o.hi.size() != 2 || !(o.lo[0] < o.hi[0]) ||
               !(o.lo[1] < o.hi[1]) || o.lo[0] < 0 || o.lo[1] < 0 || o.hi[0] > p.a ||
               o.hi[1] > p.b) {
      v.push_back("interior set must be a nonempty box inside the rectangle");
    }
  }
  return v;
}

std::vector<Mode> modes(const ControlProblem& p) {
  std::vector<Mode> ms;
  if (p.geometry == Geometry::Interval) {
    for (int j = 1; j <= p.N; ++j) {
      double w = j * kPi / p.L;
      ms.push_back({j, 0, w * w, w});
    }
    return ms;
  }
  for (int j = 1; j <= p.Nx; ++j)
    for (int k = 1; k <= p.Ny; ++k) {
      double lam = std::pow(j * kPi / p.a, 2) + std::pow(k * kPi / p.b, 2);
      ms.push_back({j, k, lam, std::sqrt(lam)});
    }
  std::sort(ms.begin(), ms.end(), [](const Mode& x, const Mode& y) {
    if (x.lambda != y.lambda) return x.lambda < y.lambda;
    return x.j != y.j ? x.j < y.j : x.k < y.k;
  });
  return ms;
}

double mode_value(const ControlProblem& p, const Mode& m, const Vec& x) {
  if (p.geometry == Geometry::Interval) return std::sqrt(2 / p.L) * std::sin(m.j * kPi * x[0] / p.L);
  return 2 / std::sqrt(p.a * p.b) * std::sin(m.j * kPi * x[0] / p.a) *
         std::sin(m.k * kPi * x[1] / p.b);
}

Vec mode_grad(const ControlProblem& p, const Mode& m, const Vec& x) {
  if (p.geometry == Geometry::Interval) {
    double f = m.j * kPi / p.L;
    return Vec::Constant(1, std::sqrt(2 / p.L) * f * std::cos(f * x[0]));
  }
  double fx = m.j * kPi / p.a, fy = m.k * kPi / p.b, c = 2 / std::sqrt(p.a * p.b);
  Vec g(2);
  g << c * fx * std::cos(fx * x[0]) * std::sin(fy * x[1]),
      c * fy * std::sin(fx * x[0]) * std::cos(fy * x[1]);
  return g;
}

double mode_normal(const ControlProblem& p, const Mode& m, const Vec& x) {
  Vec g = mode_grad(p, m, x);
  switch (p.obs.side) {
    case 0: return -g[0];
    case 1: return g[0];
    case 2: return -g[1];
    default: return g[1];
  }
}

Vec side_point(const ControlProblem& p, double s) {
  Box bx = region_box(p);
  if (p.geometry == Geometry::Interval) return bx.lo;
  Vec x = bx.lo;
  if (p.obs.side < 2)
    x[1] = s;
  else
    x[0] = s;
  return x;
}

double geometric_length(const ControlProblem& p) {
  Box bx = region_box(p);
  std::vector<Vec> corners;
  if (p.geometry == Geometry::Interval) {
    corners = {Vec::Constant(1, 0.0), Vec::Constant(1, p.L)};
  } else {
    for (double x : {0.0, p.a})
      for (double y : {0.0, p.b}) corners.push_back((Vec(2) << x, y).finished());
  }
  // the distance to a convex set is convex, so its max sits at a corner
  double best = 0;
  for (const auto& c : corners) {
    Vec d = c - c.cwiseMax(bx.lo).cwiseMin(bx.hi);
    best = std::max(best, d.norm());
  }
  return best;
}

Mat observation_matrix(const ControlProblem& p, const std::vector<Mode>& rows,
                       const std::vector<Mode>& cols, bool mass_only) {
  Mat Q(rows.size(), cols.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t l = 0; l < cols.size(); ++l) Q(k, l) = q_entry(p, rows[k], cols[l], mass_only);
  return Q;
}

StatePair zero_state(const ControlProblem& p) {
  std::size_t n = modes(p).size();
  return {CVec::Zero(n), CVec::Zero(n)};
}

StatePair mode_state(const ControlProblem& p, int j, int k, cplx a0, cplx a1) {
  auto ms = modes(p);
  if (p.geometry == Geometry::Interval) k = 0;
  int i = index_of(ms, j, k);
  if (i < 0) {
    std::ostringstream os;
    os << "mode (" << j << ", " << k << ") is outside the truncation";
    throw InvalidInput(os.str());
  }
  StatePair s = zero_state(p);
  s.u0[i] = a0;
  s.u1[i] = a1;
  return s;
}

void check_state(const ControlProblem& p, const StatePair& s) {
  std::size_t n = modes(p).size();
  if ((std::size_t)s.u0.size() != n || (std::size_t)s.u1.size() != n) {
    std::ostringstream os;
    os << "state has " << s.u0.size() << "/" << s.u1.size() << " coefficients, truncation has " << n;
    throw InvalidInput(os.str());
  }
  if (!s.u0.allFinite() || !s.u1.allFinite()) throw InvalidInput("state has non-finite coefficients");
}

double norm_h1_l2(const ControlProblem& p, const StatePair& s) {
  auto ms = modes(p);
  double t = 0;
  for (std::size_t i = 0; i < ms.size(); ++i)
    t += ms[i].lambda * std::norm(s.u0[i]) + std::norm(s.u1[i]);
  return std::sqrt(t);
}

double norm_l2_hm1(const ControlProblem& p, const StatePair& s) {
  auto ms = modes(p);
  double t = 0;
  for (std::size_t i = 0; i < ms.size(); ++i)
    t += std::norm(s.u0[i]) + std::norm(s.u1[i]) / ms[i].lambda;
  return std::sqrt(t);
}

double norm_l2(const CVec& c) { return c.norm(); }

double norm_h2(const ControlProblem& p, const CVec& c) {
  auto ms = modes(p);
  double t = 0;
  for (std::size_t i = 0; i < ms.size(); ++i) t += std::pow(ms[i].lambda, 2) * std::norm(c[i]);
  return std::sqrt(t);
}

double frequency_scale(const ControlProblem& p, const StatePair& s) {
  auto ms = modes(p);
  double mu = 0;
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (s.u0[i] != cplx(0) || s.u1[i] != cplx(0)) mu = std::max(mu, ms[i].omega);
  return mu;
}

double grid_l2(const ControlProblem& p, const CVec& c, int per_axis) {
  auto ms = modes(p);
  if ((std::size_t)c.size() != ms.size()) throw InvalidInput("coefficient count mismatch");
  double total = 0;
  if (p.geometry == Geometry::Interval) {
    double h = p.L / per_axis;
    for (int i = 0; i < per_axis; ++i) {
      Vec x = Vec::Constant(1, (i + 0.5) * h);
      cplx u = 0;
      for (std::size_t k = 0; k < ms.size(); ++k)
        if (c[k] != cplx(0)) u += c[k] * mode_value(p, ms[k], x);
      total += std::norm(u) * h;
    }
    return std::sqrt(total);
  }
  // separable: u(x, y) = sum_j sin_j(x) (sum_k c_jk sin_k(y))
  double hx = p.a / per_axis, hy = p.b / per_axis, nrm = 2 / std::sqrt(p.a * p.b);
  for (int i = 0; i < per_axis; ++i)
    for (int l = 0; l < per_axis; ++l) {
      double x = (i + 0.5) * hx, y = (l + 0.5) * hy;
      cplx u = 0;
      for (std::size_t k = 0; k < ms.size(); ++k)
        if (c[k] != cplx(0))
          u += c[k] * nrm * std::sin(ms[k].j * kPi * x / p.a) * std::sin(ms[k].k * kPi * y / p.b);
      total += std::norm(u) * hx * hy;
    }
  return std::sqrt(total);
}

LowerOrder lower_order_matrices(const ControlProblem& p, const std::vector<Mode>& ms) {
  int n = (int)ms.size();
  LowerOrder lo{Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n)};
  if (p.free()) return lo;
  if (n > kMaxDense) throw InvalidInput("lower order terms need at most 1200 modes");
  std::vector<Vec> pts;
  std::vector<double> wts;
  if (p.geometry == Geometry::Interval) {
    int M = std::max(64, 4 * p.N);
    for (int i = 0; i < M; ++i) {
      pts.push_back(Vec::Constant(1, (i + 0.5) * p.L / M));
      wts.push_back(p.L / M);
    }
  } else {
    int M = std::max(32, 2 * std::max(p.Nx, p.Ny) + 8);
    for (int i = 0; i < M; ++i)
      for (int l = 0; l < M; ++l) {
        pts.push_back((Vec(2) << (i + 0.5) * p.a / M, (l + 0.5) * p.b / M).finished());
        wts.push_back(p.a * p.b / (M * M));
      }
  }
  int P = (int)pts.size(), d = p.dim();
  Mat E(n, P);
  std::vector<Mat> D(d, Mat(n, P));
  for (int q = 0; q < P; ++q)
    for (int k = 0; k < n; ++k) {
      E(k, q) = mode_value(p, ms[k], pts[q]);
      Vec g = mode_grad(p, ms[k], pts[q]);
      for (int c = 0; c < d; ++c) D[c](k, q) = g[c];
    }
  if (p.V) {
    Vec w(P);
    for (int q = 0; q < P; ++q) w[q] = wts[q] * p.V(pts[q]);
    lo.V = E * w.asDiagonal() * E.transpose();
  }
  if (p.W0) {
    Vec w(P);
    for (int q = 0; q < P; ++q) w[q] = wts[q] * p.W0(pts[q]);
    lo.W0 = E * w.asDiagonal() * E.transpose();
  }
  if (p.W1) {
    for (int c = 0; c < d; ++c) {
      Vec w(P);
      for (int q = 0; q < P; ++q) w[q] = wts[q] * p.W1(pts[q])[c];
      lo.W1 += E * w.asDiagonal() * D[c].transpose();
    }
  }
  return lo;
}

// ---- trajectories ----

Trajectory::Trajectory(const ControlProblem& p, const StatePair& data, Equation eq)
    : p_(p), ms_(modes(p)), data_(data), eq_(eq) {
  auto v = problem_violations(p);
  if (!v.empty()) throw InvalidInput("problem: " + join(v));
  check_state(p, data);
  if (p.free()) return;
  if (eq == Equation::Wave) {
    A_ = wave_generator(p, ms_);
    return;
  }
  check_schrodinger_terms(p);
  int n = (int)ms_.size();
  Mat H = lower_order_matrices(p, ms_).V;
  for (int i = 0; i < n; ++i) H(i, i) += ms_[i].lambda;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()));
  P_ = es.eigenvectors();
  d_ = es.eigenvalues();
  w_ = P_.transpose().cast<cplx>() * data.u0;
}

CVec Trajectory::coeffs(double t) const {
  int n = (int)ms_.size();
  if (eq_ == Equation::Schrodinger) {
    if (p_.free()) {
      CVec c(n);
      for (int i = 0; i < n; ++i) c[i] = std::exp(cplx(0, -ms_[i].lambda * t)) * data_.u0[i];
      return c;
    }
    CVec e(n);
    for (int i = 0; i < n; ++i) e[i] = std::exp(cplx(0, -d_[i] * t)) * w_[i];
    return P_.cast<cplx>() * e;
  }
  if (p_.free()) {
    CVec c(n);
    for (int i = 0; i < n; ++i) {
      double w = ms_[i].omega;
      c[i] = std::cos(w * t) * data_.u0[i] + std::sin(w * t) / w * data_.u1[i];
    }
    return c;
  }
  CVec X(2 * n);
  X << data_.u0, data_.u1;
  Mat E = (t * A_).exp();
  return (E.cast<cplx>() * X).head(n);
}

CVec Trajectory::velocity(double t) const {
  if (eq_ != Equation::Wave) throw InvalidInput("velocity is defined for the wave equation");
  int n = (int)ms_.size();
  if (p_.free()) {
    CVec c(n);
    for (int i = 0; i < n; ++i) {
      double w = ms_[i].omega;
      c[i] = -w * std::sin(w * t) * data_.u0[i] + std::cos(w * t) * data_.u1[i];
    }
    return c;
  }
  CVec X(2 * n);
  X << data_.u0, data_.u1;
  Mat E = (t * A_).exp();
  return (E.cast<cplx>() * X).tail(n);
}

cplx Trajectory::value(double t, const Vec& x) const {
  CVec c = coeffs(t);
  cplx u = 0;
  for (std::size_t i = 0; i < ms_.size(); ++i)
    if (c[i] != cplx(0)) u += c[i] * mode_value(p_, ms_[i], x);
  return u;
}

double Trajectory::energy(double t) const {
  CVec c = coeffs(t);
  if (eq_ == Equation::Schrodinger) return c.squaredNorm();
  CVec v = velocity(t);
  double e = v.squaredNorm();
  for (std::size_t i = 0; i < ms_.size(); ++i) e += ms_[i].lambda * std::norm(c[i]);
  return e;
}

Trajectory solve(const ControlProblem& p, const StatePair& data, Equation eq) {
  return Trajectory(p, data, eq);
}

double observe(const Trajectory& tr) {
  const auto& p = tr.problem();
  const auto& ms = tr.basis();
  bool wave = tr.equation() == Equation::Wave;
  double t0 = wave ? 0 : -p.T, t1 = p.T;
  double total = 0;
  if (p.free()) {
    // only active modes move
    CVec c0 = tr.coeffs(0), v0 = wave ? tr.velocity(0) : CVec::Zero(ms.size());
    std::vector<int> act;
    double fmax = 0;
    for (std::size_t i = 0; i < ms.size(); ++i)
      if (c0[i] != cplx(0) || v0[i] != cplx(0)) {
        act.push_back((int)i);
        fmax = std::max(fmax, wave ? ms[i].omega : ms[i].lambda);
      }
    if (act.empty()) return 0;
    auto sub = subset(ms, act);
    Mat Q = observation_matrix(p, sub, sub);
    Nodes nd = gl_nodes(t0, t1, std::min(t1 - t0, period(fmax)));
    CVec a(act.size());
    for (std::size_t q = 0; q < nd.t.size(); ++q) {
      double t = nd.t[q];
      for (std::size_t i = 0; i < act.size(); ++i) {
        const Mode& m = ms[act[i]];
        if (wave)
          a[i] = std::cos(m.omega * t) * c0[act[i]] + std::sin(m.omega * t) / m.omega * v0[act[i]];
        else
          a[i] = std::exp(cplx(0, -m.lambda * t)) * c0[act[i]];
      }
      total += nd.w[q] * std::real(a.dot(Q.cast<cplx>() * a));
    }
    return std::sqrt(std::max(0.0, total));
  }
  Mat Q = observation_matrix(p, ms, ms);
  int n = (int)ms.size();
  if (wave) {
    Mat A = wave_generator(p, ms);
    CVec X(2 * n);
    X << tr.coeffs(0), tr.velocity(0);
    Mat Xr(2 * n, 2);
    Xr.col(0) = X.real();
    Xr.col(1) = X.imag();
    exp_nodes(A, Xr, p.T, fastest(A, ms), [&](double, double w, const Mat& E) {
      for (int c = 0; c < 2; ++c) {
        Vec a = E.col(c).head(n);
        total += w * a.dot(Q * a);
      }
    });
    return std::sqrt(std::max(0.0, total));
  }
  double lmax = 0;
  for (const auto& m : ms) lmax = std::max(lmax, m.lambda);
  Nodes nd = gl_nodes(t0, t1, std::min(t1 - t0, period(lmax * 1.1 + 1)));
  for (std::size_t q = 0; q < nd.t.size(); ++q) {
    CVec a = tr.coeffs(nd.t[q]);
    total += nd.w[q] * std::real(a.dot(Q.cast<cplx>() * a));
  }
  return std::sqrt(std::max(0.0, total));
}

Mat observability_gramian(const ControlProblem& p, const std::vector<Mode>& ms, Equation eq) {
  Mat Q = observation_matrix(p, ms, ms);
  if (eq == Equation::Schrodinger) {
    check_schrodinger_terms(p);
    return schrodinger_gramian(p, ms, Q);
  }
  if (p.free()) return wave_gramian_free(ms, Q, p.T);
  return wave_gramian_generic(p, ms, Q);
}

// ---- filtered stability ----

std::vector<double> distinct_frequencies(const ControlProblem& p, int count) {
  std::vector<double> out;
  for (const auto& m : modes(p)) {
    if ((int)out.size() >= count) break;
    if (out.empty() || m.omega > out.back() * (1 + 1e-12)) out.push_back(m.omega);
  }
  return out;
}

StabilityReport filtered_stability(const ControlProblem& p, const std::vector<double>& mus,
                                   Equation eq, bool allow_short_time) {
  auto v = problem_violations(p);
  if (!v.empty()) throw InvalidInput("problem: " + join(v));
  StabilityReport rep;
  rep.equation = eq;
  rep.T = p.T;
  rep.length = geometric_length(p);
  if (eq == Equation::Wave && !allow_short_time && !(p.T > 2 * rep.length)) {
    std::ostringstream os;
    os << "wave observability needs T > 2 L(M, omega) = " << 2 * rep.length << ", got T = " << p.T;
    throw InvalidInput(os.str());
  }
  if (mus.empty()) throw InvalidInput("empty mu list");
  for (double m : mus)
    if (!(m > 0)) throw InvalidInput("mu values must be positive");
  double mu_max = *std::max_element(mus.begin(), mus.end());
  auto all = modes(p);
  std::vector<Mode> ms;
  if (p.free()) {
    for (const auto& m : all)
      if (m.omega <= mu_max * (1 + 1e-12)) ms.push_back(m);
  } else {
    if ((int)all.size() > kMaxDense) throw InvalidInput("lower order terms need at most 1200 modes");
    ms = all;
  }
  int n = (int)ms.size();
  bool wave = eq == Equation::Wave;
  Mat G = n ? observability_gramian(p, ms, eq) : Mat();

  rep.rows.resize(mus.size());
  parallel_for(mus.size(), [&](std::size_t r) {
    StabilityRow row;
    row.mu = mus[r];
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (ms[i].omega <= row.mu * (1 + 1e-12)) idx.push_back(i);
    row.modes = (int)idx.size();
    if (idx.empty()) {
      rep.rows[r] = row;
      return;
    }
    int m = (int)idx.size(), dim = wave ? 2 * m : m;
    std::vector<int> full;
    for (int i : idx) full.push_back(i);
    if (wave)
      for (int i : idx) full.push_back(n + i);
    Mat Gs(dim, dim);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) Gs(a, b) = G(full[a], full[b]);
    Vec weak(dim), strong(dim);
    for (int i = 0; i < m; ++i) {
      double lam = ms[idx[i]].lambda;
      if (wave) {
        weak[i] = 1;
        weak[m + i] = 1 / lam;
        strong[i] = lam;
        strong[m + i] = 1;
      } else {
        weak[i] = 1;
        strong[i] = lam * lam;
      }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(Gs, Mat(weak.asDiagonal()));
    Vec th = ges.eigenvalues();
    double tmax = std::max(th.maxCoeff(), 0.0), tmin = th.minCoeff();
    if (!(tmin > 1e-13 * tmax)) {
      row.shift = 1e-13 * std::max(tmax, 1e-300) - std::min(tmin, 0.0);
    }
    Vec x = ges.eigenvectors().col(0);
    row.weak = std::sqrt(x.dot(weak.asDiagonal() * x));
    x /= row.weak;
    row.weak = 1;
    row.obs = std::sqrt(std::max(0.0, x.dot(Gs * x)) + row.shift);
    row.strong = std::sqrt(x.dot(strong.asDiagonal() * x));
    row.cost = 1 / std::sqrt(std::max(tmin, 0.0) + row.shift);
    rep.rows[r] = row;
  });

  std::vector<double> xs, ys;
  for (const auto& row : rep.rows)
    if (row.cost > 0) {
      xs.push_back(row.mu);
      ys.push_back(row.cost);
    }
  if (xs.size() >= 2) {
    rep.fit = fit_log_linear(xs, ys);
  } else if (xs.size() == 1) {
    rep.fit.intercept = std::log(ys[0]);
    rep.fit.used = 1;
  }
  rep.C_hat = std::exp(rep.fit.intercept);
  rep.kappa_hat = rep.fit.slope;
  rep.violations = 0;
  for (auto& row : rep.rows) {
    if (row.cost == 0) continue;
    row.bound = rep.C_hat * std::exp(rep.kappa_hat * row.mu) * row.obs + row.strong / row.mu;
    row.holds = row.weak <= row.bound * (1 + 1e-10);
    if (!row.holds) ++rep.violations;
  }
  rep.bound_holds = rep.violations == 0;
  return rep;
}

// ---- control ----

double ControlResult::penalized(const Vec& psi) const {
  Vec z = b + Lambda * psi;
  return 0.5 * psi.dot(Lambda * psi) + z.squaredNorm() / (2 * alpha);
}

namespace {

// conjugate gradients on (L + alpha I) x = rhs from x; returns iterations
int cg(const Mat& L, double alpha, const Vec& rhs, Vec& x, double tol, int maxit) {
  Vec r = rhs - (L * x + alpha * x);
  Vec d = r;
  double rr = r.squaredNorm(), stop = tol * tol * rhs.squaredNorm();
  int it = 0;
  while (rr > stop && it < maxit) {
    Vec q = L * d + alpha * d;
    double s = rr / d.dot(q);
    x += s * d;
    r -= s * q;
    double nr = r.squaredNorm();
    d = r + (nr / rr) * d;
    rr = nr;
    ++it;
  }
  return it;
}

// modes coupled to the seeds through nonzero entries of Q
std::vector<int> component(const ControlProblem& p, const std::vector<Mode>& ms,
                           const std::vector<int>& seeds, bool mass_only) {
  std::vector<char> in(ms.size(), 0);
  std::vector<int> queue = seeds, out;
  for (int s : seeds) in[s] = 1;
  double scale = 0;
  for (int s : seeds) scale = std::max(scale, std::abs(q_entry(p, ms[s], ms[s], mass_only)));
  while (!queue.empty()) {
    int k = queue.back();
    queue.pop_back();
    out.push_back(k);
    for (std::size_t l = 0; l < ms.size(); ++l) {
      if (in[l]) continue;
      double q = q_entry(p, ms[k], ms[l], mass_only);
      if (std::abs(q) > 1e-14 * std::max(scale, 1.0)) {
        in[l] = 1;
        queue.push_back((int)l);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double control_value(const ControlProblem& p, const ControlResult& r, double t, const Vec& x) {
  int m = (int)r.basis.size();
  if (m == 0) return 0;
  double tau = p.T - t, eta = std::pow(std::sin(kPi * t / p.T), 2);
  Vec psi(m);
  if (p.free()) {
    for (int l = 0; l < m; ++l) {
      double w = r.basis[l].omega;
      psi[l] = (std::sin(w * tau) * r.phi[l] + std::cos(w * tau) * r.phi[m + l]) / w;
    }
  } else {
    Mat A = wave_generator(p, r.basis);
    Mat V = (tau * A).exp().rightCols(m);  // e^{tau A}[0; I]
    for (int i = 0; i < m; ++i) V.row(m + i) /= r.basis[i].omega;
    psi = V.transpose() * r.phi;
  }
  double g = 0;
  for (int l = 0; l < m; ++l)
    g += psi[l] * (p.obs.boundary ? -mode_normal(p, r.basis[l], x) : mode_value(p, r.basis[l], x));
  return eta * g;
}

ControlResult hum_control(const ControlProblem& p, const StatePair& data, double eps) {
  auto v = problem_violations(p);
  if (!v.empty()) throw InvalidInput("problem: " + join(v));
  if (!(eps > 0 && eps < 1)) throw InvalidInput("eps must lie in (0, 1)");
  check_state(p, data);
  if (data.u0.imag().norm() > 0 || data.u1.imag().norm() > 0)
    throw InvalidInput("control data must be real");
  ControlResult res;
  res.eps = eps;
  res.data_norm = norm_h1_l2(p, data);
  res.target = eps * res.data_norm;
  auto ms = modes(p);
  bool mass = !p.obs.boundary;
  std::vector<int> seeds;
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (data.u0[i] != cplx(0) || data.u1[i] != cplx(0)) seeds.push_back((int)i);
  if (seeds.empty()) return res;  // nothing to steer

  std::vector<int> base;
  if (p.free()) {
    base = component(p, ms, seeds, mass);
  } else {
    base.resize(ms.size());
    std::iota(base.begin(), base.end(), 0);
  }
  if ((int)base.size() > kMaxDense) throw InvalidInput("coupled mode block exceeds 1200 modes");
  res.basis = subset(ms, base);
  const auto& bm = res.basis;
  int m = (int)bm.size();
  double T = p.T;

  // free terminal state in z = (a, a'/omega)
  res.b.resize(2 * m);
  Mat ext;  // cross block from the extension band
  if (p.free()) {
    for (int i = 0; i < m; ++i) {
      double w = bm[i].omega, c = data.u0[base[i]].real(), d = data.u1[base[i]].real();
      res.b[i] = c * std::cos(w * T) + d * std::sin(w * T) / w;
      res.b[m + i] = (-c * w * std::sin(w * T) + d * std::cos(w * T)) / w;
    }
    Mat Q = observation_matrix(p, bm, bm, mass);
    res.Lambda = control_gramian_free(bm, bm, Q, eta_weight(T));
    res.Lambda_cost = control_gramian_free(bm, bm, Q, eta2_weight(T));
    // modes of the doubled truncation outside this one, coupled to the block
    ControlProblem p2 = p;
    p2.N *= 2;
    p2.Nx *= 2;
    p2.Ny *= 2;
    std::vector<Mode> em;
    for (const auto& mo : modes(p2)) {
      bool inside = p.geometry == Geometry::Interval ? mo.j <= p.N : (mo.j <= p.Nx && mo.k <= p.Ny);
      if (inside) continue;
      for (const auto& b2 : bm)
        if (q_entry(p, mo, b2, mass) != 0) {
          em.push_back(mo);
          break;
        }
    }
    if (!em.empty()) ext = control_gramian_free(em, bm, observation_matrix(p, em, bm, mass), eta_weight(T));
  } else {
    Mat A = wave_generator(p, bm);
    Mat E = (T * A).exp();
    Vec X(2 * m);
    X << data.u0.real(), data.u1.real();
    res.b = E * X;
    for (int i = 0; i < m; ++i) res.b[m + i] /= bm[i].omega;
    Mat Q = observation_matrix(p, bm, bm, mass);
    res.Lambda = Mat::Zero(2 * m, 2 * m);
    res.Lambda_cost = Mat::Zero(2 * m, 2 * m);
    Mat cols = Mat::Zero(2 * m, m);
    cols.bottomRows(m) = Mat::Identity(m, m);
    exp_nodes(A, cols, T, fastest(A, bm), [&](double tau, double w, const Mat& Ec) {
      Mat Vz = Ec;
      for (int i = 0; i < m; ++i) Vz.row(m + i) /= bm[i].omega;
      Mat K = Vz * Q * Vz.transpose();
      double e = std::pow(std::sin(kPi * tau / T), 2);
      res.Lambda += w * e * K;
      res.Lambda_cost += w * e * e * K;
    });
    res.Lambda = 0.5 * (res.Lambda + res.Lambda.transpose());
    res.Lambda_cost = 0.5 * (res.Lambda_cost + res.Lambda_cost.transpose());
    res.truncation = std::numeric_limits<double>::quiet_NaN();
    res.truncation_ok = false;
  }

  double alpha0 = std::max(res.Lambda.diagonal().maxCoeff(), 1e-300);
  Vec phi = Vec::Zero(2 * m), rhs = -res.b;
  double best = 1e300;
  int dim = 2 * m;
  for (double alpha = alpha0; alpha > alpha0 * 1e-40; alpha *= 0.25) {
    ++res.sweeps;
    res.iterations += cg(res.Lambda, alpha, rhs, phi, 1e-12, 20 * dim + 100);
    Mat M = res.Lambda;
    M.diagonal().array() += alpha;
    double mnorm = M.cwiseAbs().colwise().sum().maxCoeff();
    // normwise backward error; |b| alone hits rounding once |phi| is large
    auto backward = [&] { return (M * phi - rhs).norm() / (mnorm * phi.norm() + rhs.norm()); };
    double resid = backward();
    bool fallback = false;
    if (!(resid < 1e-12)) {
      auto f = M.ldlt();
      phi = f.solve(rhs);
      for (int it = 0; it < 2; ++it) phi += f.solve(rhs - M * phi);
      resid = backward();
      fallback = true;
    }
    Vec z = res.b + res.Lambda * phi;
    double ext2 = ext.size() ? (ext * phi).squaredNorm() : 0;
    double dev = std::sqrt(z.squaredNorm() + ext2);
    best = std::min(best, dev);
    if (dev <= res.target) {
      res.alpha = alpha;
      res.phi = phi;
      res.cg_residual = resid;
      res.cg_fallback = fallback;
      res.deviation = dev;
      if (p.free()) {
        res.truncation = std::sqrt(ext2) / res.data_norm;
        res.truncation_ok = res.truncation < eps / 10;
      }
      res.cost = std::sqrt(std::max(0.0, phi.dot(res.Lambda_cost * phi)));
      return res;
    }
  }
  std::ostringstream os;
  os << "alpha sweep exhausted at eps = " << eps << ": best deviation " << best << " against target "
     << res.target;
  throw CheckFailed(os.str(), {eps, best, res.target});
}

CostSweep control_cost_sweep(const ControlProblem& p, const StatePair& data,
                             const std::vector<double>& eps) {
  CostSweep sw;
  sw.runs.resize(eps.size());
  std::vector<std::string> errs(eps.size());
  parallel_for(eps.size(), [&](std::size_t i) {
    try {
      sw.runs[i] = hum_control(p, data, eps[i]);
    } catch (const std::exception& e) {
      errs[i] = e.what();
    }
  });
  for (const auto& e : errs)
    if (!e.empty()) throw CheckFailed("control sweep: " + e);
  std::vector<std::size_t> ord(eps.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](auto x, auto y) { return eps[x] > eps[y]; });
  std::vector<double> xs, ys;
  sw.monotone = true;
  for (std::size_t r = 0; r < ord.size(); ++r) {
    const auto& run = sw.runs[ord[r]];
    xs.push_back(1 / run.eps);
    ys.push_back(run.cost);
    if (r && run.cost < sw.runs[ord[r - 1]].cost) sw.monotone = false;
  }
  bool positive = std::all_of(ys.begin(), ys.end(), [](double c) { return c > 0; });
  if (positive && xs.size() >= 2) sw.fit = fit_log_linear(xs, ys);
  if (!ys.empty() && ys.front() > 0) sw.ratio = ys.back() / ys.front();
  return sw;
}

// ---- log stability ----

std::pair<double, double> LogStability::apply(double a, double b, double c) const {
  double first = D1 * c / std::pow(std::log(c / b + 1), alpha);
  double second = std::exp(D2 * std::pow(c / a, 1 / alpha)) * b;
  return {first, second};
}

LogStability log_stability_constants(double C1, double C2, double alpha, double mu0) {
  if (!(C1 > 0 && C2 > 0 && alpha > 0 && mu0 > 0))
    throw InvalidInput("log stability constants need positive inputs");
  LogStability ls{C1, C2, alpha, mu0};
  auto mu = [&](double x) { return std::log(1 / x + 1) / (2 * C1); };
  auto f = [&](double lx) {
    double x = std::exp(lx);
    return std::sqrt((1 + x) * x) * std::pow(mu(x), alpha);
  };
  // grid in log x, then Brent around the best cell
  double hi = std::log(C2), lo = hi - 80;
  int n = 4000;
  int bi = n;
  double bv = f(hi);
  for (int i = 0; i < n; ++i) {
    double v = f(lo + (hi - lo) * i / n);
    if (v > bv) {
      bv = v;
      bi = i;
    }
  }
  double h = (hi - lo) / n;
  double a = std::max(lo, lo + (bi - 1) * h), b = std::min(hi, lo + (bi + 1) * h);
  auto r = boost::math::tools::brent_find_minima([&](double t) { return -f(t); }, a, b, 52);
  double lx = -r.second > bv ? r.first : lo + bi * h;
  ls.x_star = std::exp(lx);
  ls.C3 = std::max(bv, -r.second);
  ls.D1 = std::pow(2 * C1, alpha) * std::max(ls.C3 + 1, std::pow(mu0, alpha));
  ls.D2 = std::pow(ls.D1, 1 / alpha);
  return ls;
}

HypothesisCheck validate_log_stability(const LogStability& ls, long count, std::uint64_t seed,
                                       int mu_grid) {
  HypothesisCheck hc;
  std::mt19937_64 rng(split_seed(seed, 0));
  std::uniform_real_distribution<double> U(0, 1);
  double span = 60 / ls.C1 + 10 * ls.mu0;
  for (long i = 0; i < count; ++i) {
    double c = std::pow(10.0, -3 + 6 * U(rng));
    double x = ls.C2 * std::pow(10.0, -14 * U(rng));  // b / c
    // largest y = a / c allowed by the hypotheses on the mu grid
    double ymax = 1;
    for (int g = 0; g < mu_grid; ++g) {
      double mu = ls.mu0 + span * std::pow((double)g / (mu_grid - 1), 2);
      ymax = std::min(ymax, std::exp(ls.C1 * mu) * x + std::pow(mu, -ls.alpha));
    }
    double y = ymax * std::pow(U(rng), 0.125);
    if (!(y > 0)) continue;
    double a = y * c, b = x * c;
    ++hc.triples;
    double bound_a = ls.D1 * c / std::pow(std::log(c / b + 1), ls.alpha);
    double ra = a / bound_a;
    // second bound in log form: log(c / b) <= D2 (c / a)^{1/alpha}
    double rc = std::log(c / b) / (ls.D2 * std::pow(c / a, 1 / ls.alpha));
    hc.worst_a = std::max(hc.worst_a, ra);
    hc.worst_c = std::max(hc.worst_c, rc);
    if (ra > 1 + 1e-12) ++hc.violations_a;
    if (rc > 1 + 1e-12) ++hc.violations_c;
  }
  return hc;
}

}  // namespace ulab
