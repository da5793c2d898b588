#include "ulab/foliation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace ulab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string fmt(const Vec& x) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

std::vector<double> to_std(const Vec& x) { return {x.data(), x.data() + x.size()}; }

// all points of the regular grid on [lo, hi] with m points per axis
template <class Fn>
void for_grid(const Vec& lo, const Vec& hi, int m, Fn&& fn) {
  const int d = static_cast<int>(lo.size());
  std::vector<int> idx(d, 0);
  Vec x(d);
  while (true) {
    for (int a = 0; a < d; ++a)
      x[a] = m == 1 ? 0.5 * (lo[a] + hi[a]) : lo[a] + (hi[a] - lo[a]) * idx[a] / (m - 1.0);
    fn(x);
    int a = 0;
    while (a < d && ++idx[a] == m) idx[a++] = 0;
    if (a == d) break;
  }
}

// diagonal of one grid cell
double cell_diag(const Vec& lo, const Vec& hi, int m) {
  return (hi - lo).norm() / (m > 1 ? m - 1.0 : 1.0);
}

double smoothstep(double u) {
  if (u <= 0) return 0;
  if (u >= 1) return 1;
  return u * u * (3 - 2 * u);
}

}  // namespace

// ---- profiles ----

Profile cos_profile() {
  Profile p;
  p.name = "cos";
  const double h = std::numbers::pi / 2;
  p.psi = [h](double s) { return std::cos(h * s); };
  p.dpsi = [h](double s) { return -h * std::sin(h * s); };
  p.d2psi0 = -h * h;
  p.slope = h;
  return p;
}

Profile ramp_profile(double alpha) {
  if (!(alpha > 1)) throw InvalidInput("ramp profile needs alpha > 1, got " + fmt(alpha));
  const double w = 2 * (1 - 1 / alpha);
  Profile p;
  p.name = "ramp";
  p.psi = [alpha, w](double s) {
    const double a = std::abs(s);
    if (a >= w) return 1 - alpha * (a - w / 2);
    const double u = a / w;
    return 1 - alpha * w * (u * u * u - u * u * u * u / 2);
  };
  p.dpsi = [alpha, w](double s) {
    const double sg = s < 0 ? -1.0 : 1.0;
    return -alpha * sg * smoothstep(std::abs(s) / w);
  };
  p.d2psi0 = 0;
  p.slope = alpha;
  return p;
}

std::vector<std::string> profile_violations(const Profile& p, double alpha, int samples) {
  std::vector<std::string> out;
  const double tol = 1e-12;
  if (std::abs(p.psi(0) - 1) > tol) out.push_back("psi(0) = " + fmt(p.psi(0)) + " != 1");
  for (double e : {-1.0, 1.0})
    if (std::abs(p.psi(e)) > tol) out.push_back("psi(" + fmt(e) + ") = " + fmt(p.psi(e)) + " != 0");
  double worst_odd = 0, worst_neg = 0, worst_slope = 0;
  double s_odd = 0, s_neg = 0, s_slope = 0;
  for (int i = 0; i < samples; ++i) {
    const double s = -1 + 2.0 * i / (samples - 1);
    const double odd = std::abs(p.psi(s) - p.psi(-s));
    if (odd > worst_odd) worst_odd = odd, s_odd = s;
    if (-p.psi(s) > worst_neg) worst_neg = -p.psi(s), s_neg = s;
    const double d = std::abs(p.dpsi(s));
    if (d > worst_slope) worst_slope = d, s_slope = s;
  }
  if (worst_odd > tol) out.push_back("psi not even at s = " + fmt(s_odd));
  if (worst_neg > tol) out.push_back("psi < 0 at s = " + fmt(s_neg));
  if (worst_slope > alpha * (1 + 1e-12))
    out.push_back("|psi'(" + fmt(s_slope) + ")| = " + fmt(worst_slope) + " > alpha = " + fmt(alpha));
  return out;
}

// ---- foliations ----

double GraphFoliation::phi(const Vec& x, double eps) const {
  return G(x.head(dim), eps) - x[dim];
}

GraphFoliation wave_foliation(double l0, double t0, double b, double alpha, const Profile& psi) {
  std::vector<std::string> bad;
  if (!(l0 > 0)) bad.push_back("l0 = " + fmt(l0) + " <= 0");
  if (!(t0 > 0)) bad.push_back("t0 = " + fmt(t0) + " <= 0");
  if (!(b > 0)) bad.push_back("b = " + fmt(b) + " <= 0");
  if (!(alpha > 1)) bad.push_back("alpha = " + fmt(alpha) + " <= 1");
  if (!(l0 * alpha < t0)) bad.push_back("l0 = " + fmt(l0) + " >= t0/alpha = " + fmt(t0 / alpha));
  for (auto& v : profile_violations(psi, alpha)) bad.push_back(v);
  if (!bad.empty()) {
    std::string msg = "wave_foliation rejected:";
    for (auto& v : bad) msg += " " + v + ";";
    throw InvalidInput(msg);
  }
  GraphFoliation f;
  f.kind = "wave";
  f.dim = 2;
  f.lo = Vec::Zero(2);
  f.hi = Vec::Zero(2);
  f.lo << -t0, -b;
  f.hi << t0, b;
  f.l0 = l0, f.t0 = t0, f.b = b, f.alpha = alpha;
  f.profile = psi;
  f.C_G = l0;
  auto s_of = [t0, b](const Vec& x) { return std::hypot(x[0] / t0, x[1] / b); };
  f.level = [s_of](const Vec& x) { return s_of(x) - 1; };
  f.G = [s_of, l0, psi](const Vec& x, double eps) { return eps * l0 * psi.psi(s_of(x)); };
  f.grad = [s_of, l0, t0, b, psi](const Vec& x, double eps) {
    const double s = s_of(x);
    const double q = s < 1e-12 ? psi.d2psi0 : psi.dpsi(s) / s;  // psi'(s)/s
    Vec g(2);
    g << eps * l0 * q * x[0] / (t0 * t0), eps * l0 * q * x[1] / (b * b);
    return g;
  };
  return f;
}

GraphFoliation flat_foliation(const Vec& lo, const Vec& hi) {
  if (lo.size() == 0 || lo.size() != hi.size() || ((hi - lo).array() <= 0).any())
    throw InvalidInput("flat_foliation: bad box");
  GraphFoliation f;
  f.kind = "flat";
  f.dim = static_cast<int>(lo.size());
  f.lo = lo, f.hi = hi;
  f.C_G = 1;
  f.level = [lo, hi](const Vec& x) {
    return std::max((lo - x).maxCoeff(), (x - hi).maxCoeff());
  };
  f.G = [](const Vec&, double eps) { return eps; };
  const int d = f.dim;
  f.grad = [d](const Vec&, double) { return Vec::Zero(d).eval(); };
  return f;
}

GraphFoliation with_width(const GraphFoliation& f, double b) {
  if (f.kind != "wave") throw InvalidInput("with_width needs a wave foliation");
  return wave_foliation(f.l0, f.t0, b, f.alpha, f.profile);
}

std::vector<Vec> domain_samples(const GraphFoliation& f, int per_axis) {
  std::vector<Vec> out;
  for_grid(f.lo, f.hi, per_axis, [&](const Vec& x) {
    if (f.level(x) <= 1e-12) out.push_back(x);
  });
  return out;
}

std::vector<std::string> foliation_violations(const GraphFoliation& f, int per_axis) {
  std::vector<std::string> out;
  const auto pts = domain_samples(f, per_axis);
  const std::vector<double> eps = {0.0, 0.1, 0.25, 0.5, 0.75, 1.0};
  const double tol = 1e-12;
  for (const auto& x : pts) {
    if (std::abs(f.G(x, 0)) > tol) {
      out.push_back("G(x', 0) != 0 at " + fmt(x));
      break;
    }
  }
  for (const auto& x : pts) {
    const bool interior = f.level(x) < -1e-9;
    bool bad = false;
    for (std::size_t k = 1; k < eps.size(); ++k) {
      const double a = f.G(x, eps[k - 1]), b = f.G(x, eps[k]);
      if (interior && !(b > a)) {
        out.push_back("G not increasing in eps at " + fmt(x));
        bad = true;
        break;
      }
      if (b < -tol) {
        out.push_back("G < 0 inside D at " + fmt(x));
        bad = true;
        break;
      }
    }
    if (bad) break;
  }
  // boundary: G = 0 on the boundary and negative just outside
  const int m = 256;
  const Vec c = 0.5 * (f.lo + f.hi);
  for (int k = 0; k < m && f.dim <= 2; ++k) {
    Vec dir(f.dim);
    if (f.dim == 1)
      dir[0] = k % 2 ? 1 : -1;
    else
      dir << std::cos(2 * std::numbers::pi * k / m), std::sin(2 * std::numbers::pi * k / m);
    double a = 0, b = 1;
    while (f.level(c + b * dir.cwiseProduct(f.hi - c)) <= 0) b *= 2;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (a + b);
      (f.level(c + mid * dir.cwiseProduct(f.hi - c)) <= 0 ? a : b) = mid;
    }
    const Vec xb = c + a * dir.cwiseProduct(f.hi - c);
    const double gb = f.G(xb, 1);
    if (std::abs(gb) > 1e-9) {
      out.push_back("G(., 1) = " + fmt(gb) + " != 0 on the boundary at " + fmt(xb));
      break;
    }
  }
  return out;
}

// ---- noncharacteristic slack ----

std::string to_string(Equation e) { return e == Equation::Wave ? "wave" : "schrodinger"; }

Metric flat_metric() {
  return [](double, double) { return Mat::Identity(2, 2).eval(); };
}

NoncharReport noncharacteristic_slack(const GraphFoliation& f, const Metric& m, Equation eq,
                                      const NoncharGrid& grid) {
  if (f.dim != 2) throw InvalidInput("noncharacteristic check needs base variables (t, w)");
  if (grid.eps < 2 || grid.s < 2 || grid.theta < 1 || grid.xn < 1)
    throw InvalidInput("noncharacteristic grid too small");
  // base points: polar grid for the ellipse, plain samples otherwise
  std::vector<Vec> base;
  if (f.kind == "wave") {
    for (int j = 0; j < grid.s; ++j) {
      const double s = double(j) / (grid.s - 1);
      for (int k = 0; k < (j == 0 ? 1 : grid.theta); ++k) {
        const double th = 2 * std::numbers::pi * k / grid.theta;
        Vec x(2);
        x << f.t0 * s * std::cos(th), f.b * s * std::sin(th);
        base.push_back(x);
      }
    }
  } else {
    base = domain_samples(f, grid.s);
  }
  const double xn_top = f.C_G * (1 + f.eta);
  NoncharReport rep;
  rep.equation = eq;
  rep.b = f.b;
  rep.min_slack = kInf;
  for (int ie = 0; ie < grid.eps; ++ie) {
    const double eps = double(ie) / (grid.eps - 1);
    for (const auto& x : base) {
      const Vec g = f.grad(x, eps);
      for (int l = 0; l < grid.xn; ++l) {
        const double xn = grid.xn == 1 ? 0 : xn_top * l / (grid.xn - 1);
        const Mat M = m(x[1], xn);
        Eigen::Vector2d xi(g[1], -1);
        const double q = xi.dot(M * xi);
        const double slack = eq == Equation::Wave ? q - g[0] * g[0] : q;
        ++rep.samples;
        if (slack < rep.min_slack) {
          rep.min_slack = slack;
          rep.worst = {eps, x[0], x[1], xn};
        }
      }
    }
  }
  // positive definiteness of the metric on the sampled (w, x_n)
  for (const auto& x : base) {
    for (int l = 0; l < grid.xn; ++l) {
      const double xn = grid.xn == 1 ? 0 : xn_top * l / (grid.xn - 1);
      Eigen::LLT<Mat> llt(m(x[1], xn));
      if (llt.info() != Eigen::Success)
        throw InvalidInput("metric not positive definite at w = " + fmt(x[1]) + ", x_n = " + fmt(xn));
    }
  }
  return rep;
}

NoncharReport check_noncharacteristic(const GraphFoliation& f, const Metric& m, Equation eq,
                                      const NoncharGrid& grid, double required, double b_min) {
  if (required < 0) required = eq == Equation::Wave ? 0.1 : 0.5;
  GraphFoliation cur = f;
  int halvings = 0;
  while (true) {
    NoncharReport rep = noncharacteristic_slack(cur, m, eq, grid);
    rep.required = required;
    rep.halvings = halvings;
    if (rep.min_slack >= required) {
      rep.pass = true;
      return rep;
    }
    if (cur.kind != "wave" || cur.b / 2 < b_min) {
      std::ostringstream os;
      os << to_string(eq) << " slack " << rep.min_slack << " < " << required << " at b = " << cur.b
         << "; worst (eps, t, w, x_n) = (" << rep.worst[0] << ", " << rep.worst[1] << ", "
         << rep.worst[2] << ", " << rep.worst[3] << ")";
      throw CheckFailed(os.str(), rep.worst);
    }
    cur = with_width(cur, cur.b / 2);
    ++halvings;
  }
}

// ---- open sets ----

RadiusOracle constant_radii(double r, double R, double rho) {
  return [=](const Vec&, double) { return Radii{r, R, rho}; };
}

OpenSet ball_set(const Vec& c, double r, std::string name) {
  return {std::move(name), [c, r](const Vec& x) { return r - (x - c).norm(); }};
}

OpenSet below_set(double a, int n, std::string name) {
  return {std::move(name), [a, n](const Vec& x) { return a - x[n - 1]; }};
}

OpenSet union_set(std::vector<OpenSet> parts, std::string name) {
  return {std::move(name), [parts = std::move(parts)](const Vec& x) {
            double d = -kInf;
            for (const auto& p : parts) d = std::max(d, p.depth(x));
            return d;
          }};
}

// ---- interval ordering ----

IntervalOrder order_intervals(std::vector<EpsInterval> iv, double eps0) {
  for (const auto& v : iv)
    if (!(v.g > 0)) throw InvalidInput("interval with g <= 0 at eps = " + fmt(v.eps));
  std::sort(iv.begin(), iv.end(), [](const EpsInterval& a, const EpsInterval& b) {
    if (a.lo() != b.lo()) return a.lo() < b.lo();
    return a.hi() > b.hi();
  });
  IntervalOrder out;
  double reach = eps0;
  for (const auto& v : iv) {
    if (v.hi() <= reach) continue;  // contained in what is already there
    out.ordered.push_back(v);
    reach = v.hi();
  }
  double c = eps0;
  for (const auto& v : out.ordered) {
    if (v.lo() < c) {
      c = std::max(c, v.hi());
    } else {
      out.gap = c;
      break;
    }
  }
  if (!out.gap && c <= 1) out.gap = c;
  out.covers = !out.gap;
  out.ordree = !out.ordered.empty();
  double best = eps0;
  for (const auto& v : out.ordered) {
    out.overlap.push_back(best - v.lo());
    if (!(best > v.lo())) out.ordree = false;
    best = std::max(best, v.hi());
  }
  return out;
}

// ---- covers ----

namespace {

double cover_depth(const Vec& x, const std::vector<Vec>& c, const std::vector<Radii>& r) {
  double d = -kInf;
  for (std::size_t i = 0; i < c.size(); ++i) d = std::max(d, r[i].r - (x - c[i]).norm());
  return d;
}

Vec lift(const Vec& xp, double xn) {
  Vec x(xp.size() + 1);
  x << xp, xn;
  return x;
}

}  // namespace

Leaf build_leaf(const GraphFoliation& f, const RadiusOracle& oracle, double eps,
                const CoverOptions& opt) {
  if (opt.boundary_filter && !opt.omega1)
    throw InvalidInput("boundary filter needs omega1");
  const auto base = domain_samples(f, opt.per_axis);
  double grad_max = 0;
  for (const auto& xp : base) grad_max = std::max(grad_max, f.grad(xp, eps).norm());
  const double Lphi = std::sqrt(1 + grad_max * grad_max);

  Leaf leaf;
  leaf.eps = eps;
  std::vector<Vec> pts;
  for (const auto& xp : base) {
    const double g = f.G(xp, eps);
    if (g < -1e-12) continue;
    const Vec x = lift(xp, std::max(g, 0.0));
    if (opt.boundary_filter) {
      const Radii r = oracle(x, eps);
      if (x[f.dim] - 4 * r.R <= 0) {
        if (!opt.omega1->contains(x))
          throw CheckFailed("sample near x_n = 0 outside omega1 at " + fmt(x), to_std(x));
        ++leaf.skipped;
        continue;
      }
    }
    pts.push_back(x);
  }
  for (const auto& x : pts) {
    bool covered = false;
    for (std::size_t i = 0; i < leaf.centers.size() && !covered; ++i)
      covered = leaf.radii[i].r - (x - leaf.centers[i]).norm() > opt.depth_frac * leaf.radii[i].r;
    if (covered) continue;
    const Radii r = oracle(x, eps);
    if (!(r.r > 0 && r.R > 0 && r.rho > 0))
      throw InvalidInput("radius oracle returned a nonpositive radius at " + fmt(x));
    if (4 * r.R > opt.R_cap)
      throw InvalidInput("radius oracle exceeds the cap: 4R = " + fmt(4 * r.R) + " at " + fmt(x));
    leaf.centers.push_back(x);
    leaf.radii.push_back(r);
  }
  if (leaf.centers.empty()) {
    leaf.g = 0;
    return leaf;
  }
  leaf.rho = kInf;
  for (const auto& r : leaf.radii) leaf.rho = std::min(leaf.rho, r.rho);
  leaf.coverage_margin = kInf;
  double depth = kInf;
  for (const auto& x : pts) {
    const double c = cover_depth(x, leaf.centers, leaf.radii);
    leaf.coverage_margin = std::min(leaf.coverage_margin, c);
    depth = std::min(depth, std::min(c, leaf.rho / Lphi));
  }
  leaf.dist = depth;
  leaf.g = std::max(leaf.dist, 0.0) / (2 * f.C_G);

  leaf.inegge = kInf;
  for (const auto& xp : base)
    leaf.inegge = std::min(leaf.inegge,
                           f.G(xp, std::max(eps - leaf.g, 0.0)) - f.G(xp, eps) + leaf.rho);

  leaf.inclusion = kInf;
  for (double c : {-0.9, -0.45, 0.0, 0.45, 0.9}) {
    const double e = eps + c * leaf.g;
    if (e < 0) continue;
    for (const auto& xp : base) {
      const double g = f.G(xp, e);
      if (g < -1e-12) continue;
      const Vec x = lift(xp, std::max(g, 0.0));
      if (opt.boundary_filter && opt.omega1->contains(x)) continue;
      const double d = std::min(cover_depth(x, leaf.centers, leaf.radii),
                                (leaf.rho - f.phi(x, eps)) / Lphi);
      leaf.inclusion = std::min(leaf.inclusion, d);
    }
  }
  return leaf;
}

BallCover extract_cover(const GraphFoliation& f, const RadiusOracle& oracle,
                        const CoverOptions& opt) {
  if (!(opt.eps0 > 0 && opt.eps0 < 1)) throw InvalidInput("eps0 must lie in (0, 1)");
  if (opt.candidates < 2 || opt.per_axis < 2) throw InvalidInput("cover grids too small");
  std::vector<Leaf> cand(opt.candidates);
  parallel_for(cand.size(), [&](std::size_t i) {
    const double eps = opt.eps0 + (1 - opt.eps0) * double(i) / (opt.candidates - 1);
    cand[i] = build_leaf(f, oracle, eps, opt);
  });
  // greedy: from the current frontier take the candidate reaching furthest
  std::vector<int> chosen;
  double c = opt.eps0;
  while (c <= 1) {
    int best = -1;
    for (int i = 0; i < opt.candidates; ++i) {
      const auto& L = cand[i];
      if (L.g > 0 && L.eps - L.g < c && L.eps + L.g > c &&
          (best < 0 || L.eps + L.g > cand[best].eps + cand[best].g))
        best = i;
    }
    if (best < 0) throw CheckFailed("coverage gap: eps = " + fmt(c) + " is not covered", {c});
    chosen.push_back(best);
    c = cand[best].eps + cand[best].g;
  }
  std::vector<EpsInterval> iv;
  for (int i : chosen) iv.push_back({cand[i].eps, cand[i].g});
  BallCover out;
  out.n = f.n();
  out.eps0 = opt.eps0;
  out.order = order_intervals(iv, opt.eps0);
  if (!out.order.covers)
    throw CheckFailed("coverage gap: eps = " + fmt(*out.order.gap) + " is not covered",
                      {*out.order.gap});
  if (!out.order.ordree) throw CheckFailed("overlap condition fails after ordering");
  out.inegge_min = kInf;
  out.inclusion_min = kInf;
  for (const auto& v : out.order.ordered) {
    for (int i : chosen)
      if (cand[i].eps == v.eps) {
        out.leaves.push_back(cand[i]);
        break;
      }
    out.inegge_min = std::min(out.inegge_min, out.leaves.back().inegge);
    out.inclusion_min = std::min(out.inclusion_min, out.leaves.back().inclusion);
  }
  return out;
}

double sampled_inclusion_margin(const OpenSet& A, const OpenSet& B, const Vec& lo, const Vec& hi,
                                int per_axis, std::vector<double>* witness) {
  double m = kInf;
  for_grid(lo, hi, per_axis, [&](const Vec& x) {
    if (!A.contains(x)) return;
    const double d = B.depth(x);
    if (d < m) {
      m = d;
      if (witness) *witness = to_std(x);
    }
  });
  return m;
}

InclusionReport check_cover_inclusions(const GraphFoliation& f, const BallCover& cover,
                                       const OpenSet& omega1, int per_axis) {
  InclusionReport rep;
  rep.margin = kInf;
  const int N = static_cast<int>(cover.leaves.size());
  for (int k = 0; k < N; ++k) {
    const Leaf& L = cover.leaves[k];
    double mk = kInf;
    std::vector<double> balls;
    for (std::size_t i = 0; i < L.centers.size(); ++i) {
      const Vec& c = L.centers[i];
      const double R4 = 4 * L.radii[i].R;
      const Vec lo = c.array() - R4, hi = c.array() + R4;
      rep.slack = std::max(rep.slack, 0.5 * cell_diag(lo, hi, per_axis));
      double mb = kInf;
      std::vector<double> wb;
      for_grid(lo, hi, per_axis, [&](const Vec& x) {
        if ((x - c).norm() >= R4 || f.phi(x, L.eps) <= L.rho) return;
        ++rep.samples;
        double d = omega1.depth(x);
        for (int j = 0; j < k; ++j) {
          const Leaf& P = cover.leaves[j];
          d = std::max(d, cover_depth(x, P.centers, P.radii));
        }
        if (d < mb) mb = d, wb = to_std(x);
      });
      balls.push_back(mb);
      if (mb < mk) mk = mb;
      if (mb < rep.margin) {
        rep.margin = mb;
        rep.worst_k = k;
        rep.worst_ball = static_cast<int>(i);
        rep.witness = wb;
      }
    }
    rep.margins.push_back(mk);
    rep.ball_margins.push_back(balls);
  }
  rep.pass = rep.margin > 0;
  return rep;
}

// ---- dependence relations ----

std::string to_string(Rule r) {
  switch (r) {
    case Rule::LocalEstimate: return "local-estimate";
    case Rule::Inclusion: return "inclusion";
    case Rule::Union: return "union";
    case Rule::Product: return "product";
    case Rule::StrongInclusion: return "strong-inclusion";
    case Rule::Transitivity: return "transitivity";
  }
  return "?";
}

Rule rule_from_string(const std::string& s) {
  for (Rule r : {Rule::LocalEstimate, Rule::Inclusion, Rule::Union, Rule::Product,
                 Rule::StrongInclusion, Rule::Transitivity})
    if (to_string(r) == s) return r;
  throw InvalidInput("unknown rule: " + s);
}

int DependenceGraph::add_set(const std::string& name) {
  if (find(name) >= 0) throw InvalidInput("duplicate set name " + name);
  names.push_back(name);
  members.emplace_back();
  return static_cast<int>(names.size()) - 1;
}

int DependenceGraph::add_union(const std::string& name, std::vector<int> parts) {
  if (parts.empty()) throw InvalidInput("empty union " + name);
  for (int p : parts)
    if (p < 0 || p >= static_cast<int>(names.size())) throw InvalidInput("bad union member");
  const int id = add_set(name);
  members[id] = std::move(parts);
  return id;
}

int DependenceGraph::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

void DependenceGraph::add_base(int lhs, int rhs) { base.push_back({{lhs}, {rhs}, true}); }

void DependenceGraph::add_inclusion(int inner, int outer, bool compact, double margin) {
  inclusions.push_back({inner, outer, compact, margin});
}

bool DependenceGraph::has_base(int lhs, int rhs) const {
  for (const auto& f : base)
    if (f.lhs == std::vector<int>{lhs} && f.rhs == std::vector<int>{rhs}) return true;
  return false;
}

bool DependenceGraph::has_inclusion(int inner, int outer, bool compact) const {
  for (const auto& w : inclusions)
    if (w.inner == inner && w.outer == outer && (w.compact || !compact)) return true;
  return false;
}

std::string DependenceGraph::describe(const Fact& f) const {
  auto side = [&](const std::vector<int>& v) {
    std::string s = v.size() == 1 ? "" : "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += v[i] >= 0 && v[i] < static_cast<int>(names.size()) ? names[v[i]] : "?";
    }
    return v.size() == 1 ? s : s + ")";
  };
  return side(f.lhs) + (f.strong ? " < " : " <= ") + side(f.rhs);
}

namespace {

bool same_set(std::vector<int> a, std::vector<int> b) {
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return a == b;
}

bool same_fact(const Fact& a, const Fact& b) {
  return a.strong == b.strong && same_set(a.lhs, b.lhs) && same_set(a.rhs, b.rhs);
}

// empty string when the step follows from the graph and the earlier steps
std::string check_step(const DependenceGraph& g, const std::vector<Step>& done, const Step& s) {
  const Fact& f = s.fact;
  const int nn = static_cast<int>(g.names.size());
  for (int v : f.lhs)
    if (v < 0 || v >= nn) return "unknown set id";
  for (int v : f.rhs)
    if (v < 0 || v >= nn) return "unknown set id";
  if (f.lhs.empty() || f.rhs.empty()) return "empty side";
  for (int p : s.premises)
    if (p < 0 || p >= static_cast<int>(done.size())) return "premise does not refer to an earlier step";
  switch (s.rule) {
    case Rule::LocalEstimate:
      if (!s.premises.empty() || !f.strong || f.lhs.size() != 1 || f.rhs.size() != 1)
        return "local estimate must relate two single sets strongly, without premises";
      if (!g.has_base(f.lhs[0], f.rhs[0])) return "missing base fact " + g.describe(f);
      return {};
    case Rule::Inclusion:
      if (f.strong || f.lhs.size() != 1 || f.rhs.size() != 1)
        return "inclusion gives a weak fact between single sets";
      if (!g.has_inclusion(f.lhs[0], f.rhs[0], false))
        return "no inclusion witness " + g.names[f.lhs[0]] + " in " + g.names[f.rhs[0]];
      return {};
    case Rule::Union: {
      if (f.strong || f.lhs.size() != 1) return "union gives a weak fact with a single left set";
      const auto& m = g.members[f.lhs[0]];
      if (m.empty()) return g.names[f.lhs[0]] + " is not a union";
      if (!same_set(m, f.rhs)) return "right side is not the members of " + g.names[f.lhs[0]];
      return {};
    }
    case Rule::StrongInclusion: {
      if (!f.strong) return "strong inclusion gives a strong fact";
      std::vector<int> inner = f.lhs;
      if (f.lhs.size() == 1 && !g.members[f.lhs[0]].empty() && f.rhs.size() != 1)
        inner = g.members[f.lhs[0]];
      else if (f.lhs.size() == 1 && !g.members[f.lhs[0]].empty() &&
               g.members[f.lhs[0]].size() == 1 && !g.has_inclusion(f.lhs[0], f.rhs[0], true))
        inner = g.members[f.lhs[0]];
      if (inner.size() != f.rhs.size()) return "strong inclusion needs matching collections";
      for (std::size_t i = 0; i < inner.size(); ++i)
        if (!g.has_inclusion(inner[i], f.rhs[i], true))
          return "no compact inclusion witness " + g.names[inner[i]] + " in " + g.names[f.rhs[i]];
      return {};
    }
    case Rule::Product: {
      if (s.premises.empty() || !f.strong) return "product needs strong premises";
      Fact want{{}, {}, true};
      bool all_same = true;
      for (int p : s.premises) {
        const Fact& q = done[p].fact;
        if (!q.strong || q.lhs.size() != 1) return "product premises must have a single left set";
        want.lhs.push_back(q.lhs[0]);
        if (!same_set(q.rhs, done[s.premises[0]].fact.rhs)) all_same = false;
      }
      if (all_same) {
        want.rhs = done[s.premises[0]].fact.rhs;
      } else {
        for (int p : s.premises) {
          const auto& r = done[p].fact.rhs;
          want.rhs.insert(want.rhs.end(), r.begin(), r.end());
        }
      }
      if (!same_fact(want, f)) return "product conclusion does not match its premises";
      return {};
    }
    case Rule::Transitivity: {
      if (s.premises.size() != 2 || !f.strong) return "transitivity needs two strong premises";
      const Fact& a = done[s.premises[0]].fact;
      const Fact& b = done[s.premises[1]].fact;
      if (!a.strong || !b.strong) return "transitivity premises must be strong";
      if (!same_set(a.rhs, b.lhs)) return "middle collections differ";
      if (!same_fact(Fact{a.lhs, b.rhs, true}, f)) return "transitivity conclusion mismatch";
      return {};
    }
  }
  return "unknown rule";
}

}  // namespace

ReplayResult replay(const DependenceGraph& g, const Schedule& s) {
  ReplayResult r;
  std::vector<Step> done;
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    const std::string err = check_step(g, done, s.steps[i]);
    if (!err.empty()) {
      r.failed_step = static_cast<int>(i);
      r.message = "step " + std::to_string(i) + " (" + to_string(s.steps[i].rule) + "): " + err;
      return r;
    }
    done.push_back(s.steps[i]);
  }
  if (done.empty() || !same_fact(done.back().fact, s.goal)) {
    r.message = "schedule does not end with the goal " + g.describe(s.goal);
    return r;
  }
  r.ok = true;
  return r;
}

CoverGraph build_dependence_graph(const GraphFoliation& f, const BallCover& cover,
                                  const OpenSet& U0, const OpenSet& V0, int per_axis) {
  CoverGraph cg;
  auto& g = cg.graph;
  cg.U0 = g.add_set("U0");
  cg.V0 = g.add_set("V0");
  cg.mid = g.add_set("M0");
  const int N = static_cast<int>(cover.leaves.size());
  std::vector<int> members = {cg.U0};
  cg.W.push_back(g.add_union("W[0]", members));
  for (int j = 0; j < N; ++j) {
    const Leaf& L = cover.leaves[j];
    LeafNodes ln;
    for (std::size_t i = 0; i < L.centers.size(); ++i) {
      const std::string tag = "[" + std::to_string(j + 1) + "," + std::to_string(i + 1) + "]";
      ln.U.push_back(g.add_set("U" + tag));
      ln.omega.push_back(g.add_set("w" + tag));
      ln.V.push_back(g.add_set("V" + tag));
      g.add_base(ln.U.back(), ln.V.back());
      // B(x, r) in B(x, 2r) with margin r
      g.add_inclusion(ln.omega.back(), ln.U.back(), true, L.radii[i].r);
      members.push_back(ln.omega.back());
    }
    cg.leaves.push_back(ln);
    cg.W.push_back(g.add_union("W[" + std::to_string(j + 1) + "]", members));
  }
  cg.inclusions = check_cover_inclusions(f, cover, U0, per_axis);
  for (int k = 0; k < N; ++k)
    for (std::size_t i = 0; i < cg.leaves[k].V.size(); ++i) {
      const double m = cg.inclusions.ball_margins[k][i];
      if (m > 0) g.add_inclusion(cg.leaves[k].V[i], cg.W[k], true, m);
    }
  // U0 in M0 in V0, sampled over a box around the foliated region
  const double pad = 0.5;
  Vec lo(f.n()), hi(f.n());
  lo << f.lo.array() - pad, -pad;
  hi << f.hi.array() + pad, f.C_G * (1 + f.eta) + pad;
  const double m = sampled_inclusion_margin(U0, V0, lo, hi, per_axis * 2 + 1);
  if (m > 0) {
    g.add_inclusion(cg.U0, cg.mid, true, m / 2);
    g.add_inclusion(cg.mid, cg.V0, true, m / 2);
  }
  return cg;
}

Schedule propagate_dependence(const DependenceGraph& g, const std::vector<LeafNodes>& leaves,
                              const std::vector<int>& W, int U0, int mid, int V0) {
  const int N = static_cast<int>(leaves.size());
  if (static_cast<int>(W.size()) != N + 1) throw InvalidInput("need N + 1 union nodes");
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw CheckFailed("schedule gap: missing " + what);
  };
  need(g.has_inclusion(U0, mid, true), "compact inclusion " + g.names[U0] + " in " + g.names[mid]);
  need(g.has_inclusion(mid, V0, true), "compact inclusion " + g.names[mid] + " in " + g.names[V0]);
  for (int k = 0; k < N; ++k)
    for (std::size_t i = 0; i < leaves[k].U.size(); ++i) {
      const auto& L = leaves[k];
      need(g.has_base(L.U[i], L.V[i]), "base fact " + g.names[L.U[i]] + " < " + g.names[L.V[i]]);
      need(g.has_inclusion(L.omega[i], L.U[i], true),
           "compact inclusion " + g.names[L.omega[i]] + " in " + g.names[L.U[i]]);
      need(g.has_inclusion(L.V[i], W[k], true),
           "compact inclusion " + g.names[L.V[i]] + " in " + g.names[W[k]]);
    }

  Schedule s;
  auto emit = [&](Rule r, Fact f, std::vector<int> prem = {}) {
    s.steps.push_back({r, std::move(f), std::move(prem)});
    return static_cast<int>(s.steps.size()) - 1;
  };
  std::vector<std::vector<int>> base_step(N), to_V0(N);
  for (int k = 0; k < N; ++k)
    for (std::size_t i = 0; i < leaves[k].U.size(); ++i)
      base_step[k].push_back(
          emit(Rule::LocalEstimate, {{leaves[k].U[i]}, {leaves[k].V[i]}, true}));
  const int mid_V0 = emit(Rule::StrongInclusion, {{mid}, {V0}, true});

  for (int k = 0; k <= N; ++k) {
    // W[k] < (M0, U_{i,j})_{j<=k} < V0
    std::vector<int> coll = {mid}, prem = {mid_V0};
    for (int j = 0; j < k; ++j)
      for (std::size_t i = 0; i < leaves[j].U.size(); ++i) {
        coll.push_back(leaves[j].U[i]);
        prem.push_back(to_V0[j][i]);
      }
    const int a = emit(Rule::StrongInclusion, {{W[k]}, coll, true});
    const int b = emit(Rule::Product, {coll, {V0}, true}, prem);
    const int c = emit(Rule::Transitivity, {{W[k]}, {V0}, true}, {a, b});
    if (k == N) break;
    for (std::size_t i = 0; i < leaves[k].U.size(); ++i) {
      const int d = emit(Rule::StrongInclusion, {{leaves[k].V[i]}, {W[k]}, true});
      const int e = emit(Rule::Transitivity, {{leaves[k].V[i]}, {V0}, true}, {d, c});
      to_V0[k].push_back(emit(Rule::Transitivity, {{leaves[k].U[i]}, {V0}, true},
                              {base_step[k][i], e}));
    }
  }
  s.goal = {{W[N]}, {V0}, true};
  return s;
}

Schedule propagate_dependence(const CoverGraph& cg) {
  return propagate_dependence(cg.graph, cg.leaves, cg.W, cg.U0, cg.mid, cg.V0);
}

}  // namespace ulab
