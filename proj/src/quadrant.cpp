#include "ulab/quadrant.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

namespace ulab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Acc {
  double value = 0, error = 0, l1 = 0;
};

template <class F>
double gk61(F& f, double a, double b, double* l1) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 0, 0.0, nullptr,
                                                                       l1);
}

// whole-interval rule against the two halves; bisect where they disagree
template <class F>
void gk_adapt(Acc& acc, F& f, double a, double b, double whole, int depth) {
  double m = 0.5 * (a + b), la = 0, lb = 0;
  double left = gk61(f, a, m, &la), right = gk61(f, m, b, &lb);
  double halves = left + right, err = std::abs(whole - halves);
  if (depth == 0 || err <= 1e-13 * (la + lb) || !(m > a && b > m)) {
    acc.value += halves;
    acc.error += err;
    acc.l1 += la + lb;
    return;
  }
  gk_adapt(acc, f, a, m, left, depth - 1);
  gk_adapt(acc, f, m, b, right, depth - 1);
}

template <class F>
void gk_add(Acc& acc, F f, double a, double b) {
  if (!(b > a)) return;
  double l1 = 0;
  double whole = gk61(f, a, b, &l1);
  gk_adapt(acc, f, a, b, whole, 12);
}

}  // namespace

bool BoundaryTrace::compatible(double tol) const {
  double a = f0 ? f0(0.0) : 0.0, b = f1 ? f1(0.0) : 0.0;
  return std::abs(a - b) <= tol;
}

Integral kernel_T(const std::function<double(double)>& f, const std::vector<double>& kinks,
                  double x, double y) {
  if (!(x > 0) || !(y > 0)) throw InvalidInput("kernel: point must be strictly inside the quadrant");
  auto k = [&](double e) {
    double a = x * x + (y + e) * (y + e), b = x * x + (y - e) * (y - e);
    return e * f(e) / (a * b);
  };
  double top = y + x;
  for (double c : kinks)
    if (std::isfinite(c)) top = std::max(top, c);
  double ystar = 4 * top;
  std::vector<double> cuts{0.0, ystar, y};
  for (double c : kinks)
    if (c > 0 && c < ystar) cuts.push_back(c);
  for (double s = x; y + s < ystar; s *= 4) cuts.push_back(y + s);
  for (double s = x; y - s > 0; s *= 4) cuts.push_back(y - s);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  Acc acc;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) gk_add(acc, k, cuts[i], cuts[i + 1]);
  // tail eta = ystar / t, t in (0, 1]
  gk_add(acc, [&](double t) { return k(ystar / t) * ystar / (t * t); }, 0.0, 1.0);
  double pre = 4 * x * y / kPi;
  Integral r;
  r.value = pre * acc.value;
  r.error = pre * acc.error;
  r.l1 = pre * acc.l1;
  return r;
}

GreenResult green_extend(const BoundaryTrace& trace, const std::vector<Point2>& points) {
  GreenResult g;
  g.values.resize(points.size());
  g.errors.resize(points.size());
  std::vector<double> rel(points.size(), 0.0);
  parallel_for(points.size(), [&](std::size_t i) {
    double x = points[i][0], y = points[i][1];
    double v = 0, e = 0, mass = 0;
    if (trace.f1) {
      Integral t = kernel_T(trace.f1, trace.kinks1, x, y);
      v += t.value;
      e += t.error;
      mass += t.l1;
    }
    if (trace.f0) {
      Integral t = kernel_T(trace.f0, trace.kinks0, y, x);
      v += t.value;
      e += t.error;
      mass += t.l1;
    }
    g.values[i] = v;
    g.errors[i] = e;
    rel[i] = mass > 0 ? e / mass : 0.0;
  });
  for (double r : rel) g.max_rel_error = std::max(g.max_rel_error, r);
  g.converged = g.max_rel_error <= 1e-9;
  return g;
}

double green_value(const BoundaryTrace& trace, double x, double y) {
  double v = 0;
  if (trace.f1) v += kernel_T(trace.f1, trace.kinks1, x, y).value;
  if (trace.f0) v += kernel_T(trace.f0, trace.kinks0, y, x).value;
  return v;
}

KernelIdentities kernel_identities_check(double x, double y) {
  KernelIdentities k;
  k.T1 = kernel_T([](double) { return 1.0; }, {}, x, y).value;
  k.Teta = kernel_T([](double e) { return e; }, {}, x, y).value;
  k.T1_exact = 2 / kPi * std::atan(y / x);
  k.Teta_exact = y;
  k.rel1 = std::abs(k.T1 - k.T1_exact) / std::abs(k.T1_exact);
  k.rel_eta = std::abs(k.Teta - k.Teta_exact) / std::abs(k.Teta_exact);
  return k;
}

// ---- barrier

BarrierConstants barrier_constants(const BarrierParams& p) {
  BarrierConstants c;
  double sd = std::sqrt(p.delta);
  c.D = std::min({p.delta / (4 * p.c1), p.kappa / (9 * p.delta), std::sqrt(p.eps) / (6 * sd)});
  double a = p.R + 8.5 * p.delta;
  double D = c.D;
  c.C = 16 / kPi *
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double e) { return a / ((e - D / 2) * (e - D / 2)); }, D, kInf, 15, 1e-14);
  c.C_closed = 16 / kPi * a * 2 / D;
  c.nu = p.delta / (4 * c.C * c.D);
  c.d0 = std::min(c.nu * c.D, c.D / 2) / 2;
  c.D_beta = 2 * p.beta / sd;
  c.I_lo = c.D_beta;
  c.I_hi = std::min({p.delta / (4 * p.c1), p.kappa / (9 * p.delta), std::sqrt(p.eps) / (3 * sd)});
  if (p.d > 0) {
    c.Cprime = (8 * p.d / kPi) * std::pow(8 / p.d, 4) * a * (8 / std::pow(p.delta, 1.5)) / 3;
    c.beta0 = std::min({sd * c.I_hi / 2, p.d * sd / 16, std::cbrt(p.delta / (4 * c.Cprime))});
  } else {
    c.Cprime = kInf;
    c.beta0 = 0;
  }
  return c;
}

double gamma_max(const BarrierParams& p) { return p.beta / std::sqrt(p.R + 9 * p.delta); }

std::vector<std::string> barrier_violations(const BarrierParams& p) {
  std::vector<std::string> v;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) v.push_back(what);
  };
  need(p.R > 0 && p.delta > 0 && p.kappa > 0 && p.eps > 0 && p.c1 > 0,
       "R, delta, kappa, eps, c1 must be positive");
  need(p.beta > 0, "beta > 0");
  need(p.gamma > 0, "gamma > 0");
  need(p.d > 0, "d > 0");
  if (!v.empty()) return v;
  BarrierConstants c = barrier_constants(p);
  need(p.d < c.d0, "d < d0 = " + std::to_string(c.d0));
  need(p.beta < c.beta0, "beta < beta0 = " + std::to_string(c.beta0));
  need(p.gamma <= gamma_max(p) * (1 + 1e-12), "gamma <= beta / sqrt(R + 9 delta)");
  need(c.I_lo < c.I_hi, "I_beta nonempty");
  return v;
}

double barrier_f1_unchecked(const BarrierParams& p, double y) {
  if (y < 0) throw InvalidInput("barrier: y must be nonnegative");
  double ry = p.R * y;
  if (y < p.gamma) return ry;
  double m = std::max({-p.kappa, -9 * p.delta * y, -p.eps / y});
  return std::min(ry, m + p.c1 * y * y + p.beta * p.beta / y);
}

double barrier_f1(const BarrierParams& p, double y) {
  auto v = barrier_violations(p);
  if (!v.empty()) throw InvalidInput("barrier: inadmissible parameters: " + v.front());
  return barrier_f1_unchecked(p, y);
}

std::vector<double> barrier_kinks(const BarrierParams& p) {
  std::vector<double> k{p.gamma, p.kappa / (9 * p.delta), std::sqrt(p.eps / (9 * p.delta)),
                        p.eps / p.kappa};
  auto gap = [&](double y) {
    double m = std::max({-p.kappa, -9 * p.delta * y, -p.eps / y});
    return p.R * y - (m + p.c1 * y * y + p.beta * p.beta / y);
  };
  double lo = std::max(1e-300, std::min(p.gamma, p.beta) * 1e-2), hi = 1e4;
  const int n = 4000;
  double prev_y = lo, prev = gap(lo);
  for (int i = 1; i <= n; ++i) {
    double y = lo * std::pow(hi / lo, static_cast<double>(i) / n);
    double g = gap(y);
    if ((g > 0) != (prev > 0)) {
      double a = prev_y, b = y;
      for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
        double mid = 0.5 * (a + b);
        ((gap(mid) > 0) == (prev > 0) ? a : b) = mid;
      }
      k.push_back(0.5 * (a + b));
    }
    prev_y = y;
    prev = g;
  }
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

MarginReport barrier_certify(const BarrierParams& p, double h_frac) {
  auto v = barrier_violations(p);
  if (!v.empty()) throw InvalidInput("barrier_certify: inadmissible parameters: " + v.front());
  if (!(h_frac > 0) || h_frac > 0.25) throw InvalidInput("barrier_certify: bad resolution");
  BoundaryTrace tr;
  tr.f1 = [p](double y) { return barrier_f1_unchecked(p, y); };
  tr.kinks1 = barrier_kinks(p);
  tr.lip1 = p.R;
  double h = p.d * h_frac, r0 = p.d / 4, r1 = 2 * p.d;
  int n = static_cast<int>(std::floor(r1 / h + 1e-9));
  std::vector<Point2> pts;
  std::vector<std::array<int, 2>> ij;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      double x = i * h, y = j * h, r = std::hypot(x, y);
      if (r >= r0 && r <= r1) {
        pts.push_back({x, y});
        ij.push_back({i, j});
      }
    }
  GreenResult g = green_extend(tr, pts);
  MarginReport rep;
  rep.h = h;
  rep.samples = static_cast<long>(pts.size());
  rep.max_rel_error = g.max_rel_error;
  rep.min_margin = kInf;
  rep.raw_min = kInf;
  std::vector<double> q((n + 1) * (n + 1), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t s = 0; s < pts.size(); ++s) {
    double y = pts[s][1], f = g.values[s];
    double m = -8 * p.delta - f / y;
    q[ij[s][0] * (n + 1) + ij[s][1]] = m;
    rep.raw_min = std::min(rep.raw_min, -8 * p.delta * y - f);
    if (m < rep.min_margin) {
      rep.min_margin = m;
      rep.witness = pts[s];
    }
  }
  double L = 0;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      double a = q[i * (n + 1) + j];
      if (std::isnan(a)) continue;
      if (i < n && !std::isnan(q[(i + 1) * (n + 1) + j]))
        L = std::max(L, std::abs(q[(i + 1) * (n + 1) + j] - a) / h);
      if (j < n && !std::isnan(q[i * (n + 1) + j + 1]))
        L = std::max(L, std::abs(q[i * (n + 1) + j + 1] - a) / h);
    }
  rep.lipschitz = L;
  rep.pass = g.converged && rep.min_margin - L * h >= 0;
  return rep;
}

// ---- envelope

BarrierParams envelope_barrier(const EnvelopeInput& in, double beta, double d) {
  BarrierParams p;
  p.R = in.R0;
  p.delta = in.delta;
  p.kappa = in.kappa;
  p.eps = in.eps / 8;
  p.c1 = in.C1;
  p.beta = std::sqrt(in.eps) * beta;
  p.gamma = in.tau0 / in.mu;
  p.d = d;
  return p;
}

double envelope_d0(const EnvelopeInput& in) { return barrier_constants(envelope_barrier(in, 0, 0)).d0; }

double envelope_beta0(const EnvelopeInput& in, double d) {
  return barrier_constants(envelope_barrier(in, 0, d)).beta0 / std::sqrt(in.eps);
}

double envelope_f1(const EnvelopeInput& in, double beta, double y) {
  return barrier_f1_unchecked(envelope_barrier(in, beta, 0), y);
}

EnvelopeReport frequency_envelope(const EnvelopeInput& in, double beta, double d, double h_frac) {
  if (!(in.mu >= 1)) throw InvalidInput("envelope: mu must be >= 1");
  if (!(beta > 0)) throw InvalidInput("envelope: beta must be positive");
  double need = in.tau0 * std::sqrt(in.R0 + 9 * in.delta) / beta;
  if (in.mu < need)
    throw InvalidInput("envelope: mu below tau0 sqrt(R0 + 9 delta) / beta = " + std::to_string(need));
  EnvelopeReport r;
  r.mapped = envelope_barrier(in, beta, d);
  r.margin = barrier_certify(r.mapped, h_frac);
  r.sup_value = -r.margin.raw_min;
  r.pass = r.margin.pass;
  return r;
}

DominationReport check_dominated(const EnvelopeInput& in, double beta,
                                 const std::vector<double>& taus, const std::vector<double>& g,
                                 double tol) {
  if (taus.size() != g.size()) throw InvalidInput("dominated: sample sizes differ");
  DominationReport r;
  r.min_slack = kInf;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    double s = envelope_f1(in, beta, taus[i]) - g[i];
    if (s < r.min_slack) {
      r.min_slack = s;
      r.witness_tau = taus[i];
    }
  }
  r.pass = taus.empty() || r.min_slack >= -tol;
  return r;
}

// ---- Phragmen-Lindelof check

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::Rejected: return "rejected";
  }
  return "?";
}

DominateReport subharmonic_dominate(const std::function<double(double, double)>& g,
                                    const std::function<double(double, double)>& f,
                                    const DominateOptions& opt) {
  if (opt.radii.empty() || opt.weights.empty() || !(opt.h > 0))
    throw InvalidInput("dominate: need radii, weights and h > 0");
  DominateReport rep;
  double rmax = *std::max_element(opt.radii.begin(), opt.radii.end());
  int n = static_cast<int>(std::ceil(rmax / opt.h)) + 1;
  auto at = [&](int i, int j) { return static_cast<std::size_t>(i) * (n + 1) + j; };
  std::vector<double> H((n + 1) * (n + 1), std::numeric_limits<double>::quiet_NaN());
  auto inside = [&](int i, int j, double R) {
    return i >= 0 && j >= 0 && i <= n && j <= n && std::hypot(i * opt.h, j * opt.h) <= R;
  };
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      if (inside(i, j, rmax)) H[at(i, j)] = g(i * opt.h, j * opt.h) - f(i * opt.h, j * opt.h);
  // hypotheses: sign on the axes and discrete subharmonicity of g - f
  double axis = -kInf;
  for (int i = 0; i <= n; ++i) {
    if (inside(i, 0, rmax)) axis = std::max(axis, H[at(i, 0)]);
    if (inside(0, i, rmax)) axis = std::max(axis, H[at(0, i)]);
  }
  rep.max_boundary = axis;
  if (axis > opt.tol) {
    rep.verdict = Verdict::Rejected;
    rep.note = "g - f is positive on an axis";
    return rep;
  }
  double worst = kInf;
  double h2 = opt.h * opt.h;
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) {
      if (!inside(i + 1, j, rmax) || !inside(i, j + 1, rmax)) continue;
      double lap = (H[at(i + 1, j)] + H[at(i - 1, j)] + H[at(i, j + 1)] + H[at(i, j - 1)] -
                    4 * H[at(i, j)]) / h2;
      worst = std::min(worst, lap);
    }
  rep.worst_laplacian = worst;
  if (worst < -opt.tol) {
    rep.verdict = Verdict::Rejected;
    rep.note = "g - f is not discretely subharmonic";
    return rep;
  }
  double p = 2 - opt.growth_eps / 2;
  auto v = [&](double x, double y) {
    return std::real(std::pow(std::polar(1.0, -kPi / 4) * cplx(x, y), p));
  };
  std::vector<double> radii = opt.radii;
  std::sort(radii.begin(), radii.end());
  for (double w : opt.weights) {
    // push the arc outward until the comparison makes the arc negative
    double R = -1;
    for (double r : radii) {
      bool neg = true;
      for (int k = 0; k <= 512 && neg; ++k) {
        double th = kPi / 2 * k / 512, x = r * std::cos(th), y = r * std::sin(th);
        if (g(x, y) - f(x, y) - w * v(x, y) >= 0 && k != 0 && k != 512) neg = false;
      }
      if (neg) {
        R = r;
        break;
      }
    }
    rep.weight = w;
    if (R < 0) {
      rep.verdict = Verdict::Inconclusive;
      rep.note = "no sampled arc is negative for weight " + std::to_string(w);
      return rep;
    }
    rep.radius = R;
    double mi = -kInf, mb = 0, hmax = -kInf;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        if (!inside(i, j, R)) continue;
        double u = H[at(i, j)] - w * v(i * opt.h, j * opt.h);
        bool interior = i > 0 && j > 0 && inside(i + 1, j, R) && inside(i - 1, j, R) &&
                        inside(i, j + 1, R) && inside(i, j - 1, R);
        if (interior) {
          mi = std::max(mi, u);
          hmax = std::max(hmax, H[at(i, j)]);
        } else {
          mb = std::max(mb, u);
        }
      }
    rep.max_interior = hmax;
    if (mi > std::max(mb, 0.0) + opt.tol) {
      rep.verdict = Verdict::Fail;
      rep.note = "interior maximum exceeds the boundary maximum";
      return rep;
    }
  }
  rep.verdict = Verdict::Pass;
  return rep;
}

}  // namespace ulab
