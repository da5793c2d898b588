#include "ulab/pseudoconvex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ulab {

void OrientedSurface::validate(double tol) const {
  if (x0.size() != phi.dim()) throw InvalidInput("surface base point has wrong dimension");
  Jet j = phi.jet(x0);
  if (std::abs(j.v) > tol) throw InvalidInput("phi(x0) must vanish");
  if (phi.order() < 1 || j.g.norm() <= tol) throw InvalidInput("grad phi(x0) must be nonzero");
}

ConvexifiedWeight::ConvexifiedWeight(const OrientedSurface& s, double A) : A_(A), x0_(s.x0) {
  if (!(A > 0)) throw InvalidInput("convexification parameter A must be positive");
  s.validate(1e-9);
  if (s.phi.order() < 2) throw InvalidInput("surface needs Hessian data");
  Jet j = s.phi.jet(s.x0);
  g0_ = j.g.real();
  H0_ = 0.5 * (j.h.real() + j.h.real().transpose());
  if (g0_.norm() == 0) throw InvalidInput("grad phi(x0) must be nonzero");
}

double ConvexifiedWeight::value(const Vec& x) const {
  Vec d = x - x0_;
  double l = d.dot(g0_);
  return l + A_ * l * l + 0.5 * d.dot(H0_ * d) - d.squaredNorm() / A_;
}

Vec ConvexifiedWeight::gradient(const Vec& x) const {
  Vec d = x - x0_;
  return g0_ + 2 * A_ * d.dot(g0_) * g0_ + H0_ * d - 2 * d / A_;
}

Mat ConvexifiedWeight::hessian() const {
  int n = static_cast<int>(x0_.size());
  return H0_ + 2 * A_ * g0_ * g0_.transpose() - (2 / A_) * Mat::Identity(n, n);
}

Coefficient ConvexifiedWeight::coefficient() const {
  // expand around the origin: psi(x) = c + a.x + x^T Q x / 2
  Mat Q = hessian();
  Vec a = g0_ - Q * x0_;
  double c = -g0_.dot(x0_) + 0.5 * x0_.dot(Q * x0_);
  return Coefficient::quadratic(c, a.cast<cplx>(), Q.cast<cplx>());
}

ConvexifiedWeight convexify(const OrientedSurface& s, double A) { return ConvexifiedWeight(s, A); }

double SlackReport::slack() const {
  double s = std::numeric_limits<double>::infinity();
  if (!limit.vacuous) s = std::min(s, limit.min_value);
  if (!weighted.vacuous) s = std::min(s, weighted.min_value);
  return s;
}

bool SlackReport::passes(double margin) const {
  if (vacuous()) return true;
  double s = slack();
  return margin > 0 ? s >= margin : s > 0;
}

namespace {

constexpr std::size_t kKeepActive = 32;

struct Sample {
  CVec xi;
  double tau;
  double norm;  // |(xi, tau)|
};

std::vector<double> theta_grid(const PseudoGrid& g) {
  std::vector<double> th;
  double t_split = 0.1;
  for (int k = 0; k < g.tau_log; ++k) {
    double t = g.tau_log == 1 ? g.tau_min
                              : g.tau_min * std::pow(t_split / g.tau_min, double(k) / g.tau_log);
    th.push_back(std::asin(t));
  }
  double a0 = std::asin(t_split), a1 = std::numbers::pi / 2;
  for (int k = 0; k < g.tau_angle; ++k)
    th.push_back(g.tau_angle == 1 ? a1 : a0 + (a1 - a0) * k / (g.tau_angle - 1));
  return th;
}

double theta_spacing(const std::vector<double>& th) {
  double h = 0;
  for (std::size_t i = 1; i < th.size(); ++i) h = std::max(h, 0.5 * (th[i] - th[i - 1]));
  return h;
}

// evaluate |c| normalized, tolerance selection, quantity at active points
struct Constraint {
  FrozenSymbol f;
  int deg;
};

ConditionReport sweep(const std::vector<Sample>& samples, const Vec& x,
                      const std::vector<Constraint>& cons, const FrozenSymbol& quantity,
                      int qdeg, bool divide_tau, double h, ConditionReport rep) {
  std::size_t ns = samples.size();
  std::vector<std::vector<double>> vals(cons.size(), std::vector<double>(ns));
  for (std::size_t c = 0; c < cons.size(); ++c)
    for (std::size_t i = 0; i < ns; ++i)
      vals[c][i] = std::abs(cons[c].f.eval(samples[i].xi, samples[i].tau)) /
                   std::pow(samples[i].norm, cons[c].deg);
  std::vector<double> tol(cons.size());
  for (std::size_t c = 0; c < cons.size(); ++c) {
    double mx = 0;
    for (double v : vals[c]) mx = std::max(mx, v);
    tol[c] = std::max(h * std::max(cons[c].deg, 1), 1e-10) * mx;
  }
  rep.h = std::max(rep.h, h);
  rep.n_samples += static_cast<long>(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    bool act = true;
    for (std::size_t c = 0; c < cons.size() && act; ++c) act = vals[c][i] <= tol[c];
    if (!act) continue;
    cplx q = quantity.eval(samples[i].xi, samples[i].tau);
    if (divide_tau) q /= cplx(0.0, samples[i].tau);
    double v = q.real() / std::pow(samples[i].norm, qdeg);
    ActivePoint ap{x, samples[i].xi.real(), samples[i].tau, v};
    if (rep.vacuous || v < rep.min_value) {
      rep.min_value = v;
      rep.worst = ap;
    }
    rep.vacuous = false;
    ++rep.n_active;
    if (rep.active.size() < kKeepActive) rep.active.push_back(ap);
  }
  return rep;
}

SlackReport run_checks(const SymbolPoly& p, const Coefficient& w, const std::vector<Vec>& xs,
                       const PseudoGrid& g, bool surface) {
  if (w.dim() != p.n()) throw InvalidInput("weight dimension does not match symbol");
  if (g.directions < 1 || g.scale <= 0 || g.tau_min <= 0 || g.tau_min >= 0.1)
    throw InvalidInput("invalid pseudoconvexity grid");
  const int m = p.order(), na = p.na(), nb = p.nb(), n = p.n();
  SymbolPoly W = SymbolPoly::function(na, nb, w);

  // tau -> 0 condition
  SymbolPoly pb = p.conj();
  SymbolPoly pw = poisson_bracket(p, W);
  SymbolPoly q1 = poisson_bracket(pb, pw);
  // tau > 0 condition
  SymbolPoly P = conjugate_weight_symbolic(p, w);
  SymbolPoly Pw = poisson_bracket(P, W);
  SymbolPoly q2 = poisson_bracket(P.conj(), P);

  auto dirs = sphere_points(nb, g.directions);
  auto th = theta_grid(g);
  double h_sphere = sphere_spacing(nb, g.directions);

  std::vector<Sample> s1, s2;
  for (const auto& om : dirs) {
    CVec xi = CVec::Zero(n);
    for (int k = 0; k < nb; ++k) xi[na + k] = g.scale * om[k];
    s1.push_back({xi, 0.0, g.scale});
  }
  for (double t : th) {
    if (nb == 0) {
      if (t < std::numbers::pi / 2 - 1e-12) continue;
      s2.push_back({CVec::Zero(n), g.scale, g.scale});
      continue;
    }
    for (const auto& om : dirs) {
      CVec xi = CVec::Zero(n);
      for (int k = 0; k < nb; ++k) xi[na + k] = g.scale * std::cos(t) * om[k];
      s2.push_back({xi, g.scale * std::sin(t), g.scale});
    }
  }
  double h2 = std::max(h_sphere, theta_spacing(th));

  SlackReport rep;
  for (const Vec& x : xs) {
    if (x.size() != n) throw InvalidInput("sample point dimension does not match symbol");
    std::vector<Constraint> c1{{p.freeze(x), m}};
    if (surface) c1.push_back({pw.freeze(x), std::max(m - 1, 0)});
    rep.limit = sweep(s1, x, c1, q1.freeze(x), 2 * m - 2, false, h_sphere, rep.limit);
    std::vector<Constraint> c2{{P.freeze(x), m}};
    if (surface) c2.push_back({Pw.freeze(x), std::max(m - 1, 0)});
    rep.weighted = sweep(s2, x, c2, q2.freeze(x), 2 * m - 2, true, h2, rep.weighted);
  }
  return rep;
}

}  // namespace

SlackReport check_surface_pseudoconvexity(const SymbolPoly& p, const OrientedSurface& s,
                                          const PseudoGrid& grid) {
  s.validate(1e-9);
  std::vector<Vec> xs = grid.x_points.empty() ? std::vector<Vec>{s.x0} : grid.x_points;
  return run_checks(p, s.phi, xs, grid, true);
}

SlackReport check_function_pseudoconvexity(const SymbolPoly& p, const Coefficient& psi,
                                           const Vec& x0, const PseudoGrid& grid) {
  std::vector<Vec> xs = grid.x_points.empty() ? std::vector<Vec>{x0} : grid.x_points;
  return run_checks(p, psi, xs, grid, false);
}

SlackReport check_function_pseudoconvexity(const SymbolPoly& p, const ConvexifiedWeight& psi,
                                           const PseudoGrid& grid) {
  return check_function_pseudoconvexity(p, psi.coefficient(), psi.x0(), grid);
}

ASearchResult find_convexification_A(const SymbolPoly& p, const OrientedSurface& s,
                                     const PseudoGrid& grid, double A_min, double A_max,
                                     double margin) {
  if (!(A_min > 0) || A_max < A_min) throw InvalidInput("invalid A range");
  SlackReport sr = check_surface_pseudoconvexity(p, s, grid);
  if (!sr.passes()) throw InvalidInput("surface fails the pseudoconvexity conditions on the grid");
  ASearchResult res;
  for (double A = A_min; A <= A_max * (1 + 1e-12); A *= 2) {
    SlackReport r = check_function_pseudoconvexity(p, convexify(s, A), grid);
    res.tried.push_back(A);
    res.slacks.push_back(r.slack());
    res.report = r;
    if (r.vacuous() || r.slack() >= margin) {
      res.found = true;
      res.A = A;
      return res;
    }
    const auto& wc = (!r.weighted.vacuous &&
                      (r.limit.vacuous || r.weighted.min_value <= r.limit.min_value))
                         ? r.weighted
                         : r.limit;
    res.worst = wc.worst;
  }
  return res;
}

FghResult find_fgh_A(const std::function<double(const Vec&)>& f,
                     const std::function<double(const Vec&)>& g,
                     const std::function<double(const Vec&)>& h, const std::vector<Vec>& points,
                     double A_min, double A_max, double margin) {
  if (!(A_min > 0) || A_max < A_min || points.empty()) throw InvalidInput("invalid fgh search input");
  std::vector<double> fv, gv, hv;
  for (const auto& x : points) {
    fv.push_back(f(x));
    gv.push_back(g(x));
    hv.push_back(h(x));
  }
  FghResult r;
  for (double A = A_min; A <= A_max * (1 + 1e-12); A *= 2) {
    double mn = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double v = gv[i] + A * fv[i] - hv[i] / A;
      if (v < mn) {
        mn = v;
        arg = i;
      }
    }
    r.tried.push_back(A);
    r.mins.push_back(mn);
    r.min_value = mn;
    r.worst = points[arg];
    r.A = A;
    if (mn >= margin) {
      r.found = true;
      return r;
    }
  }
  return r;
}

GeometryReport verify_level_set_geometry(const Coefficient& phi, const ConvexifiedWeight& psi,
                                         double R, double eta, double eta1, double eta2,
                                         const GeometrySamples& smp) {
  if (!(R > 0) || eta < 0 || !(eta1 > 0) || !(eta2 > 0))
    throw InvalidInput("radii and margins must be positive");
  if (smp.radii < 2 || smp.directions < 1) throw InvalidInput("too few geometry samples");
  const Vec& x0 = psi.x0();
  const int n = static_cast<int>(x0.size());
  if (phi.dim() != n) throw InvalidInput("phi dimension does not match weight");

  auto dirs = sphere_points(n, smp.directions);
  std::vector<double> radii;
  // log-spaced small radii and uniform radii, merged
  for (int k = 0; k < smp.radii; ++k) {
    radii.push_back(R * smp.r_min_frac * std::pow(1.0 / smp.r_min_frac, double(k) / (smp.radii - 1)));
    radii.push_back(R * (k + 1.0) / smp.radii);
  }
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  GeometryReport rep;
  rep.radii = {R, 0, 0, 0, eta, eta1, eta2};
  double rho_i = std::numeric_limits<double>::infinity(), rho_ii = rho_i;
  Vec wit_i, wit_ii;
  double r_ok = 0, max_psi_inside = std::abs(psi.value(x0));
  bool r_open = true;
  double hmax = 0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    double rad = radii[k];
    if (k) hmax = std::max(hmax, rad - radii[k - 1]);
    double shell_max = 0;
    for (const auto& d : dirs) {
      Vec x = x0 + rad * d;
      double ph = phi(x).real(), ps = psi.value(x);
      shell_max = std::max(shell_max, std::abs(ps));
      if (rad >= R / 8 && ps >= -eta && ph < rho_i) {
        rho_i = ph;
        wit_i = x;
      }
      if (ps >= eta1 && ph < rho_ii) {
        rho_ii = ph;
        wit_ii = x;
      }
    }
    ++rep.samples;
    if (r_open && shell_max < eta2) {
      r_ok = rad;
      max_psi_inside = std::max(max_psi_inside, shell_max);
    } else {
      r_open = false;
    }
  }
  rep.samples *= static_cast<long>(dirs.size());
  rep.h = std::max(hmax, 2 * std::sin(std::numbers::pi / std::max<int>(2, smp.directions)) * R);
  rep.rho_i = rho_i;
  rep.rho_ii = rho_ii;
  double rho = 0.5 * std::min(rho_i, rho_ii);
  if (!std::isfinite(rho)) rho = 0.5 * std::min(R * R, eta1);
  if (!(rho > 0)) {
    const Vec& w = rho_i <= rho_ii ? wit_i : wit_ii;
    throw CheckFailed("level-set inclusion cannot hold for any rho > 0",
                      std::vector<double>(w.data(), w.data() + w.size()));
  }
  if (r_ok <= 0) throw CheckFailed("no sampled radius keeps |psi| < eta2", {radii.front()});
  rep.radii.rho = rho;
  rep.radii.r = r_ok;
  rep.margin_i = rho_i - rho;
  rep.margin_ii = rho_ii - rho;
  rep.radii.delta = std::min(rep.margin_i, rep.margin_ii);
  rep.margin_iii = eta2 - max_psi_inside;
  return rep;
}

}  // namespace ulab
