// one PASS/FAIL line per criterion; exit status 1 when any fails

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "ulab/foliation.hpp"
#include "ulab/mollify.hpp"
#include "ulab/pdelab.hpp"
#include "ulab/pseudoconvex.hpp"
#include "ulab/quadrant.hpp"
#include "ulab/symbols.hpp"

using namespace ulab;
using std::numbers::pi;

namespace {

int failures = 0, total = 0;

struct Outcome {
  bool ok = false;
  std::string detail;
};

template <class F>
void criterion(int id, const char* name, double limit, F body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool fast = s < limit;
  bool ok = o.ok && fast;
  ++total;
  failures += !ok;
  std::printf("%s %2d %s (%.2f s, limit %.0f s%s): %s\n", ok ? "PASS" : "FAIL", id, name, s, limit,
              fast ? "" : ", too slow", o.detail.c_str());
  std::fflush(stdout);
}

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

std::function<double(double)> wavy(std::uint64_t seed, double* lip) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  double a = u(rng), b = u(rng);
  std::vector<double> c(3), w(3);
  *lip = std::abs(b);
  for (int k = 0; k < 3; ++k) {
    c[k] = 0.5 * u(rng);
    w[k] = 1 + 2 * std::abs(u(rng));
    *lip += std::abs(c[k]) * (w[k] + 0.25);
  }
  return [=](double t) {
    double s = a + b * t;
    for (int k = 0; k < 3; ++k) s += c[k] * std::sin(w[k] * t) * std::exp(-t / 4);
    return s;
  };
}

StatePair smooth_data(const ControlProblem& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto ms = modes(p);
  StatePair s = zero_state(p);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    double damp = std::exp(-0.05 * ms[i].omega);
    s.u0[i] = damp * cplx(nd(rng), nd(rng));
    s.u1[i] = damp * cplx(nd(rng), nd(rng));
  }
  return s;
}

Outcome c1() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.1, 10);
  double w1 = 0, we = 0;
  for (int i = 0; i < 100; ++i) {
    double x = u(rng), y = u(rng);
    auto k = kernel_identities_check(x, y);
    w1 = std::max(w1, k.rel1);
    we = std::max(we, k.rel_eta);
  }
  return {w1 <= 1e-8 && we <= 1e-8,
          "max rel error " + num(w1) + " (arctan), " + num(we) + " (y) over 100 points"};
}

Outcome c2() {
  const std::vector<std::array<double, 2>> centers{{1.0, 1.0}, {0.6, 1.7}, {2.0, 0.8}};
  double worst = 1e300;
  std::string d;
  for (int pair = 0; pair < 3; ++pair) {
    BoundaryTrace tr;
    tr.f0 = wavy(200 + 2 * pair, &tr.lip0);
    tr.f1 = wavy(201 + 2 * pair, &tr.lip1);
    std::vector<double> res;
    for (double h : {1.0 / 64, 1.0 / 128, 1.0 / 256}) {
      double r = 0;
      for (auto c : centers) {
        double x = c[0], y = c[1];
        auto v = green_extend(tr, {{x, y}, {x + h, y}, {x - h, y}, {x, y + h}, {x, y - h}}).values;
        r = std::max(r, std::abs(v[1] + v[2] + v[3] + v[4] - 4 * v[0]) / (h * h));
      }
      res.push_back(r);
    }
    double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
    worst = std::min({worst, o1, o2});
    d += (pair ? "; " : "") + std::string("orders ") + num(o1) + ", " + num(o2);
  }
  return {worst >= 1.8, d};
}

Outcome c3() {
  BarrierParams p;
  p.d = barrier_constants(p).d0 / 2;
  p.beta = barrier_constants(p).beta0 / 2;
  p.gamma = gamma_max(p);
  auto m = barrier_certify(p, 1.0 / 256);
  bool ok = m.pass && m.min_margin >= 0 && barrier_violations(p).empty();
  return {ok, "d " + num(p.d) + ", beta " + num(p.beta) + ", min margin " + num(m.min_margin) +
                  " (raw " + num(m.raw_min) + ") over " + std::to_string(m.samples) + " samples"};
}

Outcome c4() {
  bool ok = true;
  std::string d;
  for (double dist : {0.5, 1.0, 2.0}) {
    auto r = disjoint_support(dist);
    double pred = -dist * dist / 4;
    double rel = std::abs(r.fit.slope / pred - 1);
    ok &= rel <= 0.2;
    d += "d=" + num(dist) + " slope " + num(r.fit.slope) + " vs " + num(pred) + "; ";
  }
  auto wc = weighted_cutoff();
  ok &= wc.worst <= 1.1;
  d += "cutoff worst ratio " + num(wc.worst) + " (C " + num(wc.C) + "); ";
  auto lh = low_high_split();
  ok &= lh.bound_holds && lh.max_excess <= 0;
  d += "low-high max excess " + num(lh.max_excess) + " over " + std::to_string(lh.lattice_points) +
       " lattice points";
  return {ok, d};
}

Outcome c5() {
  SymbolPoly p = wave_symbol(1, 2);
  PseudoGrid grid;
  grid.directions = 4096;
  std::mt19937_64 rng(505);
  std::normal_distribution<double> nd;
  bool ok = true;
  std::string d = "A =";
  double min_post = 1e300;
  for (int k = 0; k < 5; ++k) {
    Vec g(3);
    double q;
    do {
      for (int i = 0; i < 3; ++i) g[i] = nd(rng);
      q = g[0] * g[0] - g[1] * g[1] - g[2] * g[2];
    } while (std::abs(q) < 0.1 * g.squaredNorm());
    OrientedSurface s{Coefficient::quadratic(0, g.cast<cplx>(), CMat::Zero(3, 3)), Vec::Zero(3)};
    auto surf = check_surface_pseudoconvexity(p, s, grid);
    ok &= surf.vacuous() || surf.passes();
    auto A = find_convexification_A(p, s, grid, 0.25, 1e4);
    if (!A.found || !std::isfinite(A.A)) {
      ok = false;
      d += " none";
      continue;
    }
    double post = check_function_pseudoconvexity(p, convexify(s, A.A), grid).slack();
    min_post = std::min(min_post, post);
    ok &= post >= 1e-6;
    d += " " + num(A.A);
  }
  return {ok, d + "; surfaces vacuous or positive; min post slack " + num(min_post)};
}

Outcome c6() {
  const double closed = 1 - std::pow(1.1 / 1.2, 2);
  bool ok = true;
  std::string d;
  for (double b : {1.0, 0.1}) {
    auto f = wave_foliation(1, 1.2, b, 1.1, ramp_profile(1.1));
    auto r = check_noncharacteristic(f, flat_metric(), Equation::Wave);
    double rel = std::abs(r.min_slack / closed - 1);
    ok &= r.pass && r.min_slack >= 0.1 && rel <= 0.02 && std::abs(r.worst[2]) < 1e-9;
    d += "b=" + num(b) + " slack " + num(r.min_slack) + " at w " + num(r.worst[2]) + "; ";
  }
  // randomized radius oracles
  auto f = wave_foliation(1, 1.2, 0.5, 1.1, ramp_profile(1.1));
  int good = 0;
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 20; ++k) {
    double r0 = 0.22 + 0.08 * u(rng), amp = 0.05 * u(rng), fr = 1 + 3 * u(rng), ph = 2 * pi * u(rng);
    CoverOptions o;
    o.depth_frac = 0.3;
    try {
      auto C = extract_cover(
          f, [=](const Vec& x, double) { return Radii{r0 + amp * std::sin(fr * x[0] + ph), 0.3, 0.15}; }, o);
      good += C.order.covers && C.order.ordree;
    } catch (const CheckFailed&) {
    }
  }
  ok &= good == 20;
  d += std::to_string(good) + "/20 oracle covers; ";
  // three-leaf flat instance
  Vec lo(1), hi(1);
  lo << 0;
  hi << 1;
  auto ff = flat_foliation(lo, hi);
  CoverOptions co;
  co.eps0 = 0.45;
  co.candidates = 56;
  auto C = extract_cover(ff, constant_radii(0.6, 0.1, 0.3), co);
  auto cg = build_dependence_graph(ff, C, below_set(0.5, 2), below_set(0.6, 2), 31);
  auto s = propagate_dependence(cg);
  auto rr = replay(cg.graph, s);
  ok &= C.leaves.size() == 3 && rr.ok;
  d += std::to_string(C.leaves.size()) + " leaves, " + std::to_string(s.steps.size()) +
       " steps, replay " + (rr.ok ? "ok" : rr.message);
  return {ok, d};
}

Outcome c7() {
  double drift = 0;
  auto ip = interval_problem(1, 2.5, boundary_side(0), 256);
  auto rp = rectangle_problem(1, 1, 2.5, boundary_side(0), 64, 64);
  for (const auto* p : {&ip, &rp}) {
    auto data = smooth_data(*p, 707);
    for (Equation eq : {Equation::Wave, Equation::Schrodinger}) {
      auto tr = solve(*p, data, eq);
      double e0 = tr.energy(0);
      for (int i = 1; i <= 40; ++i) drift = std::max(drift, std::abs(tr.energy(0.0625 * i) / e0 - 1));
    }
  }
  const double T = 2.5;
  auto sq = rectangle_problem(pi, pi, T, boundary_side(0), 20, 20);
  double worst = 0;
  std::string d = "max relative drift " + num(drift) + "; quotient deviation";
  for (int m : {4, 8, 16}) {
    auto s = mode_state(sq, 1, m);
    double o = observe(solve(sq, s, Equation::Wave));
    double q = o * o / std::pow(norm_h1_l2(sq, s), 2);
    double dev = q / (T / (pi * (1 + m * m))) - 1;
    worst = std::max(worst, std::abs(dev));
    d += " m=" + std::to_string(m) + ": " + num(100 * dev) + "%";
  }
  return {drift <= 1e-10 && worst < 0.05, d};
}

Outcome c8() {
  auto sq = rectangle_problem(1, 1, 2.5, boundary_side(0), 64, 64);
  auto rs = filtered_stability(sq, distinct_frequencies(sq, 40));
  auto ip = interval_problem(1, 2.5, boundary_side(0), 256);
  auto ri = filtered_stability(ip, distinct_frequencies(ip, 40));
  bool ok = rs.bound_holds && rs.fit.residual < 0.05 && ri.kappa_hat <= 0.05;
  std::string d = "rectangle: mu up to " + num(rs.rows.back().mu) + ", C " + num(rs.C_hat) +
                  ", kappa " + num(rs.kappa_hat) + ", bound violations " +
                  std::to_string(rs.violations) + ", fit residual " + num(rs.fit.residual) +
                  (rs.fit.residual < 0.05 ? "" : " (above 0.05)") + "; interval kappa " +
                  num(ri.kappa_hat);
  return {ok, d};
}

Outcome c9() {
  const std::vector<double> eps{0.3, 0.1, 0.03, 0.01};
  auto ip = interval_problem(1, 2.5, boundary_side(0), 256);
  StatePair di = zero_state(ip);
  for (int j = 1; j <= 5; ++j) di.u0 += mode_state(ip, j).u0;
  auto si = control_cost_sweep(ip, di, eps);
  auto sq = rectangle_problem(1, 1, 2.5, boundary_side(0), 256, 16);
  auto ss = control_cost_sweep(sq, mode_state(sq, 1, 8), eps);
  bool dev = true;
  for (const auto* s : {&si, &ss})
    for (const auto& r : s->runs) dev &= r.deviation <= r.target && r.truncation_ok;
  bool ok = dev && ss.monotone && ss.fit.slope >= 0 && si.ratio < 3;
  std::string d = std::string("deviations ") + (dev ? "within" : "NOT within") +
                  " target; rectangle costs";
  for (const auto& r : ss.runs) d += " " + num(r.cost);
  d += ", slope " + num(ss.fit.slope) + (ss.monotone ? ", monotone" : ", not monotone") +
       "; interval ratio " + num(si.ratio);
  return {ok, d};
}

Outcome c10() {
  auto ls = log_stability_constants(1, 1, 1, 1);
  // plain dense maximization of sqrt(x (1 + x)) log(1 / x + 1) / 2 over (0, 1]
  double best = 0;
  for (int i = 1; i <= 2000000; ++i) {
    double x = i / 2000000.0;
    best = std::max(best, std::sqrt(x * (1 + x)) * std::log(1 / x + 1) / 2);
  }
  double oracle = 2 * (best + 1);
  auto h = validate_log_stability(ls, 10000, 1010);
  bool ok = std::abs(ls.D1 / oracle - 1) <= 0.02 && h.violations_a == 0 && h.violations_c == 0;
  return {ok, "D1 " + num(ls.D1) + " vs oracle " + num(oracle) + "; violations " +
                  std::to_string(h.violations_a) + " + " + std::to_string(h.violations_c) +
                  " over " + std::to_string(h.triples) + " triples"};
}

}  // namespace

int main() {
  criterion(1, "quadrant kernel identities", 10, c1);
  criterion(2, "Green extension harmonicity order", 60, c2);
  criterion(3, "barrier certification", 120, c3);
  criterion(4, "mollifier decay suite", 120, c4);
  criterion(5, "pseudoconvexity of planes and convexification", 60, c5);
  criterion(6, "foliation engine", 60, c6);
  criterion(7, "conservation and observability closed form", 120, c7);
  criterion(8, "filtered stability shape", 600, c8);
  criterion(9, "control cost shape", 600, c9);
  criterion(10, "log-stability constants", 10, c10);
  std::printf("%d/%d criteria pass\n", total - failures, total);
  return failures ? 1 : 0;
}
