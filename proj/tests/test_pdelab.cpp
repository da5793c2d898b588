#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "ulab/pdelab.hpp"

using namespace ulab;
using std::numbers::pi;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

StatePair smooth_data(const ControlProblem& p, int active) {
  StatePair s = zero_state(p);
  for (int k = 0; k < active; ++k) {
    s.u0[k] = std::exp(-0.2 * k) * (k % 3 ? 1.0 : -0.5);
    s.u1[k] = 0.7 / (k + 1.0);
  }
  return s;
}

}  // namespace

TEST_CASE("eigenmode closed forms") {
  // sin(pi x) is e_1 / sqrt(2) on [0, 1]
  auto ip = interval_problem(1, 2, boundary_side(0), 16);
  auto tr = solve(ip, mode_state(ip, 1, 0, 1 / std::sqrt(2.0)), Equation::Wave);
  auto ts = solve(ip, mode_state(ip, 1, 0, 1 / std::sqrt(2.0)), Equation::Schrodinger);
  for (double t : {0.0, 0.3, 1.1, 1.7})
    for (double x : {0.1, 0.5, 0.77}) {
      CHECK(std::abs(tr.value(t, v1(x)) - std::cos(pi * t) * std::sin(pi * x)) < 1e-13);
      cplx want = std::exp(cplx(0, -pi * pi * t)) * std::sin(pi * x);
      CHECK(std::abs(ts.value(t, v1(x)) - want) < 1e-12);
    }

  // (2 / pi) sin x sin(m y) is the normalized (1, m) mode of [0, pi]^2
  auto rp = rectangle_problem(pi, pi, 2.5, boundary_side(0), 8, 8);
  for (int m : {1, 3, 7}) {
    auto r = solve(rp, mode_state(rp, 1, m, pi / 2), Equation::Wave);
    double w = std::sqrt(1.0 + m * m);
    for (double t : {0.0, 0.9, 2.2}) {
      Vec x = v2(0.4, 1.3);
      double want = std::sin(0.4) * std::sin(m * 1.3) * std::cos(w * t);
      CHECK(std::abs(r.value(t, x) - want) < 1e-12);
    }
  }
}

TEST_CASE("conservation and Parseval") {
  auto ip = interval_problem(1, 2.5, boundary_side(0), 64);
  auto d = smooth_data(ip, 64);
  auto tw = solve(ip, d, Equation::Wave);
  auto ts = solve(ip, d, Equation::Schrodinger);
  double ew = tw.energy(0), es = ts.energy(0);
  CHECK(ew == doctest::Approx(std::pow(norm_h1_l2(ip, d), 2)).epsilon(1e-14));
  for (int i = 0; i <= 50; ++i) {
    double t = i * 0.05;
    CHECK(std::abs(tw.energy(t) / ew - 1) < 1e-10);
    CHECK(std::abs(ts.energy(t) / es - 1) < 1e-10);
  }

  // a real potential keeps the Schrodinger L^2 norm
  auto iv = ip;
  iv.V = [](const Vec& x) { return 1 - 2 * x[0]; };
  auto tv = solve(iv, d, Equation::Schrodinger);
  for (double t : {0.4, 1.3, 2.5}) CHECK(std::abs(tv.energy(t) / tv.energy(0) - 1) < 1e-10);

  // midpoint rule is exact below its point count
  CHECK(std::abs(grid_l2(ip, d.u0, 128) / norm_l2(d.u0) - 1) < 1e-10);
  auto rp = rectangle_problem(1, 2, 1, boundary_side(0), 6, 5);
  StatePair r = zero_state(rp);
  for (int i = 0; i < r.u0.size(); ++i) r.u0[i] = cplx(std::sin(i + 1.0), 0.3 * std::cos(2.0 * i));
  CHECK(std::abs(grid_l2(rp, r.u0, 24) / norm_l2(r.u0) - 1) < 1e-10);
}

TEST_CASE("rejects bad problems and data") {
  CHECK_THROWS_AS(interval_problem(0, 1, boundary_side(0)), InvalidInput);
  CHECK_THROWS_AS(interval_problem(1, -1, boundary_side(0)), InvalidInput);
  CHECK_THROWS_AS(interval_problem(1, 1, boundary_side(2)), InvalidInput);
  CHECK_THROWS_AS(interval_problem(1, 1, interior_box(v1(0.5), v1(0.5))), InvalidInput);
  CHECK_THROWS_AS(rectangle_problem(1, 1, 1, boundary_side(0, 0.5, 1.5)), InvalidInput);
  CHECK_THROWS_AS(rectangle_problem(1, 1, 1, interior_box(v2(0, 0), v2(2, 1))), InvalidInput);

  auto ip = interval_problem(1, 1, boundary_side(0), 8);
  CHECK_THROWS_AS(mode_state(ip, 9), InvalidInput);
  StatePair big{CVec::Zero(9), CVec::Zero(9)};
  CHECK_THROWS_AS(solve(ip, big, Equation::Wave), InvalidInput);

  auto iw = ip;
  iw.W0 = [](const Vec&) { return 1.0; };
  CHECK_THROWS_AS(solve(iw, mode_state(iw, 1), Equation::Schrodinger), InvalidInput);

  // wave stability needs T > 2 L(M, Gamma)
  auto shortT = interval_problem(1, 1.9, boundary_side(0), 16);
  CHECK_THROWS_AS(filtered_stability(shortT, {3.0}), InvalidInput);
  CHECK_NOTHROW(filtered_stability(shortT, {3.0}, Equation::Schrodinger));

  CHECK_THROWS_AS(hum_control(ip, mode_state(ip, 1), 1.0), InvalidInput);
  CHECK_THROWS_AS(hum_control(ip, mode_state(ip, 1, 0, cplx(0, 1)), 0.1), InvalidInput);
}

TEST_CASE("geometric length") {
  CHECK(geometric_length(interval_problem(2, 1, boundary_side(0))) == doctest::Approx(2));
  CHECK(geometric_length(interval_problem(1, 1, boundary_side(1))) == doctest::Approx(1));
  CHECK(geometric_length(interval_problem(1, 1, interior_box(v1(0.2), v1(0.5)))) ==
        doctest::Approx(0.5));
  CHECK(geometric_length(rectangle_problem(1, 1, 1, boundary_side(0))) == doctest::Approx(1));
  CHECK(geometric_length(rectangle_problem(1, 1, 1, boundary_side(0, 0, 0.5))) ==
        doctest::Approx(std::hypot(1, 0.5)));
  CHECK(geometric_length(rectangle_problem(2, 1, 1, boundary_side(3))) == doctest::Approx(1));
  CHECK(geometric_length(rectangle_problem(pi, pi, 1, boundary_side(0))) == doctest::Approx(pi));
}

TEST_CASE("observation closed forms") {
  // sin(n pi x) cos(n pi t) at x = 0 over (0, 2): n^2 pi^2
  auto ip = interval_problem(1, 2, boundary_side(0), 32);
  for (int n : {1, 3, 7, 20}) {
    double o = observe(solve(ip, mode_state(ip, n, 0, 1 / std::sqrt(2.0)), Equation::Wave));
    CHECK(o * o == doctest::Approx(n * n * pi * pi).epsilon(1e-9));
  }
  // same trace at x = 1 up to sign
  auto ir = interval_problem(1, 2, boundary_side(1), 32);
  double o1 = observe(solve(ir, mode_state(ir, 3, 0, 1 / std::sqrt(2.0)), Equation::Wave));
  CHECK(o1 * o1 == doctest::Approx(9 * pi * pi).epsilon(1e-9));

  // [0, pi]^2, x = 0 side, mode (1, m): T / (pi (1 + m^2)) (1 + sin(2 w T) / (2 w T))
  const double T = 2.5;
  auto rp = rectangle_problem(pi, pi, T, boundary_side(0), 20, 20);
  for (int m : {4, 8, 16}) {
    auto s = mode_state(rp, 1, m);
    double o = observe(solve(rp, s, Equation::Wave));
    double q = o * o / std::pow(norm_h1_l2(rp, s), 2);
    double w = std::sqrt(1.0 + m * m);
    double lead = T / (pi * (1 + m * m));
    CHECK(q == doctest::Approx(lead * (1 + std::sin(2 * w * T) / (2 * w * T))).epsilon(1e-9));
    CHECK(std::abs(q / lead - 1) < 0.05);
  }

  // whole-domain interior observation over whole periods: (T / 2) |u0|^2_{H^1}
  auto iw = interval_problem(1, 2, interior_box(v1(0), v1(1)), 16);
  for (int n : {1, 4}) {
    auto s = mode_state(iw, n);
    double o = observe(solve(iw, s, Equation::Wave));
    double h1 = 1 + std::pow(n * pi, 2);
    CHECK(o * o >= (1 - 1e-10) * 1.0 * h1);
  }

  // Schrodinger trace of e_n at x = 0 over (-T, T)
  auto is = interval_problem(1, 0.7, boundary_side(0), 16);
  double os = observe(solve(is, mode_state(is, 2), Equation::Schrodinger));
  CHECK(os * os == doctest::Approx(2 * std::pow(2 * pi, 2) * 2 * 0.7).epsilon(1e-9));
}

TEST_CASE("Gramian is symmetric PSD and matches observe") {
  auto rp = rectangle_problem(1, 1.3, 1.7, boundary_side(2, 0.2, 0.9), 5, 5);
  auto ms = modes(rp);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N(0, 1);
  for (Equation eq : {Equation::Wave, Equation::Schrodinger}) {
    Mat G = observability_gramian(rp, ms, eq);
    CHECK((G - G.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * G.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    CHECK(es.eigenvalues().minCoeff() > -1e-10 * es.eigenvalues().maxCoeff());
    StatePair s = zero_state(rp);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      s.u0[i] = N(rng);
      s.u1[i] = eq == Equation::Wave ? N(rng) : 0.0;
    }
    Vec x(G.rows());
    if (eq == Equation::Wave)
      x << s.u0.real(), s.u1.real();
    else
      x = s.u0.real();
    double o = observe(solve(rp, s, eq));
    CHECK(o * o == doctest::Approx(x.dot(G * x)).epsilon(1e-8));
  }

  // the lower-order path with V = 0 reproduces the closed form
  auto ip = interval_problem(1, 2.5, boundary_side(0), 24);
  auto iz = ip;
  iz.V = [](const Vec&) { return 0.0; };
  Mat G1 = observability_gramian(ip, modes(ip), Equation::Wave);
  Mat G2 = observability_gramian(iz, modes(iz), Equation::Wave);
  CHECK((G1 - G2).norm() < 1e-9 * G1.norm());
}

TEST_CASE("filtered stability") {
  auto ip = interval_problem(1, 2.5, boundary_side(0), 64);
  auto mus = distinct_frequencies(ip, 40);
  REQUIRE(mus.size() == 40);
  CHECK(mus[0] == doctest::Approx(pi));
  auto r = filtered_stability(ip, mus);
  CHECK(r.length == doctest::Approx(1));
  CHECK(std::abs(r.kappa_hat) <= 0.05);
  CHECK(r.bound_holds);
  double lo = 1e300, hi = 0;
  for (const auto& row : r.rows) {
    lo = std::min(lo, row.cost);
    hi = std::max(hi, row.cost);
    CHECK(row.shift == 0);
  }
  CHECK(hi / lo < 2);  // plateau

  // empty band
  auto e = filtered_stability(ip, {1.0, 4.0});
  CHECK(e.rows[0].cost == 0);
  CHECK(e.rows[0].modes == 0);
  CHECK(e.rows[1].cost > 0);

  // unit square, one side: cost grows, the fitted bound holds
  auto sq = rectangle_problem(1, 1, 2.5, boundary_side(0), 12, 12);
  auto rs = filtered_stability(sq, distinct_frequencies(sq, 25));
  CHECK(rs.kappa_hat > 0);
  CHECK(rs.bound_holds);
  for (std::size_t i = 1; i < rs.rows.size(); ++i)
    CHECK(rs.rows[i].cost >= rs.rows[i - 1].cost * (1 - 1e-9));
  CHECK(rs.rows.back().cost > 5 * rs.rows.front().cost);

  // toggling a bounded potential barely moves the rate
  auto small = rectangle_problem(1, 1, 2.5, boundary_side(0), 8, 8);
  auto sv = small;
  sv.V = [](const Vec& x) { return std::cos(3 * x[0]) * std::sin(2 * x[1]); };
  auto m2 = distinct_frequencies(small, 15);
  auto k0 = filtered_stability(small, m2).kappa_hat;
  auto k1 = filtered_stability(sv, m2).kappa_hat;
  CHECK(std::abs(k1 - k0) < 0.25 * std::abs(k0));
}

TEST_CASE("HUM control") {
  auto ip = interval_problem(1, 2.5, boundary_side(0), 64);
  auto zero = hum_control(ip, zero_state(ip), 0.1);
  CHECK(zero.cost == 0);
  CHECK(zero.deviation == 0);
  CHECK(control_value(ip, zero, 1.0, side_point(ip, 0)) == 0);

  auto d = smooth_data(ip, 6);
  auto r = hum_control(ip, d, 0.05);
  CHECK(r.deviation <= r.target);
  CHECK(r.target == doctest::Approx(0.05 * norm_h1_l2(ip, d)));
  CHECK(r.cg_residual < 1e-10);
  CHECK(r.truncation_ok);

  // cost from the Gramian agrees with the sampled control
  double s2 = 0;
  const int M = 20000;
  for (int i = 0; i < M; ++i) {
    double t = (i + 0.5) * ip.T / M, g = control_value(ip, r, t, side_point(ip, 0));
    s2 += g * g * ip.T / M;
  }
  CHECK(std::sqrt(s2) == doctest::Approx(r.cost).epsilon(1e-6));

  // the control minimizes the penalized functional
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0, 1);
  double J = r.penalized(r.phi);
  for (int k = 0; k < 50; ++k) {
    Vec dphi(r.phi.size());
    for (int i = 0; i < dphi.size(); ++i) dphi[i] = N(rng);
    dphi *= 1e-3 * r.phi.norm() / dphi.norm();
    CHECK(r.penalized(r.phi + dphi) >= J - 1e-8);
  }

  // exact controllability: the cost plateaus
  auto sw = control_cost_sweep(ip, d, {0.3, 0.1, 0.03, 0.01});
  CHECK(sw.monotone);
  CHECK(sw.ratio < 3);
  for (const auto& run : sw.runs) CHECK(run.deviation <= run.target);

  // interior control with L^2 forcing
  auto ii = interval_problem(1, 2.5, interior_box(v1(0.2), v1(0.5)), 32);
  auto ri = hum_control(ii, smooth_data(ii, 4), 0.05);
  CHECK(ri.deviation <= ri.target);
  double si = 0;
  for (int i = 0; i < 2000; ++i)
    for (int j = 0; j < 40; ++j) {
      double t = (i + 0.5) * 2.5 / 2000, x = 0.2 + (j + 0.5) * 0.3 / 40;
      double g = control_value(ii, ri, t, v1(x));
      si += g * g * (2.5 / 2000) * (0.3 / 40);
    }
  CHECK(std::sqrt(si) == doctest::Approx(ri.cost).epsilon(1e-3));
}

TEST_CASE("HUM cost grows on the square") {
  auto sq = rectangle_problem(1, 1, 2.5, boundary_side(0), 128, 16);
  auto sw = control_cost_sweep(sq, mode_state(sq, 1, 8), {0.3, 0.1, 0.03, 0.01});
  CHECK(sw.monotone);
  CHECK(sw.fit.slope >= 0);
  CHECK(sw.ratio > 100);
  for (const auto& run : sw.runs) {
    CHECK(run.deviation <= run.target);
    CHECK(run.basis.size() == 128);  // only the k = 8 column couples
  }
}

TEST_CASE("log stability constants") {
  auto ls = log_stability_constants(1, 1, 1, 1);
  double oracle = std::sqrt(2.0) * 0.5 * std::log(2.0);  // sup at x = C2 = 1
  CHECK(ls.C3 == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(ls.C3 == doctest::Approx(0.490).epsilon(1e-3));
  CHECK(ls.D1 == doctest::Approx(2 * (oracle + 1)).epsilon(1e-9));
  CHECK(ls.D2 == doctest::Approx(ls.D1));

  // a = b = c: the first bound is D1 / log 2 >= 1
  auto [ba, bc] = ls.apply(1, 1, 1);
  CHECK(1 <= ba);
  CHECK(ba == doctest::Approx(ls.D1 / std::log(2.0)));
  CHECK(1 <= bc);

  // mu0 dominates
  auto big = log_stability_constants(0.5, 1, 2, 3);
  CHECK(big.D1 == doctest::Approx(std::pow(1.0, 2) * std::max(big.C3 + 1, 9.0)));
  CHECK(big.D2 == doctest::Approx(std::sqrt(big.D1)));

  // sqrt(x (1 + x)) log(1 / x + 1) / 2 increases to 1/2
  auto wide = log_stability_constants(1, 50, 1, 0.1);
  CHECK(wide.C3 > 0.499);
  CHECK(wide.C3 <= 0.5);

  auto hc = validate_log_stability(ls, 10000, 42);
  CHECK(hc.triples == 10000);
  CHECK(hc.violations_a == 0);
  CHECK(hc.violations_c == 0);
  auto h2 = validate_log_stability(big, 2000, 3);
  CHECK(h2.violations_a + h2.violations_c == 0);

  CHECK_THROWS_AS(log_stability_constants(0, 1, 1, 1), InvalidInput);
}
