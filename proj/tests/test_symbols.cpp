#include <random>

#include "doctest.h"
#include "ulab/symbols.hpp"

using namespace ulab;

namespace {

PhasePoint pp(std::vector<double> x, std::vector<cplx> xi, double tau = 0) {
  PhasePoint p;
  p.x = Eigen::Map<Vec>(x.data(), x.size());
  p.xi = Eigen::Map<CVec>(xi.data(), xi.size());
  p.tau = tau;
  return p;
}

// p = xi^2 in one variable
SymbolPoly xi_squared() { return diagonal_quadratic(0, 1, {1.0}); }

Coefficient x_squared() {
  CMat q(1, 1);
  q << 2.0;
  return Coefficient::quadratic(0.0, CVec::Zero(1), q);
}

Coefficient random_quadratic(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec a(n);
  CMat q(n, n);
  for (int i = 0; i < n; ++i) a[i] = cplx(nd(rng), nd(rng));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = cplx(nd(rng), nd(rng));
  return Coefficient::quadratic(cplx(nd(rng), nd(rng)), a, q);
}

// random symbol of degree <= 2 in (xi, tau) with quadratic coefficients
SymbolPoly random_symbol(int na, int nb, std::mt19937_64& rng) {
  int n = na + nb;
  SymbolPoly s(na, nb, 2);
  std::uniform_int_distribution<int> pick(0, n);
  for (int t = 0; t < 4; ++t) {
    MultiIndex al(n + 1, 0);
    int deg = t % 3;
    for (int d = 0; d < deg; ++d) al[pick(rng)] += 1;
    s.add_term(al, random_quadratic(n, rng));
  }
  return s;
}

PhasePoint random_point(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  PhasePoint p;
  p.x = Vec(n);
  p.xi = CVec(n);
  for (int i = 0; i < n; ++i) {
    p.x[i] = nd(rng);
    p.xi[i] = nd(rng);
  }
  p.tau = std::abs(nd(rng));
  return p;
}

}  // namespace

TEST_CASE("eval: wave symbol monomials") {
  SymbolPoly p = wave_symbol(1, 1);
  CHECK(p.eval(pp({0.3, -2.0}, {1.0, 0.0})) == cplx(1.0, 0.0));
  for (double b : {0.5, 1.0, -3.0}) {
    cplx v = p.eval(pp({1.0, 1.0}, {0.0, b}));
    CHECK(v.real() == doctest::Approx(-b * b));
    CHECK(v.real() < 0);
  }
}

TEST_CASE("eval: complexified frequency") {
  // xi + i tau psi'(x) with psi = x^2, x = 1, tau = 1, xi = 1
  cplx v = xi_squared().eval(pp({1.0}, {cplx(1.0, 2.0)}));
  CHECK(v.real() == doctest::Approx(-3.0));
  CHECK(v.imag() == doctest::Approx(4.0));
  SymbolPoly pw = conjugate_weight(xi_squared(), x_squared(), 1.0);
  cplx w = pw.eval(pp({1.0}, {1.0}, 1.0));
  CHECK(std::abs(w - cplx(-3.0, 4.0)) < 1e-14);
}

TEST_CASE("eval: dimension mismatch rejected") {
  SymbolPoly p = wave_symbol(1, 1);
  CHECK_THROWS_AS(p.eval(pp({0.0}, {1.0, 0.0})), InvalidInput);
  CHECK_THROWS_AS(p.eval(pp({0.0, 0.0}, {1.0})), InvalidInput);
  MultiIndex bad{3, 0, 0};
  CHECK_THROWS_AS(p.add_term(bad, Coefficient::constant(2, 1.0)), InvalidInput);
}

TEST_CASE("poisson bracket: canonical pair and constants") {
  SymbolPoly xi1(0, 1, 1);
  xi1.add_term({1, 0}, Coefficient::constant(1, 1.0));
  SymbolPoly x1 = SymbolPoly::function(0, 1, Coefficient::coordinate(1, 0));
  SymbolPoly b = poisson_bracket(xi1, x1);
  for (double x : {-1.0, 0.0, 2.5})
    CHECK(std::abs(b.eval(pp({x}, {0.7}, 0.3)) - cplx(1.0)) < 1e-15);
  SymbolPoly z = poisson_bracket(wave_symbol(1, 2), diagonal_quadratic(1, 2, {2.0, 1.0, cplx(0, 1)}));
  CHECK(std::abs(z.eval(pp({1, 2, 3}, {0.4, -1.0, 2.0}, 0.5))) == 0.0);
}

TEST_CASE("poisson bracket: conjugated xi^2 with psi = x^2 gives 16(xi^2 + 4 tau^2 x^2)") {
  for (double tau : {1.0, 0.5, 2.0}) {
    SymbolPoly pw = conjugate_weight(xi_squared(), x_squared(), tau);
    SymbolPoly br = poisson_bracket(pw.conj(), pw);
    for (auto [x, xi] : {std::pair{1.0, 0.0}, {0.5, 1.5}, {-2.0, 0.3}}) {
      cplx v = br.eval(pp({x}, {xi}, tau)) / cplx(0.0, tau);
      CHECK(std::abs(v.imag()) < 1e-12);
      CHECK(v.real() == doctest::Approx(16 * (xi * xi + 4 * tau * tau * x * x)).epsilon(1e-13));
    }
  }
  SymbolPoly pw = conjugate_weight(xi_squared(), x_squared(), 1.0);
  cplx v = poisson_bracket(pw.conj(), pw).eval(pp({1.0}, {0.0}, 1.0)) / cplx(0.0, 1.0);
  CHECK(v.real() == doctest::Approx(64.0));
}

TEST_CASE("poisson bracket: missing gradient data rejected") {
  Coefficient valonly(1, [](const Vec& x) { Jet j; j.v = x[0] * x[0]; return j; }, 0);
  SymbolPoly q(0, 1, 1);
  q.add_term({1, 0}, valonly);
  CHECK_THROWS_AS(poisson_bracket(xi_squared(), q), InvalidInput);
  SymbolPoly other(1, 1, 1);
  CHECK_THROWS_AS(poisson_bracket(xi_squared(), other), InvalidInput);
}

TEST_CASE("poisson bracket: callable coefficients match closed forms") {
  // p = sin(x) xi^2, q = x xi ; {p,q} = 2 sin(x) xi * xi - cos(x) xi^2 * x
  Coefficient s(1, [](const Vec& x) {
    Jet j;
    j.v = std::sin(x[0]);
    j.g = CVec::Constant(1, std::cos(x[0]));
    j.h = CMat::Constant(1, 1, -std::sin(x[0]));
    return j;
  }, 2);
  SymbolPoly p(0, 1, 2), q(0, 1, 1);
  p.add_term({2, 0}, s);
  q.add_term({1, 0}, Coefficient::coordinate(1, 0));
  SymbolPoly b = poisson_bracket(p, q);
  for (double x : {0.2, 1.3}) {
    double xi = 0.7;
    double expect = 2 * std::sin(x) * xi * xi - std::cos(x) * xi * xi * x;
    CHECK(b.eval(pp({x}, {xi})).real() == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("conjugate weight: zero shift and wave substitution") {
  SymbolPoly p = wave_symbol(1, 1);
  Coefficient psi = Coefficient::coordinate(2, 1);  // grad psi = (0, 1)
  SymbolPoly p0 = conjugate_weight(p, psi, 0.0);
  PhasePoint a = pp({0.1, 0.2}, {0.7, -0.4});
  CHECK(std::abs(p0.eval(a) - p.eval(a)) == 0.0);
  SymbolPoly p1 = conjugate_weight(p, psi, 1.0);
  CHECK(std::abs(p1.eval(pp({0.0, 0.0}, {0.0, 0.0}, 1.0)) - cplx(1.0)) < 1e-15);
  CHECK_THROWS_AS(conjugate_weight(p, psi, -1.0), InvalidInput);
}

TEST_CASE("conjugate weight: Im{p, psi}(x, xi + i grad psi) = 2 Q(grad psi)") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  SymbolPoly p = wave_symbol(1, 2);
  for (int t = 0; t < 10; ++t) {
    CVec g(3);
    for (int k = 0; k < 3; ++k) g[k] = nd(rng);
    Coefficient psi = Coefficient::quadratic(0.0, g, CMat::Zero(3, 3));
    SymbolPoly br = poisson_bracket(p, SymbolPoly::function(1, 2, psi));
    PhasePoint pt = random_point(3, rng);
    pt.xi = pt.xi + cplx(0, 1) * g;
    double q = std::norm(g[0]) - std::norm(g[1]) - std::norm(g[2]);
    CHECK(br.eval(pt).imag() == doctest::Approx(2 * q).epsilon(1e-12));
  }
}

TEST_CASE("property: antisymmetry, Leibniz, conjugation consistency, homogeneity") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    SymbolPoly p = random_symbol(1, 1, rng), q = random_symbol(1, 1, rng), r = random_symbol(1, 1, rng);
    PhasePoint pt = random_point(2, rng);
    cplx a = poisson_bracket(p, q).eval(pt), b = poisson_bracket(q, p).eval(pt);
    CHECK(std::abs(a + b) <= 1e-12 * std::max(1.0, std::abs(a)));
    cplx lhs = poisson_bracket(p, q * r).eval(pt);
    cplx rhs = poisson_bracket(p, q).eval(pt) * r.eval(pt) + q.eval(pt) * poisson_bracket(p, r).eval(pt);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));

    Coefficient psi = random_quadratic(2, rng);
    SymbolPoly pw = conjugate_weight(p, psi, pt.tau);
    PhasePoint sh = pt;
    sh.xi = pt.xi + cplx(0, pt.tau) * psi.jet(pt.x).g;
    cplx u = pw.eval(pt), v = p.eval(sh);
    CHECK(std::abs(u - v) <= 1e-12 * std::max(1.0, std::abs(v)));
  }
  SymbolPoly h = wave_symbol(2, 1) + diagonal_quadratic(2, 1, {cplx(0, 1), 2.0, 0.5});
  MultiIndex tt{0, 0, 0, 2};
  h.add_term(tt, Coefficient::constant(3, 3.0));
  CHECK(h.homogeneous());
  PhasePoint pt = random_point(3, rng);
  for (double s : {2.0, 0.5, 10.0}) {
    PhasePoint sp = pt;
    sp.xi *= s;
    sp.tau *= s;
    cplx a = h.eval(sp), b = s * s * h.eval(pt);
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
  }
}

TEST_CASE("principal normality defect") {
  Vec lo = Vec::Constant(2, -1.0), hi = Vec::Constant(2, 1.0);
  CHECK(principal_normality_defect(wave_symbol(1, 1), lo, hi, {5, 16}) == 0.0);
  // p = xi + i x : bracket 2i, |p(0, +-1)| = 1
  SymbolPoly p(0, 1, 1);
  p.add_term({1, 0}, Coefficient::constant(1, 1.0));
  p.add_term({0, 0}, Coefficient::coordinate(1, 0).scaled(cplx(0, 1)));
  cplx br = poisson_bracket(p.conj(), p).eval(pp({0.3}, {1.0}));
  CHECK(std::abs(br - cplx(0, 2)) < 1e-15);
  double d = principal_normality_defect(p, Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), {21, 2});
  CHECK(d == doctest::Approx(2.0));
  // variable real metric: still zero
  Coefficient m(2, [](const Vec& x) {
    Jet j;
    j.v = 2.0 + std::sin(x[1]);
    j.g = CVec::Zero(2);
    j.g[1] = std::cos(x[1]);
    j.h = CMat::Zero(2, 2);
    j.h(1, 1) = -std::sin(x[1]);
    return j;
  }, 2);
  SymbolPoly w(1, 1, 2);
  w.add_term({2, 0, 0}, Coefficient::constant(2, 1.0));
  w.add_term({0, 2, 0}, m.scaled(-1.0));
  CHECK(principal_normality_defect(w, lo, hi, {5, 16}) == 0.0);
}
