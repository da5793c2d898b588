#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ulab/mollify.hpp"

using namespace ulab;

namespace {

GridFunction line(int n, double L, const std::function<double(double)>& f) {
  return GridFunction::sample({-L / 2}, {L / 2}, {n}, {true},
                              [&](const Vec& p) { return cplx(f(p[0]), 0); });
}

double quad(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

double max_diff(const GridFunction& a, const GridFunction& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("grid rejects bad layouts") {
  CHECK_THROWS_AS(GridFunction({0}, {1}, {1}, {true}), InvalidInput);
  CHECK_THROWS_AS(GridFunction({0}, {0}, {4}, {true}), InvalidInput);
  CHECK_THROWS_AS(GridFunction({0, 0}, {1}, {4}, {true}), InvalidInput);
}

TEST_CASE("constant is invariant under smoothing") {
  auto f = line(64, 10, [](double) { return 1.0; });
  auto g = gaussian_smooth(f, 3.0);
  CHECK(max_diff(f, g) < 1e-13);
  CHECK_THROWS_AS(gaussian_smooth(f, 0.0), InvalidInput);
}

TEST_CASE("gaussian closed form") {
  double lam = 10;
  auto f = line(1024, 40, [](double x) { return std::exp(-x * x); });
  f.padding_precheck();
  auto g = gaussian_smooth(f, lam);
  double err = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double x = g.point(i)[0];
    double e = std::sqrt(lam / (lam + 4)) * std::exp(-lam * x * x / (lam + 4));
    err = std::max(err, std::abs(g[i] - e));
  }
  CHECK(err < 1e-12);
  CHECK(g.max_imag() == 0.0);
}

TEST_CASE("norm bounds, positivity, monotonicity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  auto f = line(256, 8, [&](double) { return u(rng); });
  auto h = line(256, 8, [&](double) { return u(rng); });
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::min(h[i].real(), f[i].real());
  for (double lam : {1.0, 10.0, 100.0}) {
    auto g = gaussian_smooth(f, lam);
    auto gh = gaussian_smooth(h, lam);
    CHECK(g.l2_norm() <= f.l2_norm() * (1 + 1e-14));
    CHECK(g.sup_norm() <= f.sup_norm() * (1 + 1e-12));
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(g[i].real() >= -1e-12 * f.sup_norm());
      CHECK(g[i].real() >= gh[i].real() - 1e-12);
    }
  }
  auto id = gaussian_smooth(f, std::numeric_limits<double>::infinity());
  CHECK(std::abs(id.l2_norm() - f.l2_norm()) <= 1e-10 * f.l2_norm());
}

TEST_CASE("semigroup and commutation") {
  auto f = line(512, 20, [](double x) { return std::abs(x) < 1 ? 1.0 - x * x : 0.0; });
  double a = 5, b = 20;
  auto g1 = gaussian_smooth(gaussian_smooth(f, a), b);
  auto g2 = gaussian_smooth(f, 1 / (1 / a + 1 / b));
  CHECK(max_diff(g1, g2) < 1e-12);
  Multiplier M{RadialCutoff{}, 4.0, 30.0};
  auto p = fourier_multiplier(gaussian_smooth(f, a), M);
  auto q = gaussian_smooth(fourier_multiplier(f, M), a);
  CHECK(max_diff(p, q) < 1e-12);
}

TEST_CASE("smoothing acts only on analytic axes") {
  auto f = GridFunction::sample({-12, -5}, {12, 5}, {96, 16}, {true, false}, [](const Vec& p) {
    return cplx(std::exp(-p[0] * p[0]) * (p[1] > 0 ? 1.0 : 0.0), 0);
  });
  auto g = gaussian_smooth(f, 4.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec x = g.point(i);
    double e = x[1] > 0 ? std::sqrt(0.5) * std::exp(-x[0] * x[0] / 2) : 0.0;
    CHECK(std::abs(g[i] - e) < 1e-9);
  }
}

TEST_CASE("cutoff profile") {
  RadialCutoff m;
  CHECK(m(0.0) == 1.0);
  CHECK(m(0.75) == 1.0);
  CHECK(m(1.0) == 0.0);
  CHECK(m(-0.5) == 1.0);
  for (double s = 0.76; s < 1; s += 0.01) {
    CHECK(m(s) > 0);
    CHECK(m(s) < 1);
    CHECK(m(s) + m.complement(s) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m(s + 0.005) <= m(s));
  }
}

TEST_CASE("regularized symbol against direct quadrature") {
  RadialCutoff m;
  for (double lam : {10.0, 100.0})
    for (double s : {0.0, 0.5, 0.9, 1.0, 1.3}) {
      auto k = [&](double t) {
        return std::sqrt(lam / (4 * std::numbers::pi)) * std::exp(-lam * (s - t) * (s - t) / 4) *
               m(t);
      };
      double ref = quad(k, -1, -0.75) + quad(k, -0.75, 0.75) + quad(k, 0.75, 1);
      CHECK(m.regularized(s, lam) == doctest::Approx(ref).epsilon(1e-10));
      CHECK(m.regularized(s, lam) + m.regularized_complement(s, lam) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  double v = m.regularized(1.0, 100);
  CHECK(v > 0);
  CHECK(v < 1);
  // deep inside the plateau the complement is tiny but still resolved
  double c = m.regularized_complement(0.25, 400);
  CHECK(c > 0);
  CHECK(c < 1e-14);
}

TEST_CASE("regularized symbol in two analytic axes") {
  RadialCutoff m;
  double lam = 40, rho = 0.9;
  // direct polar double integral of the 2D heat kernel against m(|y|)
  auto inner = [&](double r) {
    auto ang = [&](double th) {
      double d2 = rho * rho + r * r - 2 * rho * r * std::cos(th);
      return lam / (4 * std::numbers::pi) * std::exp(-lam * d2 / 4);
    };
    return r * m(r) * quad(ang, 0, 2 * std::numbers::pi);
  };
  double ref = quad(inner, 0, 0.75) + quad(inner, 0.75, 1);
  CHECK(m.regularized(rho, lam, 2) == doctest::Approx(ref).epsilon(1e-8));
  CHECK(m.regularized(rho, lam, 2) + m.regularized_complement(rho, lam, 2) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(m.regularized(0.5, lam, 3), InvalidInput);
}

TEST_CASE("plane waves are eigenfunctions of the multiplier") {
  double L = 2 * std::numbers::pi * 4;
  double mu = 4;
  auto wave = [&](int j) {
    double k = 2 * std::numbers::pi * j / L;
    return GridFunction::sample({0}, {L}, {128}, {true},
                                [&](const Vec& p) { return std::exp(cplx(0, k * p[0])); });
  };
  Multiplier exact{RadialCutoff{}, mu, std::nullopt};
  auto half = wave(8);  // xi = 2 = mu / 2
  CHECK(max_diff(fourier_multiplier(half, exact), half) < 1e-12);
  auto far = wave(32);  // xi = 8 = 2 mu
  CHECK(fourier_multiplier(far, exact).sup_norm() < 1e-12);
  Multiplier reg{RadialCutoff{}, mu, 20.0};
  auto w = wave(15);
  auto out = fourier_multiplier(w, reg);
  double e = RadialCutoff{}.regularized(15.0 / 4 / mu, 20.0);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(out[i] - e * w[i]) < 1e-12);
  CHECK_THROWS_AS(fourier_multiplier(w, Multiplier{RadialCutoff{}, 0.0, std::nullopt}), InvalidInput);
}

TEST_CASE("carleman conjugation") {
  auto u = line(256, 16, [](double x) { return std::abs(x) < 2 ? std::cos(x) : 0.0; });
  auto zero = u.like();
  double tau = 3, eps = 0.5;
  CHECK(max_diff(carleman_conjugate(u, zero, tau, eps), gaussian_smooth(u, 2 * tau / eps)) < 1e-14);
  auto psi = line(256, 16, [](double x) { return 0.1 * x; });
  auto q = carleman_conjugate(u, psi, tau, 1e-9);
  auto w = u;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= std::exp(tau * psi[i].real());
  CHECK(max_diff(q, w) < 1e-6);
  CHECK_THROWS_AS(carleman_conjugate(u, psi, 0.5, eps), InvalidInput);
  CHECK_THROWS_AS(carleman_conjugate(u, psi, tau, 0.0), InvalidInput);
  auto big = line(256, 16, [](double x) { return 400.0 + x; });
  CHECK_THROWS_AS(carleman_conjugate(u, big, 2.0, eps), InvalidInput);
  // huge psi away from supp u is fine
  auto outside = line(256, 16, [](double x) { return std::abs(x) < 2 ? 0.0 : 1e4; });
  CHECK_NOTHROW(carleman_conjugate(u, outside, 2.0, eps));
}

TEST_CASE("padding precheck") {
  auto narrow = line(256, 40, [](double x) { return std::exp(-x * x); });
  CHECK_NOTHROW(narrow.padding_precheck());
  auto wide = line(256, 10, [](double x) { return std::exp(-x * x / 4); });
  CHECK_THROWS_AS(wide.padding_precheck(), InvalidInput);
}

TEST_CASE("serialization round trip") {
  auto f = GridFunction::sample({-1, 0}, {1, 3}, {4, 3}, {true, false},
                                [](const Vec& p) { return cplx(p[0], p[1]); });
  std::stringstream ss;
  f.write_binary(ss);
  auto g = GridFunction::read_binary(ss);
  CHECK(g.counts() == f.counts());
  CHECK(g.analytic() == f.analytic());
  CHECK(max_diff(f, g) == 0.0);
  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(GridFunction::read_binary(bad), InvalidInput);
  std::ostringstream csv;
  f.write_csv(csv);
  CHECK(csv.str().rfind("x0,x1,re,im\n", 0) == 0);
}

TEST_CASE("one-dimensional closed forms") {
  PiecewiseConstant1D f{{0, 1, 3}, {1, -2}};
  double lam = 30;
  for (double x : {-1.0, 0.5, 2.0, 5.0}) {
    auto k = [&](double y) {
      return std::sqrt(lam / (4 * std::numbers::pi)) * std::exp(-lam * (x - y) * (x - y) / 4);
    };
    double ref = quad(k, 0, 1) - 2 * quad(k, 1, 3);
    CHECK(f.smoothed(x, lam) == doctest::Approx(ref).epsilon(1e-11));
  }
  auto b = bump(-1, 1);
  double h = 1e-4;
  for (double x : {-0.3, 0.2, 1.4}) {
    double d1 = (b.smoothed(x + h, lam) - b.smoothed(x - h, lam)) / (2 * h);
    CHECK(b.smoothed(x, lam, 1) == doctest::Approx(d1).epsilon(1e-6));
    double d2 = (b.smoothed(x + h, lam, 1) - b.smoothed(x - h, lam, 1)) / (2 * h);
    CHECK(b.smoothed(x, lam, 2) == doctest::Approx(d2).epsilon(1e-6));
    CHECK(std::abs(b.smoothed_complex(cplx(x, 0), lam) - b.smoothed(x, lam)) < 1e-13);
  }
  for (double y : {0.1, 0.3, 0.6}) {
    cplx z(0.4, y);
    CHECK(std::abs(b.smoothed_complex(z, lam)) <= b.sup_norm() * std::exp(lam * y * y / 4));
  }
}

TEST_CASE("disjoint support decay") {
  for (double d : {0.5, 1.0, 2.0}) {
    auto r = disjoint_support(d);
    CHECK(r.pass);
    CHECK(r.fit.slope == doctest::Approx(-d * d / 4).epsilon(0.2));
  }
  PiecewiseConstant1D f1{{0, 1}, {1}}, f2{{1.5, 2}, {1}};
  CHECK_THROWS_AS(disjoint_support(f1, f2, default_lambdas(), 1.0), InvalidInput);
}

TEST_CASE("other decay harnesses") {
  CHECK(support_nesting(1.0).pass);
  CHECK(smooth_disjoint(1.0, 2).pass);
  auto lf = localized_fourier();
  CHECK(lf.pass);
  auto w = weighted_cutoff();
  CHECK(w.pass);
  CHECK(w.C > 0);
  auto lh = low_high_split();
  CHECK(lh.bound_holds);
  CHECK(lh.pass);
  CHECK_THROWS_AS(measure_decay("nope"), InvalidInput);
}

TEST_CASE("multiplier commutation decays" * doctest::timeout(120)) {
  auto r = multiplier_commutation({16, 32, 64, 128});
  CHECK(r.pass);
  CHECK(r.fit.slope < 0);
}
