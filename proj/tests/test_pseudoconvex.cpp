#include <random>

#include "doctest.h"
#include "ulab/pseudoconvex.hpp"

using namespace ulab;

namespace {

OrientedSurface plane(const Vec& g, const Vec& x0) {
  CVec a = g.cast<cplx>();
  int n = static_cast<int>(g.size());
  return {Coefficient::quadratic(-g.dot(x0), a, CMat::Zero(n, n)), x0};
}

OrientedSurface plane(std::vector<double> g) {
  Vec v = Eigen::Map<Vec>(g.data(), g.size());
  return plane(v, Vec::Zero(v.size()));
}

PseudoGrid small_grid() {
  PseudoGrid g;
  g.directions = 512;
  return g;
}

}  // namespace

TEST_CASE("convexify: exact at the base point") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 10; ++t) {
    int n = 3;
    Vec x0(n), g(n);
    Mat H(n, n);
    for (int i = 0; i < n; ++i) {
      x0[i] = nd(rng);
      g[i] = nd(rng);
      for (int j = 0; j < n; ++j) H(i, j) = nd(rng);
    }
    H = (0.5 * (H + H.transpose())).eval();
    // phi(x) = g.(x-x0) + (x-x0)^T H (x-x0) / 2 written around the origin
    Vec a = g - H * x0;
    double c = -g.dot(x0) + 0.5 * x0.dot(H * x0);
    OrientedSurface s{Coefficient::quadratic(c, a.cast<cplx>(), H.cast<cplx>()), x0};
    double A = 0.5 + std::abs(nd(rng));
    ConvexifiedWeight w = convexify(s, A);
    CHECK(std::abs(w.value(x0)) < 1e-15);
    CHECK((w.gradient(x0) - g).norm() < 1e-14);
    Mat expect = H + 2 * A * g * g.transpose() - (2 / A) * Mat::Identity(n, n);
    CHECK((w.hessian() - expect).norm() < 1e-12);
    Jet j = w.coefficient().jet(x0);
    CHECK(std::abs(j.v) < 1e-12);
    CHECK((j.g.real() - g).norm() < 1e-12);
  }
}

TEST_CASE("convexify: phi = x1, A = 1 gives x1 - x2^2") {
  ConvexifiedWeight w = convexify(plane({1.0, 0.0}), 1.0);
  for (auto [a, b] : {std::pair{0.3, -0.7}, {-1.0, 2.0}, {0.0, 0.5}}) {
    Vec x(2);
    x << a, b;
    CHECK(w.value(x) == doctest::Approx(a - b * b).epsilon(1e-14));
  }
  CHECK_THROWS_AS(convexify(plane({1.0, 0.0}), 0.0), InvalidInput);
  CHECK_THROWS_AS(convexify(plane({1.0, 0.0}), -2.0), InvalidInput);
  CHECK_THROWS_AS(convexify(plane({0.0, 0.0}), 1.0), InvalidInput);
}

TEST_CASE("surface check: noncharacteristic wave surfaces are vacuous") {
  SymbolPoly p = wave_symbol(1, 2);
  // spacelike and timelike normals, both noncharacteristic
  for (auto g : {std::vector<double>{1.0, 0.2, 0.1}, {0.2, 1.0, -0.3}}) {
    SlackReport r = check_surface_pseudoconvexity(p, plane(g), small_grid());
    CHECK(r.vacuous());
    CHECK(r.passes());
  }
}

TEST_CASE("surface check: Holmgren case has an empty limit condition") {
  SymbolPoly p = diagonal_quadratic(2, 0, {1.0, 1.0});
  SlackReport r = check_surface_pseudoconvexity(p, plane({1.0, 0.0}), small_grid());
  CHECK(r.limit.vacuous);
  CHECK(r.limit.n_samples == 0);
}

TEST_CASE("surface check: characteristic plane has active points with zero slack") {
  SymbolPoly p = wave_symbol(1, 1);
  SlackReport r = check_surface_pseudoconvexity(p, plane({1.0, 1.0}), small_grid());
  CHECK_FALSE(r.weighted.vacuous);
  REQUIRE(r.weighted.worst.has_value());
  CHECK(std::abs(r.weighted.min_value) < 1e-12);
  bool apex = false;
  for (const auto& a : r.weighted.active)
    apex = apex || (std::abs(a.tau - 1.0) < 1e-12 && std::abs(a.xi[1]) < 1e-12);
  CHECK(apex);
  CHECK_FALSE(r.passes());
}

TEST_CASE("function check: elliptic symbol with psi = x^2") {
  SymbolPoly p = diagonal_quadratic(0, 1, {1.0});
  CMat q(1, 1);
  q << 2.0;
  Coefficient psi = Coefficient::quadratic(0.0, CVec::Zero(1), q);
  PseudoGrid g = small_grid();
  Vec x0 = Vec::Constant(1, 1.0);
  SlackReport r = check_function_pseudoconvexity(p, psi, x0, g);
  CHECK(r.limit.vacuous);
  // p_psi = (xi + 2 i tau)^2 at x = 1 never vanishes on the half sphere
  CHECK(r.weighted.vacuous);
  SymbolPoly P = conjugate_weight_symbolic(p, psi);
  PhasePoint pt{x0, CVec::Zero(1), 1.0};
  CHECK(std::abs(P.eval(pt) - cplx(-4.0)) < 1e-14);
  cplx q2 = poisson_bracket(P.conj(), P).eval(pt) / cplx(0, 1);
  CHECK(q2.real() == doctest::Approx(64.0));
}

TEST_CASE("function check: slack report invariant under rescaling the grid") {
  SymbolPoly p = wave_symbol(1, 2);
  Vec g(3);
  g << 0.3, 1.0, 0.2;
  OrientedSurface s = plane(g, Vec::Zero(3));
  ConvexifiedWeight w = convexify(s, 1.0);
  PseudoGrid a = small_grid(), b = small_grid();
  b.scale = 2.0;
  SlackReport ra = check_function_pseudoconvexity(p, w, a), rb = check_function_pseudoconvexity(p, w, b);
  CHECK(ra.weighted.vacuous == rb.weighted.vacuous);
  CHECK(ra.weighted.n_active == rb.weighted.n_active);
  CHECK(ra.weighted.min_value == doctest::Approx(rb.weighted.min_value).epsilon(1e-10));
}

TEST_CASE("function check: positive rescaling of phi keeps the slack sign") {
  SymbolPoly p = wave_symbol(1, 2);
  Vec g(3);
  g << 0.3, 1.0, 0.2;
  for (double c : {1.0, 3.0, 0.25}) {
    ConvexifiedWeight w = convexify(plane(g * c, Vec::Zero(3)), 8.0 / c);
    SlackReport r = check_function_pseudoconvexity(p, w, small_grid());
    CHECK_FALSE(r.weighted.vacuous);
    CHECK(r.slack() > 0);
    ConvexifiedWeight w1 = convexify(plane(g * c, Vec::Zero(3)), 0.25 / c);
    CHECK(check_function_pseudoconvexity(p, w1, small_grid()).slack() < 0);
  }
}

TEST_CASE("A search: vacuous constraints return the smallest A") {
  SymbolPoly p = wave_symbol(1, 2);
  ASearchResult r = find_convexification_A(p, plane({1.0, 0.0, 0.0}), small_grid(), 0.5, 64.0);
  CHECK(r.found);
  CHECK(r.A == 0.5);
}

TEST_CASE("A search: timelike plane needs A > sqrt(2)|g_x|/|Q|") {
  SymbolPoly p = wave_symbol(1, 2);
  Vec g(3);
  g << 0.3, 1.0, 0.2;
  double q = g[0] * g[0] - g[1] * g[1] - g[2] * g[2];
  double need = std::sqrt(2.0) * g.tail(2).norm() / std::abs(q);
  ASearchResult r = find_convexification_A(p, plane(g, Vec::Zero(3)), small_grid(), 0.25, 1e4);
  REQUIRE(r.found);
  CHECK(r.A > need * 0.9);
  CHECK(r.A <= 2.2 * need);
  CHECK(r.report.slack() >= 1e-6);
  // monotone: the next doubling also passes
  SlackReport r2 = check_function_pseudoconvexity(p, convexify(plane(g, Vec::Zero(3)), 2 * r.A), small_grid());
  CHECK(r2.slack() >= 1e-6);
}

TEST_CASE("A search: failure report when the range is too small") {
  SymbolPoly p = wave_symbol(1, 2);
  Vec g(3);
  g << 0.3, 1.0, 0.2;
  ASearchResult r = find_convexification_A(p, plane(g, Vec::Zero(3)), small_grid(), 0.01, 0.05);
  CHECK_FALSE(r.found);
  CHECK(r.worst.has_value());
  CHECK(r.worst->value < 0);
  CHECK_THROWS_AS(find_convexification_A(wave_symbol(1, 1), plane({1.0, 1.0}), small_grid(), 1, 8),
                  InvalidInput);
}

TEST_CASE("fgh search on the sphere") {
  auto pts = sphere_points(3, 4096);
  auto f = [](const Vec& x) { return x[0] * x[0]; };
  auto g = [](const Vec& x) { return -1 + 2 * x.squaredNorm(); };
  auto h = [](const Vec& x) { return x.squaredNorm(); };
  FghResult r = find_fgh_A(f, g, h, pts, 1.0, 64.0);
  REQUIRE(r.found);
  CHECK(r.A == 2.0);
  CHECK(r.mins[0] == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(r.min_value == doctest::Approx(0.5).epsilon(1e-3));
  FghResult bad = find_fgh_A(f, [](const Vec&) { return -1.0; }, h, pts, 1.0, 64.0);
  CHECK_FALSE(bad.found);
  CHECK(std::abs(bad.worst[0]) < 0.1);
}

TEST_CASE("level-set geometry for psi = x1 - x2^2") {
  OrientedSurface s = plane({1.0, 0.0});
  ConvexifiedWeight w = convexify(s, 1.0);
  GeometryReport g = verify_level_set_geometry(s.phi, w, 1.0, 1e-3, 1e-2, 0.01);
  CHECK(g.radii.r >= 0.0099);
  CHECK(g.radii.r <= 0.01);
  CHECK(g.radii.rho > 0);
  CHECK(g.margin_i > 0);
  CHECK(g.margin_ii > 0);
  CHECK(g.margin_iii > 0);
  CHECK(g.rho_i == doctest::Approx(1.0 / 64 - 1e-3).epsilon(0.02));
  CHECK(g.rho_ii == doctest::Approx(1e-2).epsilon(0.02));
  double prev = 1e9;
  for (double eta : {1e-3, 5e-3, 1e-2}) {
    GeometryReport r = verify_level_set_geometry(s.phi, w, 1.0, eta, 1e-2, 0.01);
    CHECK(r.margin_i < prev);
    prev = r.margin_i;
  }
  CHECK_THROWS_AS(verify_level_set_geometry(s.phi, w, 1.0, 0.05, 1e-2, 0.01), CheckFailed);
}

TEST_CASE("level-set geometry: eta = 0 set reduces to the base point") {
  OrientedSurface s = plane({1.0, 0.0});
  ConvexifiedWeight w = convexify(s, 1.0);
  auto dirs = sphere_points(2, 256);
  int hits = 0;
  for (double r : {1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0})
    for (const auto& d : dirs) {
      Vec x = r * d;
      if (s.phi(x).real() <= 0 && w.value(x) >= 0) ++hits;
    }
  CHECK(hits == 0);
  CHECK(w.value(Vec::Zero(2)) == 0.0);
}
