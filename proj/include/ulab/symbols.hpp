#pragma once

#include <map>

#include "ulab/common.hpp"

namespace ulab {

// value, gradient and Hessian of a coefficient at a point
struct Jet {
  cplx v{0.0, 0.0};
  CVec g;
  CMat h;
};

// Coefficient function of x. order = how many derivatives the callable
// provides (0: value, 1: +gradient, 2: +Hessian). Polynomials of degree <= 2
// are stored in closed form and differentiate exactly.
class Coefficient {
 public:
  using Fn = std::function<Jet(const Vec&)>;

  Coefficient() = default;
  Coefficient(int n, Fn f, int order);

  static Coefficient constant(int n, cplx c);
  // c + a.x + x^T Q x / 2  (Q symmetrized)
  static Coefficient quadratic(cplx c, const CVec& a, const CMat& Q);
  static Coefficient coordinate(int n, int k);

  Jet jet(const Vec& x) const;
  cplx operator()(const Vec& x) const;

  int dim() const { return n_; }
  int order() const { return poly_ ? 2 : order_; }
  bool is_polynomial() const { return poly_; }
  int poly_degree() const;
  bool is_zero() const;

  Coefficient derivative(int k) const;
  Coefficient conj() const;
  Coefficient scaled(cplx s) const;

  friend Coefficient operator+(const Coefficient& a, const Coefficient& b);
  friend Coefficient operator*(const Coefficient& a, const Coefficient& b);

 private:
  int n_ = 0;
  bool poly_ = false;
  cplx c_{0.0, 0.0};
  CVec a_;
  CMat q_;
  Fn f_;
  int order_ = 0;
};

// exponent vector of length n + 1; the last entry is the power of tau
using MultiIndex = std::vector<int>;

struct PhasePoint {
  Vec x;
  CVec xi;
  double tau = 0.0;
};

// symbol with numeric coefficients at a fixed x, for fast repeated evaluation
struct FrozenSymbol {
  int n = 0;
  std::vector<std::pair<MultiIndex, cplx>> terms;
  cplx eval(const CVec& xi, double tau) const;
};

class SymbolPoly {
 public:
  SymbolPoly() = default;
  SymbolPoly(int na, int nb, int m);

  // degree-0 symbol x -> c(x)
  static SymbolPoly function(int na, int nb, const Coefficient& c);

  void add_term(const MultiIndex& alpha, const Coefficient& c);

  int na() const { return na_; }
  int nb() const { return nb_; }
  int n() const { return na_ + nb_; }
  int order() const { return m_; }
  const std::map<MultiIndex, Coefficient>& terms() const { return terms_; }

  // true when every stored term has total degree m
  bool homogeneous() const;

  cplx eval(const PhasePoint& pt) const;
  FrozenSymbol freeze(const Vec& x) const;

  SymbolPoly d_xi(int k) const;
  SymbolPoly d_x(int k) const;
  SymbolPoly conj() const;
  SymbolPoly scaled(cplx s) const;

  friend SymbolPoly operator+(const SymbolPoly& a, const SymbolPoly& b);
  friend SymbolPoly operator-(const SymbolPoly& a, const SymbolPoly& b);
  friend SymbolPoly operator*(const SymbolPoly& a, const SymbolPoly& b);

 private:
  int na_ = 0, nb_ = 0, m_ = 0;
  std::map<MultiIndex, Coefficient> terms_;
};

int total_degree(const MultiIndex& a);

SymbolPoly poisson_bracket(const SymbolPoly& p, const SymbolPoly& q);

// p(x, xi + i tau grad psi(x)) with tau a fixed number; the tau variable of
// p itself is left in place
SymbolPoly conjugate_weight(const SymbolPoly& p, const Coefficient& psi, double tau);

// same substitution with tau kept as the symbolic last variable, so the
// result is homogeneous in (xi, tau) when p is
SymbolPoly conjugate_weight_symbolic(const SymbolPoly& p, const Coefficient& psi);

// constant-coefficient builders
// xi_a^2 - sum_b xi_b^2 (time-like analytic block first)
SymbolPoly wave_symbol(int na, int nb);
// sum_k c_k xi_k^2 with constant complex weights
SymbolPoly diagonal_quadratic(int na, int nb, const std::vector<cplx>& w);

struct DefectGrid {
  int x_points = 5;      // per axis of the box
  int directions = 256;  // sphere samples for xi_b
};

// max over the grid of |{conj p, p}| / (|p| |xi_b|^{m-1}) with xi_a = 0 and
// |xi_b| = 1; +inf when |p| vanishes but the bracket does not
double principal_normality_defect(const SymbolPoly& p, const Vec& lo, const Vec& hi,
                                  const DefectGrid& grid);

}  // namespace ulab
