#include "ulab/symbols.hpp"

#include <cmath>
#include <limits>

namespace ulab {

namespace {

cplx ipow(cplx z, int k) {
  cplx r(1.0, 0.0);
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

double binom(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void check_dim(int a, int b, const char* what) {
  if (a != b) throw InvalidInput(std::string("dimension mismatch in ") + what);
}

}  // namespace

Coefficient::Coefficient(int n, Fn f, int order) : n_(n), f_(std::move(f)), order_(order) {
  if (order < 0 || order > 2) throw InvalidInput("coefficient order must be 0, 1 or 2");
}

Coefficient Coefficient::constant(int n, cplx c) {
  return quadratic(c, CVec::Zero(n), CMat::Zero(n, n));
}

Coefficient Coefficient::quadratic(cplx c, const CVec& a, const CMat& Q) {
  if (Q.rows() != a.size() || Q.cols() != a.size())
    throw InvalidInput("quadratic coefficient: size mismatch");
  Coefficient r;
  r.n_ = static_cast<int>(a.size());
  r.poly_ = true;
  r.c_ = c;
  r.a_ = a;
  r.q_ = 0.5 * (Q + Q.transpose());
  r.order_ = 2;
  return r;
}

Coefficient Coefficient::coordinate(int n, int k) {
  CVec a = CVec::Zero(n);
  a[k] = 1.0;
  return quadratic(0.0, a, CMat::Zero(n, n));
}

int Coefficient::poly_degree() const {
  if (!poly_) return 3;
  if (q_.cwiseAbs().maxCoeff() != 0.0) return 2;
  if (n_ > 0 && a_.cwiseAbs().maxCoeff() != 0.0) return 1;
  return 0;
}

bool Coefficient::is_zero() const { return poly_ && poly_degree() == 0 && c_ == cplx(0.0); }

Jet Coefficient::jet(const Vec& x) const {
  check_dim(static_cast<int>(x.size()), n_, "coefficient evaluation");
  if (poly_) {
    CVec xc = x.cast<cplx>();
    CVec qx = q_ * xc;
    Jet j;
    // dot() would conjugate a_, which may be complex
    j.v = c_ + (a_.transpose() * xc)(0) + 0.5 * (xc.transpose() * qx)(0);
    j.g = a_ + qx;
    j.h = q_;
    return j;
  }
  if (!f_) throw InvalidInput("empty coefficient");
  Jet j = f_(x);
  if (j.g.size() != n_) j.g = CVec::Zero(n_);
  if (j.h.rows() != n_) j.h = CMat::Zero(n_, n_);
  return j;
}

cplx Coefficient::operator()(const Vec& x) const { return jet(x).v; }

Coefficient Coefficient::derivative(int k) const {
  if (k < 0 || k >= n_) throw InvalidInput("derivative index out of range");
  if (poly_) {
    CVec row = q_.row(k).transpose();
    return quadratic(a_[k], row, CMat::Zero(n_, n_));
  }
  if (order_ < 1) throw InvalidInput("missing gradient data in coefficient");
  auto f = f_;
  int ord = order_;
  int n = n_;
  return Coefficient(
      n,
      [f, k, ord, n](const Vec& x) {
        Jet j = f(x);
        Jet d;
        d.v = j.g[k];
        d.g = ord >= 2 ? CVec(j.h.col(k)) : CVec::Zero(n);
        d.h = CMat::Zero(n, n);
        return d;
      },
      order_ - 1);
}

Coefficient Coefficient::conj() const {
  if (poly_) return quadratic(std::conj(c_), a_.conjugate(), q_.conjugate());
  auto f = f_;
  return Coefficient(
      n_,
      [f](const Vec& x) {
        Jet j = f(x);
        j.v = std::conj(j.v);
        j.g = j.g.conjugate();
        j.h = j.h.conjugate();
        return j;
      },
      order_);
}

Coefficient Coefficient::scaled(cplx s) const {
  if (poly_) return quadratic(s * c_, s * a_, s * q_);
  auto f = f_;
  return Coefficient(
      n_,
      [f, s](const Vec& x) {
        Jet j = f(x);
        j.v *= s;
        j.g *= s;
        j.h *= s;
        return j;
      },
      order_);
}

Coefficient operator+(const Coefficient& a, const Coefficient& b) {
  check_dim(a.n_, b.n_, "coefficient sum");
  if (a.poly_ && b.poly_) return Coefficient::quadratic(a.c_ + b.c_, a.a_ + b.a_, a.q_ + b.q_);
  return Coefficient(
      a.n_,
      [a, b](const Vec& x) {
        Jet ja = a.jet(x), jb = b.jet(x);
        ja.v += jb.v;
        ja.g += jb.g;
        ja.h += jb.h;
        return ja;
      },
      std::min(a.order(), b.order()));
}

Coefficient operator*(const Coefficient& a, const Coefficient& b) {
  check_dim(a.n_, b.n_, "coefficient product");
  if (a.poly_ && b.poly_ && a.poly_degree() + b.poly_degree() <= 2) {
    CMat outer = a.a_ * b.a_.transpose();
    return Coefficient::quadratic(a.c_ * b.c_, a.c_ * b.a_ + b.c_ * a.a_,
                                  a.c_ * b.q_ + b.c_ * a.q_ + outer + outer.transpose());
  }
  return Coefficient(
      a.n_,
      [a, b](const Vec& x) {
        Jet ja = a.jet(x), jb = b.jet(x);
        Jet r;
        r.v = ja.v * jb.v;
        r.g = ja.g * jb.v + ja.v * jb.g;
        CMat outer = ja.g * jb.g.transpose();
        r.h = ja.h * jb.v + ja.v * jb.h + outer + outer.transpose();
        return r;
      },
      std::min(a.order(), b.order()));
}

int total_degree(const MultiIndex& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

cplx FrozenSymbol::eval(const CVec& xi, double tau) const {
  cplx s(0.0, 0.0);
  for (const auto& [al, c] : terms) {
    cplx t = c;
    for (int k = 0; k < n; ++k)
      if (al[k]) t *= ipow(xi[k], al[k]);
    if (al[n]) t *= std::pow(tau, al[n]);
    s += t;
  }
  return s;
}

SymbolPoly::SymbolPoly(int na, int nb, int m) : na_(na), nb_(nb), m_(m) {
  if (na < 0 || nb < 0 || m < 0) throw InvalidInput("symbol dimensions must be nonnegative");
}

SymbolPoly SymbolPoly::function(int na, int nb, const Coefficient& c) {
  SymbolPoly s(na, nb, 0);
  s.add_term(MultiIndex(na + nb + 1, 0), c);
  return s;
}

void SymbolPoly::add_term(const MultiIndex& alpha, const Coefficient& c) {
  if (static_cast<int>(alpha.size()) != n() + 1)
    throw InvalidInput("multi-index length must be n + 1");
  for (int v : alpha)
    if (v < 0) throw InvalidInput("negative exponent");
  if (total_degree(alpha) > m_) throw InvalidInput("term degree exceeds symbol order");
  check_dim(c.dim(), n(), "symbol term");
  if (c.is_zero()) return;
  auto it = terms_.find(alpha);
  if (it == terms_.end())
    terms_.emplace(alpha, c);
  else
    it->second = it->second + c;
}

bool SymbolPoly::homogeneous() const {
  for (const auto& [al, c] : terms_)
    if (total_degree(al) != m_) return false;
  return true;
}

cplx SymbolPoly::eval(const PhasePoint& pt) const {
  if (pt.x.size() != n() || pt.xi.size() != n())
    throw InvalidInput("phase point dimension does not match symbol");
  return freeze(pt.x).eval(pt.xi, pt.tau);
}

FrozenSymbol SymbolPoly::freeze(const Vec& x) const {
  if (x.size() != n()) throw InvalidInput("point dimension does not match symbol");
  FrozenSymbol f;
  f.n = n();
  f.terms.reserve(terms_.size());
  for (const auto& [al, c] : terms_) f.terms.emplace_back(al, c(x));
  return f;
}

SymbolPoly SymbolPoly::d_xi(int k) const {
  SymbolPoly r(na_, nb_, std::max(m_ - 1, 0));
  for (const auto& [al, c] : terms_) {
    if (al[k] == 0) continue;
    MultiIndex b = al;
    b[k] -= 1;
    r.add_term(b, c.scaled(static_cast<double>(al[k])));
  }
  return r;
}

SymbolPoly SymbolPoly::d_x(int k) const {
  SymbolPoly r(na_, nb_, m_);
  for (const auto& [al, c] : terms_) r.add_term(al, c.derivative(k));
  return r;
}

SymbolPoly SymbolPoly::conj() const {
  SymbolPoly r(na_, nb_, m_);
  for (const auto& [al, c] : terms_) r.add_term(al, c.conj());
  return r;
}

SymbolPoly SymbolPoly::scaled(cplx s) const {
  SymbolPoly r(na_, nb_, m_);
  for (const auto& [al, c] : terms_) r.add_term(al, c.scaled(s));
  return r;
}

SymbolPoly operator+(const SymbolPoly& a, const SymbolPoly& b) {
  if (a.na_ != b.na_ || a.nb_ != b.nb_) throw InvalidInput("dimension mismatch in symbol sum");
  SymbolPoly r(a.na_, a.nb_, std::max(a.m_, b.m_));
  for (const auto& [al, c] : a.terms_) r.add_term(al, c);
  for (const auto& [al, c] : b.terms_) r.add_term(al, c);
  return r;
}

SymbolPoly operator-(const SymbolPoly& a, const SymbolPoly& b) { return a + b.scaled(-1.0); }

SymbolPoly operator*(const SymbolPoly& a, const SymbolPoly& b) {
  if (a.na_ != b.na_ || a.nb_ != b.nb_)
    throw InvalidInput("dimension mismatch in symbol product");
  SymbolPoly r(a.na_, a.nb_, a.m_ + b.m_);
  for (const auto& [al, c] : a.terms_)
    for (const auto& [bl, d] : b.terms_) {
      MultiIndex s(al.size());
      for (std::size_t i = 0; i < al.size(); ++i) s[i] = al[i] + bl[i];
      r.add_term(s, c * d);
    }
  return r;
}

SymbolPoly poisson_bracket(const SymbolPoly& p, const SymbolPoly& q) {
  if (p.na() != q.na() || p.nb() != q.nb())
    throw InvalidInput("dimension mismatch in Poisson bracket");
  SymbolPoly r(p.na(), p.nb(), std::max(p.order() + q.order() - 1, 0));
  for (int k = 0; k < p.n(); ++k) {
    SymbolPoly t = p.d_xi(k) * q.d_x(k) - p.d_x(k) * q.d_xi(k);
    for (const auto& [al, c] : t.terms()) r.add_term(al, c);
  }
  return r;
}

namespace {

SymbolPoly substitute(const SymbolPoly& p, const Coefficient& psi, double tau, bool symbolic) {
  int n = p.n();
  if (psi.dim() != n) throw InvalidInput("weight dimension does not match symbol");
  if (!symbolic && tau < 0) throw InvalidInput("tau must be nonnegative");
  std::vector<Coefficient> shift;
  cplx fac = symbolic ? cplx(0, 1) : cplx(0, tau);
  for (int k = 0; k < n; ++k) shift.push_back(psi.derivative(k).scaled(fac));
  SymbolPoly r(p.na(), p.nb(), p.order());
  for (const auto& [al, c] : p.terms()) {
    // enumerate beta <= alpha on the xi components
    MultiIndex be(n + 1, 0);
    while (true) {
      Coefficient coef = c;
      double mult = 1;
      int moved = 0;
      for (int k = 0; k < n; ++k) {
        int e = al[k] - be[k];
        mult *= binom(al[k], be[k]);
        for (int j = 0; j < e; ++j) coef = coef * shift[k];
        moved += e;
      }
      MultiIndex out = be;
      out[n] = al[n] + (symbolic ? moved : 0);
      r.add_term(out, coef.scaled(mult));
      int k = 0;
      while (k < n && be[k] == al[k]) be[k++] = 0;
      if (k == n) break;
      ++be[k];
    }
  }
  return r;
}

}  // namespace

SymbolPoly conjugate_weight(const SymbolPoly& p, const Coefficient& psi, double tau) {
  return substitute(p, psi, tau, false);
}

SymbolPoly conjugate_weight_symbolic(const SymbolPoly& p, const Coefficient& psi) {
  return substitute(p, psi, 0.0, true);
}

SymbolPoly diagonal_quadratic(int na, int nb, const std::vector<cplx>& w) {
  int n = na + nb;
  if (static_cast<int>(w.size()) != n) throw InvalidInput("weight count must equal n");
  SymbolPoly s(na, nb, 2);
  for (int k = 0; k < n; ++k) {
    MultiIndex al(n + 1, 0);
    al[k] = 2;
    s.add_term(al, Coefficient::constant(n, w[k]));
  }
  return s;
}

SymbolPoly wave_symbol(int na, int nb) {
  std::vector<cplx> w(na + nb, -1.0);
  for (int k = 0; k < na; ++k) w[k] = 1.0;
  return diagonal_quadratic(na, nb, w);
}

double principal_normality_defect(const SymbolPoly& p, const Vec& lo, const Vec& hi,
                                  const DefectGrid& grid) {
  int n = p.n();
  if (lo.size() != n || hi.size() != n) throw InvalidInput("box dimension does not match symbol");
  if (grid.x_points < 1 || grid.directions < 1) throw InvalidInput("grid resolution must be positive");
  for (int k = 0; k < n; ++k)
    if (hi[k] < lo[k]) throw InvalidInput("empty box");
  if (p.nb() == 0) return 0.0;
  SymbolPoly br = poisson_bracket(p.conj(), p);
  auto dirs = sphere_points(p.nb(), grid.directions);
  long total = 1;
  for (int k = 0; k < n; ++k) total *= grid.x_points;

  std::vector<double> pv, bv;
  pv.reserve(total * dirs.size());
  bv.reserve(total * dirs.size());
  for (long idx = 0; idx < total; ++idx) {
    Vec x(n);
    long r = idx;
    for (int k = 0; k < n; ++k) {
      int j = r % grid.x_points;
      r /= grid.x_points;
      x[k] = grid.x_points == 1 ? 0.5 * (lo[k] + hi[k])
                                : lo[k] + (hi[k] - lo[k]) * j / (grid.x_points - 1);
    }
    FrozenSymbol fp = p.freeze(x), fb = br.freeze(x);
    for (const auto& w : dirs) {
      CVec xi = CVec::Zero(n);
      for (int k = 0; k < p.nb(); ++k) xi[p.na() + k] = w[k];
      pv.push_back(std::abs(fp.eval(xi, 0.0)));
      bv.push_back(std::abs(fb.eval(xi, 0.0)));
    }
  }
  double ps = 0, bs = 0;
  for (double v : pv) ps = std::max(ps, v);
  for (double v : bv) bs = std::max(bs, v);
  const double ptiny = 1e-13 * std::max(ps, 1.0), btiny = 1e-13 * std::max(bs, 1.0);
  double worst = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (bv[i] <= btiny) continue;
    if (pv[i] <= ptiny) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, bv[i] / pv[i]);
  }
  return worst;
}

}  // namespace ulab
