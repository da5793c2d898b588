#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "ulab/common.hpp"

namespace ulab {

// Samples on a periodic box grid: node j on axis k sits at lo_k + j L_k / N_k.
// Row-major layout, last axis fastest.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(std::vector<double> lo, std::vector<double> hi, std::vector<int> counts,
               std::vector<bool> analytic);

  static GridFunction sample(std::vector<double> lo, std::vector<double> hi,
                             std::vector<int> counts, std::vector<bool> analytic,
                             const std::function<cplx(const Vec&)>& f);

  int rank() const { return static_cast<int>(counts_.size()); }
  std::size_t size() const { return data_.size(); }
  const std::vector<int>& counts() const { return counts_; }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  const std::vector<bool>& analytic() const { return analytic_; }
  int analytic_count() const;
  double length(int axis) const { return hi_[axis] - lo_[axis]; }
  double spacing(int axis) const { return length(axis) / counts_[axis]; }
  double coord(int axis, int j) const { return lo_[axis] + j * spacing(axis); }
  Vec point(std::size_t flat) const;
  // lattice frequency 2 pi j' / L with j' the signed index
  double frequency(int axis, int j) const;

  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }
  cplx& operator[](std::size_t i) { return data_[i]; }
  cplx operator[](std::size_t i) const { return data_[i]; }

  double cell_volume() const;
  double l2_norm() const;
  double sup_norm() const;
  double max_imag() const;
  GridFunction like() const;  // same layout, zero samples

  // relative L2 mass outside the central half of each analytic axis
  double padding_tail() const;
  // throws InvalidInput when padding_tail() exceeds tol
  void padding_precheck(double tol = 1e-12) const;

  void write_binary(std::ostream& os) const;
  static GridFunction read_binary(std::istream& is);
  // one row per node: coordinates then real, imag; header included
  void write_csv(std::ostream& os) const;

 private:
  std::vector<double> lo_, hi_;
  std::vector<int> counts_;
  std::vector<bool> analytic_;
  std::vector<cplx> data_;
};

// multiply the transform along the analytic axes by sym(|xi_a|)
GridFunction apply_radial_symbol(const GridFunction& f, const std::function<double(double)>& sym);

// e^{-|D_a|^2 / lambda} f ; lambda = +inf is the identity
GridFunction gaussian_smooth(const GridFunction& f, double lambda);

// smooth cutoff: 1 on [0, 3/4], 0 on [1, inf)
struct RadialCutoff {
  double plateau = 0.75;
  double support = 1.0;
  double operator()(double s) const;
  double complement(double s) const;  // 1 - m(s), accurate near the support edge
  // regularized then evaluated: m_lambda(s) in dimension na (1 or 2)
  double regularized(double s, double lambda, int na = 1) const;
  double regularized_complement(double s, double lambda, int na = 1) const;
};

struct Multiplier {
  RadialCutoff m;
  double mu = 1.0;
  std::optional<double> lambda;  // empty: exact symbol m(xi / mu)
  double symbol(double r, int na) const;  // value at |xi_a| = r
};

GridFunction fourier_multiplier(const GridFunction& f, const Multiplier& M);

// e^{-(eps / 2 tau)|D_a|^2} (e^{tau psi} u)
GridFunction carleman_conjugate(const GridFunction& u, const GridFunction& psi, double tau,
                                double eps);

// 1D helpers with closed-form or quadrature mollification
struct PiecewiseConstant1D {
  std::vector<double> breaks;  // increasing, size = values.size() + 1
  std::vector<double> values;
  double operator()(double x) const;
  double smoothed(double x, double lambda) const;
  std::pair<double, double> support() const;
};

struct Smooth1D {
  std::function<double(double)> f;
  double a = 0, b = 0;  // support
  // k-th derivative of the Gaussian-smoothed function at x
  double smoothed(double x, double lambda, int k = 0) const;
  // complex-point extension by direct quadrature
  cplx smoothed_complex(cplx z, double lambda) const;
  double sup_norm(int samples = 2001) const;
};

// standard bump exp(-1/(1 - t^2)) rescaled to (a, b)
Smooth1D bump(double a, double b);

struct DecayReport {
  std::string harness;
  std::vector<double> sweep, measured;
  LogFit fit;  // over the sweep with the two smallest values excluded
  double predicted_slope = 0;
  bool two_sided = false;  // exact-rate check vs upper-bound check
  bool pass = false;
  std::string note;
};

std::vector<double> default_lambdas();

DecayReport disjoint_support(const PiecewiseConstant1D& f1, const PiecewiseConstant1D& f2,
                             const std::vector<double>& lambdas, double d);
DecayReport disjoint_support(double d, const std::vector<double>& lambdas = default_lambdas());
DecayReport smooth_disjoint(double d, int k, const std::vector<double>& lambdas = default_lambdas());
DecayReport support_nesting(double d, const std::vector<double>& lambdas = default_lambdas());
DecayReport multiplier_commutation(const std::vector<double>& mus = {32, 64, 128, 256});

struct WeightedCutoffReport {
  std::vector<double> lambdas, taus;
  std::vector<std::vector<double>> measured, ratio;  // [lambda][tau]
  double D = 0, C = 0, worst = 0;  // worst = max measured / (C <l>^{1/2} e^{D tau + tau^2/lambda})
  bool pass = false;
};
WeightedCutoffReport weighted_cutoff(double D = 0.0,
                                     const std::vector<double>& lambdas = {50, 100, 200, 400},
                                     const std::vector<double>& taus = {5, 10, 20, 40});

struct LowHighReport {
  std::vector<double> lambdas, E;
  LogFit fit;
  double predicted_slope = -1.0 / 64;
  double max_excess = 0;  // max over lambda and lattice of symbol - bound
  long lattice_points = 0;
  bool bound_holds = false, slope_ok = false, pass = false;
};
LowHighReport low_high_split(double eps = 1.0, double tau = 4.0, double mu = 8.0,
                             const std::vector<double>& lambdas = {50, 100, 200, 400},
                             double L = 16.0, int N = 4096);

DecayReport localized_fourier(double tau = 5.0, double delta = 0.5, double lambda = 50.0,
                              const std::vector<double>& mus = {5, 10, 15, 20, 25, 30});

// dispatcher used by the CLI; unknown names are rejected
DecayReport measure_decay(const std::string& harness, double d = 1.0);

}  // namespace ulab
