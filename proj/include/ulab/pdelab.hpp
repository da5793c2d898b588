#pragma once

#include <optional>
#include <string>

#include "ulab/common.hpp"
#include "ulab/foliation.hpp"  // Equation

namespace ulab {

enum class Geometry { Interval, Rectangle };
std::string to_string(Geometry g);

// observation (or control) region: a piece of one side, or an interior box
struct ObsRegion {
  bool boundary = true;
  // interval: 0 is {x = 0}, 1 is {x = L}
  // rectangle: 0 is {x = 0}, 1 is {x = a}, 2 is {y = 0}, 3 is {y = b}
  int side = 0;
  double s0 = 0, s1 = -1;  // segment along a rectangle side; s1 < s0 means the whole side
  Vec lo, hi;              // interior box
};
ObsRegion boundary_side(int side, double s0 = 0, double s1 = -1);
ObsRegion interior_box(const Vec& lo, const Vec& hi);

using ScalarField = std::function<double(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;

struct ControlProblem {
  Geometry geometry = Geometry::Interval;
  double L = 1, a = 1, b = 1;
  double T = 1;
  ObsRegion obs;
  ScalarField V, W0;  // empty means zero
  VectorField W1;
  int N = 256, Nx = 64, Ny = 64;  // sine modes per axis

  int dim() const { return geometry == Geometry::Interval ? 1 : 2; }
  bool free() const { return !V && !W0 && !W1; }
};
ControlProblem interval_problem(double L, double T, ObsRegion obs, int N = 256);
ControlProblem rectangle_problem(double a, double b, double T, ObsRegion obs, int Nx = 64,
                                 int Ny = 64);
std::vector<std::string> problem_violations(const ControlProblem& p);

struct Mode {
  int j = 1, k = 0;  // k = 0 on the interval
  double lambda = 0, omega = 0;
};
// truncation sorted by eigenvalue, ties by (j, k)
std::vector<Mode> modes(const ControlProblem& p);
double mode_value(const ControlProblem& p, const Mode& m, const Vec& x);
Vec mode_grad(const ControlProblem& p, const Mode& m, const Vec& x);
// outward normal derivative at a point of the observed side
double mode_normal(const ControlProblem& p, const Mode& m, const Vec& x);
// point of the observed side at arclength s (interval: the endpoint)
Vec side_point(const ControlProblem& p, double s);

// sup over the domain of the distance to the observation region
double geometric_length(const ControlProblem& p);

// boundary: int_Gamma d_nu e_k d_nu e_l; interior: H^1(omega) inner products,
// or L^2(omega) ones with mass_only
Mat observation_matrix(const ControlProblem& p, const std::vector<Mode>& rows,
                       const std::vector<Mode>& cols, bool mass_only = false);

// coefficients in the order of modes(p)
struct StatePair {
  CVec u0, u1;
};
StatePair zero_state(const ControlProblem& p);
// one mode (j, k) with amplitudes for u0 and u1
StatePair mode_state(const ControlProblem& p, int j, int k = 0, cplx a0 = 1, cplx a1 = 0);
void check_state(const ControlProblem& p, const StatePair& s);  // throws InvalidInput

double norm_h1_l2(const ControlProblem& p, const StatePair& s);
double norm_l2_hm1(const ControlProblem& p, const StatePair& s);
double norm_l2(const CVec& c);
double norm_h2(const ControlProblem& p, const CVec& c);  // |Delta u|_{L^2}
double frequency_scale(const ControlProblem& p, const StatePair& s);
// midpoint rule with per_axis points per axis, exact below per_axis modes
double grid_l2(const ControlProblem& p, const CVec& c, int per_axis);

class Trajectory {
 public:
  Trajectory(const ControlProblem& p, const StatePair& data, Equation eq);
  Equation equation() const { return eq_; }
  const ControlProblem& problem() const { return p_; }
  const std::vector<Mode>& basis() const { return ms_; }
  CVec coeffs(double t) const;
  CVec velocity(double t) const;  // wave only
  cplx value(double t, const Vec& x) const;
  // wave: |(u, u_t)|^2 in H^1 x L^2; Schrodinger: |u|^2 in L^2
  double energy(double t) const;

 private:
  ControlProblem p_;
  std::vector<Mode> ms_;
  StatePair data_;
  Equation eq_;
  Mat A_;          // first order wave generator on (a, a'), lower order case
  Mat P_;          // eigenvectors of Lambda + V, Schrodinger lower order case
  Vec d_;
  CVec w_;         // P^T u0
};
Trajectory solve(const ControlProblem& p, const StatePair& data, Equation eq);

// L^2((0,T) x Gamma) norm of d_nu u or L^2((0,T); H^1(omega)) norm of u,
// over (-T, T) for Schrodinger, by Gauss-Legendre in time
double observe(const Trajectory& tr);

// lower order terms as mode matrices (zero when absent)
struct LowerOrder {
  Mat V, W0, W1;
};
LowerOrder lower_order_matrices(const ControlProblem& p, const std::vector<Mode>& ms);

// obs^2 = x^T G x; wave x = (c, d) over ms, Schrodinger x = c
Mat observability_gramian(const ControlProblem& p, const std::vector<Mode>& ms, Equation eq);

struct StabilityRow {
  double mu = 0;
  int modes = 0;
  double cost = 0;   // sup weak / obs on the band, 0 for an empty band
  double shift = 0;  // added to the Gramian eigenvalue when it is numerically singular
  double weak = 0, strong = 0, obs = 0;  // extremal datum
  double bound = 0;  // C e^{kappa mu} obs + strong / mu
  bool holds = true;
};
struct StabilityReport {
  Equation equation = Equation::Wave;
  double T = 0, length = 0;  // length = L(M, omega)
  std::vector<StabilityRow> rows;
  LogFit fit;  // log cost against mu over nonempty bands
  double C_hat = 0, kappa_hat = 0;
  int violations = 0;
  bool bound_holds = false;
};
// first count distinct eigenfrequencies of the truncation
std::vector<double> distinct_frequencies(const ControlProblem& p, int count);
// wave needs T > 2 L(M, omega) unless allow_short_time
StabilityReport filtered_stability(const ControlProblem& p, const std::vector<double>& mus,
                                   Equation eq = Equation::Wave, bool allow_short_time = false);

struct ControlResult {
  double eps = 0;
  double cost = 0;        // |g|_{L^2}
  double deviation = 0;   // terminal |(u, u_t)(T)|_{L^2 x H^-1}, extension band included
  double target = 0;      // eps |data|_{H^1 x L^2}
  double data_norm = 0;
  double alpha = 0;
  double cg_residual = 0;  // normwise backward error of the last solve
  double truncation = 0;   // extension band part of the deviation over |data|, NaN if not estimated
  bool truncation_ok = true;
  bool cg_fallback = false;
  int iterations = 0, sweeps = 0;
  // penalized problem on the coupled modes, z = (a, a' / omega) at time T
  std::vector<Mode> basis;
  Mat Lambda, Lambda_cost;  // weights eta and eta^2
  Vec b, phi;
  double penalized(const Vec& psi) const;  // 1/2 psi'L psi + |b + L psi|^2 / (2 alpha)
};
// g(t, x) for x on the control region; boundary x from side_point
double control_value(const ControlProblem& p, const ControlResult& r, double t, const Vec& x);
// penalized duality with time weight sin^2(pi t / T); throws CheckFailed when
// the alpha sweep runs out before the deviation target
ControlResult hum_control(const ControlProblem& p, const StatePair& data, double eps);

struct CostSweep {
  std::vector<ControlResult> runs;
  LogFit fit;  // log cost against 1 / eps
  bool monotone = false;
  double ratio = 0;  // cost at the smallest eps over cost at the largest
};
CostSweep control_cost_sweep(const ControlProblem& p, const StatePair& data,
                             const std::vector<double>& eps);

struct LogStability {
  double C1 = 1, C2 = 1, alpha = 1, mu0 = 1;
  double C3 = 0, x_star = 0, D1 = 0, D2 = 0;
  // (D1 c / log(c/b + 1)^alpha, e^{D2 (c/a)^{1/alpha}} b)
  std::pair<double, double> apply(double a, double b, double c) const;
};
LogStability log_stability_constants(double C1, double C2, double alpha, double mu0);

struct HypothesisCheck {
  long triples = 0, violations_a = 0, violations_c = 0;
  double worst_a = 0, worst_c = 0;  // largest a / bound and log c / log bound
};
// random (a, b, c) with b <= C2 c, a <= c, a <= e^{C1 mu} b + mu^-alpha c on a mu grid
HypothesisCheck validate_log_stability(const LogStability& ls, long count, std::uint64_t seed,
                                       int mu_grid = 400);

}  // namespace ulab
