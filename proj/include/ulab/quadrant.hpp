#pragma once

#include <array>
#include <optional>
#include <string>

#include "ulab/common.hpp"

namespace ulab {

using Point2 = std::array<double, 2>;

// boundary data on the two half-axes; an empty f0 or f1 means zero
struct BoundaryTrace {
  std::function<double(double)> f0, f1;
  double lip0 = 0, lip1 = 0;
  std::vector<double> kinks0, kinks1;  // optional breakpoints for quadrature
  bool compatible(double tol = 1e-12) const;
  double lipschitz() const { return std::max(lip0, lip1); }
};

struct Integral {
  double value = 0, error = 0;
  double l1 = 0;  // integral of the absolute integrand, the scale for relative errors
};

// (4xy/pi) int_0^inf eta f(eta) / ((x^2+(y+eta)^2)(x^2+(y-eta)^2)) d eta
Integral kernel_T(const std::function<double(double)>& f, const std::vector<double>& kinks,
                  double x, double y);

struct GreenResult {
  std::vector<double> values, errors;
  double max_rel_error = 0;
  bool converged = true;  // every relative error estimate below 1e-9
};

// harmonic extension of the trace into the open quadrant
GreenResult green_extend(const BoundaryTrace& trace, const std::vector<Point2>& points);
double green_value(const BoundaryTrace& trace, double x, double y);

struct KernelIdentities {
  double T1 = 0, Teta = 0;              // quadrature
  double T1_exact = 0, Teta_exact = 0;  // (2/pi) arctan(y/x) and y
  double rel1 = 0, rel_eta = 0;
};
KernelIdentities kernel_identities_check(double x, double y);

struct BarrierParams {
  double R = 1, delta = 0.1, kappa = 1, eps = 1, c1 = 1;
  double beta = 0, gamma = 0, d = 0;
};

// thresholds of the barrier construction; beta0 and Cprime depend on d
struct BarrierConstants {
  double D = 0, C = 0, C_closed = 0, nu = 0, d0 = 0;
  double I_lo = 0, I_hi = 0;  // I_beta for the given beta
  double D_beta = 0;
  double Cprime = 0, beta0 = 0;
};
BarrierConstants barrier_constants(const BarrierParams& p);

// the largest admissible gamma for a given beta
double gamma_max(const BarrierParams& p);

// empty when admissible, else the violated inequalities
std::vector<std::string> barrier_violations(const BarrierParams& p);

double barrier_f1(const BarrierParams& p, double y);
double barrier_f1_unchecked(const BarrierParams& p, double y);
// breakpoints of the piecewise definition, sorted
std::vector<double> barrier_kinks(const BarrierParams& p);

struct MarginReport {
  double min_margin = 0;  // min over samples of -8 delta - f / y
  double raw_min = 0;     // min over samples of -8 delta y - f
  double lipschitz = 0;   // finite-difference estimate for the normalized margin
  double h = 0;
  long samples = 0;
  Point2 witness{0, 0};
  double max_rel_error = 0;
  bool pass = false;
};
// annulus d/4 <= |z| <= 2d sampled on a square grid of step h = d * h_frac
MarginReport barrier_certify(const BarrierParams& p, double h_frac = 1.0 / 256);

struct EnvelopeInput {
  double mu = 1, tau0 = 1;
  double kappa = 1, delta = 0.1, eps = 1, C1 = 1, R0 = 1;
};

// the barrier that the scaled boundary function reduces to
BarrierParams envelope_barrier(const EnvelopeInput& in, double beta, double d);
// largest admissible beta for the envelope at this d
double envelope_beta0(const EnvelopeInput& in, double d);
double envelope_d0(const EnvelopeInput& in);
double envelope_f1(const EnvelopeInput& in, double beta, double y);

struct EnvelopeReport {
  BarrierParams mapped;
  MarginReport margin;
  double sup_value = 0;  // max of f(z) + 8 delta Im z over the unit-scale annulus
  bool pass = false;
};
EnvelopeReport frequency_envelope(const EnvelopeInput& in, double beta, double d,
                                  double h_frac = 1.0 / 256);

struct DominationReport {
  double min_slack = 0;
  double witness_tau = 0;
  bool pass = false;
};
// g sampled on the imaginary axis at the given heights (scaled variable)
DominationReport check_dominated(const EnvelopeInput& in, double beta,
                                 const std::vector<double>& taus, const std::vector<double>& g,
                                 double tol = 1e-12);

enum class Verdict { Pass, Fail, Inconclusive, Rejected };
std::string to_string(Verdict v);

struct DominateOptions {
  double h = 0.05;
  std::vector<double> radii{2, 4, 8, 16};
  double growth_eps = 0.5;  // the comparison uses |z|^{2 - growth_eps/2}
  std::vector<double> weights{1.0, 0.1, 0.01};
  double tol = 1e-8;
};

struct DominateReport {
  Verdict verdict = Verdict::Inconclusive;
  double worst_laplacian = 0;  // most negative discrete Laplacian of g, or worst |Lap f|
  double max_interior = 0, max_boundary = 0;
  double radius = 0, weight = 0;
  std::string note;
};
// discrete Phragmen-Lindelof check that g - f <= 0 in the quadrant
DominateReport subharmonic_dominate(const std::function<double(double, double)>& g,
                                    const std::function<double(double, double)>& f,
                                    const DominateOptions& opt = {});

}  // namespace ulab
