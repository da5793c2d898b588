#pragma once

#include <optional>

#include "ulab/symbols.hpp"

namespace ulab {

struct OrientedSurface {
  Coefficient phi;  // needs order 2 for the bracket conditions
  Vec x0;
  // throws InvalidInput unless phi(x0) = 0 and grad phi(x0) != 0
  void validate(double tol = 1e-12) const;
};

class ConvexifiedWeight {
 public:
  ConvexifiedWeight(const OrientedSurface& s, double A);

  double A() const { return A_; }
  const Vec& x0() const { return x0_; }
  const Vec& g0() const { return g0_; }
  const Mat& H0() const { return H0_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian() const;
  // exact quadratic coefficient for the symbol machinery
  Coefficient coefficient() const;

 private:
  double A_;
  Vec x0_, g0_;
  Mat H0_;
};

ConvexifiedWeight convexify(const OrientedSurface& s, double A);

struct PseudoGrid {
  int directions = 4096;  // samples of the unit sphere in xi_b
  int tau_log = 32;       // log-uniform tau values in [tau_min, 0.1]
  int tau_angle = 96;     // uniform angles from tau = 0.1 up to tau = 1
  double tau_min = 1e-3;
  double scale = 1.0;     // samples taken on the sphere of this radius
  std::vector<Vec> x_points;  // empty: base point only
};

struct ActivePoint {
  Vec x;
  Vec xi;
  double tau = 0;
  double value = 0;  // degree-normalized tested quantity
};

struct ConditionReport {
  bool vacuous = true;
  double min_value = 0;  // meaningful only when not vacuous
  long n_active = 0;
  long n_samples = 0;
  double h = 0;  // grid spacing used for the active tolerance
  std::vector<ActivePoint> active;  // first few, plus the worst
  std::optional<ActivePoint> worst;
};

struct SlackReport {
  ConditionReport limit;     // tau -> 0 condition
  ConditionReport weighted;  // tau > 0 condition
  // min over non-vacuous conditions; +inf when both are vacuous
  double slack() const;
  bool vacuous() const { return limit.vacuous && weighted.vacuous; }
  bool passes(double margin = 0.0) const;
};

SlackReport check_surface_pseudoconvexity(const SymbolPoly& p, const OrientedSurface& s,
                                          const PseudoGrid& grid = {});
SlackReport check_function_pseudoconvexity(const SymbolPoly& p, const Coefficient& psi,
                                           const Vec& x0, const PseudoGrid& grid = {});
SlackReport check_function_pseudoconvexity(const SymbolPoly& p, const ConvexifiedWeight& psi,
                                           const PseudoGrid& grid = {});

struct ASearchResult {
  bool found = false;
  double A = 0;
  SlackReport report;  // for the returned A, or the last tried
  std::vector<double> tried, slacks;
  std::optional<ActivePoint> worst;  // on failure
};

ASearchResult find_convexification_A(const SymbolPoly& p, const OrientedSurface& s,
                                     const PseudoGrid& grid, double A_min, double A_max,
                                     double margin = 1e-6);

// A sweep for g + A f - h / A >= margin over sample points
struct FghResult {
  bool found = false;
  double A = 0;
  double min_value = 0;
  Vec worst;
  std::vector<double> tried, mins;
};
FghResult find_fgh_A(const std::function<double(const Vec&)>& f,
                     const std::function<double(const Vec&)>& g,
                     const std::function<double(const Vec&)>& h, const std::vector<Vec>& points,
                     double A_min, double A_max, double margin = 1e-6);

struct GeometryRadii {
  double R = 0, rho = 0, r = 0, delta = 0, eta = 0, eta1 = 0, eta2 = 0;
};

struct GeometryReport {
  GeometryRadii radii;
  double rho_i = 0, rho_ii = 0;  // minima of phi on the two constrained sample sets
  double margin_i = 0, margin_ii = 0, margin_iii = 0;
  double h = 0;  // radial resolution at which inclusions were verified
  long samples = 0;
};

struct GeometrySamples {
  int directions = 256;
  int radii = 1500;
  double r_min_frac = 1e-4;  // smallest radius as a fraction of R
};

// throws CheckFailed with the offending sample when an inclusion cannot hold
GeometryReport verify_level_set_geometry(const Coefficient& phi, const ConvexifiedWeight& psi,
                                         double R, double eta, double eta1, double eta2,
                                         const GeometrySamples& samples = {});

}  // namespace ulab
