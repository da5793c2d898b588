#pragma once

#include <optional>
#include <string>

#include "ulab/common.hpp"

namespace ulab {

// even profile on [-1, 1] with psi(0) = 1 and psi(+-1) = 0
struct Profile {
  std::string name;
  std::function<double(double)> psi, dpsi;
  double d2psi0 = 0;  // psi''(0), used for psi'(s)/s at s = 0
  double slope = 0;   // analytic sup |psi'| on [-1, 1]
};
Profile cos_profile();
// 1 - alpha * int_0^|s| rho, rho a cubic smoothstep on [0, w] then 1; needs alpha > 1
Profile ramp_profile(double alpha);

// empty when psi is admissible for the slope bound alpha, else reasons
std::vector<std::string> profile_violations(const Profile& p, double alpha, int samples = 2001);

// S_eps = {x_n = G(x', eps)} over a base domain D in R^{n-1}
struct GraphFoliation {
  std::string kind;  // "wave" or "flat"
  int dim = 1;       // n - 1
  Vec lo, hi;        // bounding box of D
  std::function<double(const Vec&)> level;  // < 0 inside D, 0 on the boundary
  std::function<double(const Vec&, double)> G;
  std::function<Vec(const Vec&, double)> grad;  // gradient of G in x'
  double C_G = 1;    // Lipschitz constant of G in eps
  double eta = 0.1;  // eps ranges over [0, 1 + eta)
  // wave parameters, zero otherwise
  double l0 = 0, t0 = 0, b = 0, alpha = 0;
  Profile profile;

  int n() const { return dim + 1; }
  bool in_domain(const Vec& xp) const { return level(xp) <= 0; }
  double phi(const Vec& x, double eps) const;  // G(x', eps) - x_n
};

GraphFoliation wave_foliation(double l0, double t0, double b, double alpha, const Profile& psi);
// G = eps on the box [lo, hi]
GraphFoliation flat_foliation(const Vec& lo, const Vec& hi);
// same foliation with the transverse half-width replaced
GraphFoliation with_width(const GraphFoliation& f, double b);

// sampled invariants; empty when all hold
std::vector<std::string> foliation_violations(const GraphFoliation& f, int per_axis = 41);

// grid of points of D (per_axis samples of the bounding box, filtered)
std::vector<Vec> domain_samples(const GraphFoliation& f, int per_axis);

enum class Equation { Wave, Schrodinger };
std::string to_string(Equation e);

// metric on (xi_w, xi_n) at (w, x_n)
using Metric = std::function<Mat(double w, double xn)>;
Metric flat_metric();

struct NoncharGrid {
  int eps = 21, s = 41, theta = 64, xn = 9;
};

struct NoncharReport {
  Equation equation = Equation::Wave;
  double min_slack = 0;  // min of p (wave) or -p (Schrodinger) over the grid
  double required = 0;
  double b = 0;          // width of the foliation that was accepted or last tried
  int halvings = 0;
  bool pass = false;
  std::vector<double> worst;  // eps, t, w, x_n
  long samples = 0;
};

// slack on a single foliation, no halving
NoncharReport noncharacteristic_slack(const GraphFoliation& f, const Metric& m, Equation eq,
                                      const NoncharGrid& grid = {});
// halves b until the slack reaches required (defaults 0.1 wave, 0.5 Schrodinger)
// throws CheckFailed with the worst point when b falls below b_min
NoncharReport check_noncharacteristic(const GraphFoliation& f, const Metric& m, Equation eq,
                                      const NoncharGrid& grid = {}, double required = -1,
                                      double b_min = 1e-3);

// ---- covers ----

struct Radii {
  double r = 0, R = 0, rho = 0;
};
using RadiusOracle = std::function<Radii(const Vec& x, double eps)>;
RadiusOracle constant_radii(double r, double R, double rho);

// open set given by a depth function: positive inside, and a lower bound
// for the distance to the complement there
struct OpenSet {
  std::string name;
  std::function<double(const Vec&)> depth;
  bool contains(const Vec& x) const { return depth(x) > 0; }
};
OpenSet ball_set(const Vec& c, double r, std::string name = "ball");
OpenSet below_set(double a, int n, std::string name = "slab");  // {x_n < a}
OpenSet union_set(std::vector<OpenSet> parts, std::string name = "union");

struct EpsInterval {
  double eps = 0, g = 0;
  double lo() const { return eps - g; }
  double hi() const { return eps + g; }
};

struct IntervalOrder {
  std::vector<EpsInterval> ordered;  // sorted by eps - g, redundant ones pruned
  bool covers = false;               // [0, eps0) and the open intervals cover [0, 1]
  std::optional<double> gap;         // first uncovered eps
  bool ordree = false;               // overlap of each interval with the previous ones
  std::vector<double> overlap;       // max_{j<=k}(eps_j + g_j) - (eps_{k+1} - g_{k+1})
};
IntervalOrder order_intervals(std::vector<EpsInterval> iv, double eps0);

struct Leaf {
  double eps = 0, g = 0, rho = 0;
  std::vector<Vec> centers;
  std::vector<Radii> radii;
  double coverage_margin = 0;  // min over leaf samples of the depth in the ball union
  double dist = 0;             // sampled dist(S_eps, U_eps^c), depth functions as distances
  double inegge = 0;           // min of G(x', eps - g) - G(x', eps) + rho
  double inclusion = 0;        // min depth in U_eps of samples of V_eps
  long skipped = 0;            // samples left to omega_1 by the boundary filter
};

struct BallCover {
  int n = 2;
  double eps0 = 0;
  std::vector<Leaf> leaves;  // in interval order
  IntervalOrder order;
  double inegge_min = 0, inclusion_min = 0;
};

struct CoverOptions {
  double eps0 = 0.05;
  int per_axis = 41;    // leaf samples per base axis
  int candidates = 41;  // candidate eps values in [eps0, 1]
  double depth_frac = 0;  // a sample counts as covered when depth >= depth_frac * r
  double R_cap = 1e300;   // 4 R_i must not exceed this
  bool boundary_filter = false;  // drop centers whose B(x, 4R) meets {x_n = 0}
  std::optional<OpenSet> omega1;  // required with the boundary filter
};

Leaf build_leaf(const GraphFoliation& f, const RadiusOracle& oracle, double eps,
                const CoverOptions& opt = {});
// throws CheckFailed on a coverage gap (witness = uncovered eps) or an (ordree) failure
BallCover extract_cover(const GraphFoliation& f, const RadiusOracle& oracle,
                        const CoverOptions& opt = {});

struct InclusionReport {
  bool pass = false;
  double margin = 0;              // min over left samples of the depth in the right set
  double slack = 0;               // half cell diagonal of the sampling grids
  std::vector<double> margins;    // per k
  std::vector<std::vector<double>> ball_margins;  // per k and ball of leaf k + 1
  int worst_k = -1, worst_ball = -1;
  std::vector<double> witness;
  long samples = 0;
};

// {phi_{k+1} > rho_{k+1}} cap B(x_i^{k+1}, 4R_i) inside omega1 and the balls of leaves <= k
InclusionReport check_cover_inclusions(const GraphFoliation& f, const BallCover& cover,
                                       const OpenSet& omega1, int per_axis = 15);
// min depth in B of the grid samples of A in a box
double sampled_inclusion_margin(const OpenSet& A, const OpenSet& B, const Vec& lo,
                                const Vec& hi, int per_axis, std::vector<double>* witness = nullptr);

// ---- dependence relations ----

enum class Rule { LocalEstimate, Inclusion, Union, Product, StrongInclusion, Transitivity };
std::string to_string(Rule r);
Rule rule_from_string(const std::string& s);

struct Fact {
  std::vector<int> lhs, rhs;  // collections of node ids
  bool strong = true;
};

struct Step {
  Rule rule = Rule::Inclusion;
  Fact fact;
  std::vector<int> premises;  // indices of earlier steps
};

struct Witness {
  int inner = -1, outer = -1;
  bool compact = true;
  double margin = 0;
};

struct DependenceGraph {
  std::vector<std::string> names;
  std::vector<std::vector<int>> members;  // nonempty for union nodes
  std::vector<Fact> base;                 // local estimates, single sets, strong
  std::vector<Witness> inclusions;

  int add_set(const std::string& name);
  int add_union(const std::string& name, std::vector<int> parts);
  int find(const std::string& name) const;  // -1 when absent
  void add_base(int lhs, int rhs);
  void add_inclusion(int inner, int outer, bool compact, double margin);
  bool has_base(int lhs, int rhs) const;
  bool has_inclusion(int inner, int outer, bool compact) const;
  std::string describe(const Fact& f) const;
};

struct Schedule {
  std::vector<Step> steps;
  Fact goal;
};

struct ReplayResult {
  bool ok = false;
  int failed_step = -1;
  std::string message;
};
ReplayResult replay(const DependenceGraph& g, const Schedule& s);

// per-leaf node ids U_{i,j}, omega_{i,j}, V_{i,j}, in cover order
struct LeafNodes {
  std::vector<int> U, omega, V;
};
struct CoverGraph {
  DependenceGraph graph;
  std::vector<LeafNodes> leaves;
  std::vector<int> W;  // W[k] = U0 u omega of leaves 1..k, k = 0..N
  int U0 = -1, mid = -1, V0 = -1;
  InclusionReport inclusions;
};

// nodes, local-estimate facts and sampled inclusion witnesses for a cover;
// mid is the set of points of V0 deeper than half the margin of U0 in V0
CoverGraph build_dependence_graph(const GraphFoliation& f, const BallCover& cover,
                                  const OpenSet& U0, const OpenSet& V0, int per_axis = 15);

// schedule ending in [U0 u all omega] < V0; throws CheckFailed naming a missing fact
Schedule propagate_dependence(const DependenceGraph& g, const std::vector<LeafNodes>& leaves,
                              const std::vector<int>& W, int U0, int mid, int V0);
Schedule propagate_dependence(const CoverGraph& cg);

}  // namespace ulab
