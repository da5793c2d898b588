#include "ulab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "ulab/foliation.hpp"
#include "ulab/mollify.hpp"
#include "ulab/pdelab.hpp"
#include "ulab/pseudoconvex.hpp"
#include "ulab/quadrant.hpp"
#include "ulab/symbols.hpp"

namespace ulab::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Param {
  std::string key, def, doc;
};

// per subcommand keys with defaults; an empty default means unset
const std::map<std::string, std::vector<Param>>& schema() {
  static const std::map<std::string, std::vector<Param>> s = {
      {"verify-lemmas",
       {{"profile", "default", "default or quick (quick skips the commutator norm)"},
        {"points", "100", "random (x, y) points for the kernel identities"},
        {"d", "0.5, 1, 2", "support distances for the disjoint-support decay"},
        {"smooth_k", "1", "derivative order for the smooth disjoint harness"}}},
      {"pseudoconvexity",
       {{"planes", "5", "random noncharacteristic planes"},
        {"directions", "4096", "sphere samples per check"},
        {"min_q", "0.1", "planes need |Q(g)| >= min_q |g|^2"},
        {"A_min", "0.25", "lower end of the convexification sweep"},
        {"A_max", "10000", "upper end of the convexification sweep"},
        {"margin", "1e-6", "required slack after convexification"}}},
      {"quadrant",
       {{"params", "default", "default, or custom to read R delta kappa eps c1"},
        {"R", "1", ""},
        {"delta", "0.1", ""},
        {"kappa", "1", ""},
        {"eps", "1", ""},
        {"c1", "1", ""},
        {"d_frac", "0.5", "d = d_frac * d0"},
        {"beta_frac", "0.5", "beta = beta_frac * beta0"},
        {"certify_barrier", "false", "sample the barrier margin on the annulus"},
        {"h_frac", "0.00390625", "certification grid step over d"},
        {"points", "100", "random (x, y) points for the kernel identities"},
        {"traces", "1", "random trace pairs for the harmonicity order"}}},
      {"foliate",
       {{"l0", "1", ""},
        {"t0", "1.2", ""},
        {"alpha", "1.1", "profile slope bound"},
        {"b", "1", "transverse half-width"},
        {"required", "0.1", "noncharacteristic slack threshold (wave)"},
        {"oracles", "20", "randomized radius oracles for the cover check"},
        {"per_axis", "31", "inclusion sampling per axis on the three-leaf instance"},
        {"schedule", "", "JSON schedule to replay instead of the generated one"}}},
      {"observability",
       {{"geometry", "rectangle", "interval or rectangle"},
        {"L", "1", "interval length"},
        {"a", "1", "rectangle width"},
        {"b", "1", "rectangle height"},
        {"T", "2.5", "observation time"},
        {"side", "0", "observed side"},
        {"N", "256", "interval modes"},
        {"Nx", "64", ""},
        {"Ny", "64", ""},
        {"frequencies", "40", "number of distinct frequency cutoffs"},
        {"equation", "wave", "wave or schrodinger"},
        {"allow_short_time", "false", ""},
        {"residual_max", "0.05", "bound on the rms log misfit, none disables"},
        {"kappa_max", "none", "bound on the fitted exponent, none disables"}}},
      {"control-cost",
       {{"geometry", "interval", "interval or rectangle"},
        {"L", "1", ""},
        {"a", "1", ""},
        {"b", "1", ""},
        {"T", "2.5", ""},
        {"side", "0", "control side"},
        {"N", "256", ""},
        {"Nx", "256", ""},
        {"Ny", "16", ""},
        {"eps", "0.3, 0.1, 0.03, 0.01", "terminal tolerances"},
        {"mode_j", "1", "first data mode along x"},
        {"mode_k", "1", "data mode along y (rectangle)"},
        {"data_modes", "5", "consecutive x modes in the data"},
        {"ratio_max", "none", "bound on cost(min eps) / cost(max eps), none disables"}}},
      {"log-stability",
       {{"C1", "1", ""},
        {"C2", "1", ""},
        {"alpha", "1", ""},
        {"mu0", "1", ""},
        {"triples", "10000", "random hypothesis triples"},
        {"mu_grid", "400", ""}}},
  };
  return s;
}

const std::set<std::string> kTopKeys{"command", "out", "seed", "threads", "strict"};

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  double x = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key + ": not a number: '" + v + "'");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  long x = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key + ": not an integer: '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key + ": not an unsigned 64-bit integer: '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

// resolved parameters of one section
class Params {
 public:
  Params(const ExperimentConfig& cfg, const std::string& sec) : sec_(sec) {
    for (const auto& p : schema().at(sec)) vals_[p.key] = p.def;
    for (const auto& [k, v] : cfg.params) {
      auto dot = k.find('.');
      if (k.substr(0, dot) == sec) vals_[k.substr(dot + 1)] = v;
    }
  }
  const std::string& str(const std::string& k) const {
    auto it = vals_.find(k);
    if (it == vals_.end()) throw std::logic_error("no key " + k);
    return it->second;
  }
  bool given(const std::string& k) const { return !str(k).empty() && str(k) != "none"; }
  double num(const std::string& k) const { return to_double(name(k), str(k)); }
  int integer(const std::string& k) const {
    long v = to_long(name(k), str(k));
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
      throw ConfigError(name(k) + ": out of range");
    return static_cast<int>(v);
  }
  int positive(const std::string& k) const {
    int v = integer(k);
    if (v <= 0) throw ConfigError(name(k) + ": must be positive");
    return v;
  }
  bool flag(const std::string& k) const { return to_bool(name(k), str(k)); }
  std::vector<double> list(const std::string& k) const {
    std::vector<double> out;
    std::stringstream ss(str(k));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(name(k), item));
    if (out.empty()) throw ConfigError(name(k) + ": empty list");
    return out;
  }
  std::string choice(const std::string& k, std::initializer_list<const char*> opts) const {
    for (const char* o : opts)
      if (str(k) == o) return o;
    std::string all;
    for (const char* o : opts) all += std::string(all.empty() ? "" : ", ") + o;
    throw ConfigError(name(k) + ": expected one of " + all + ", got '" + str(k) + "'");
  }
  const std::map<std::string, std::string>& all() const { return vals_; }

 private:
  std::string name(const std::string& k) const { return sec_ + "." + k; }
  std::string sec_;
  std::map<std::string, std::string> vals_;
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
  return split_seed(split_seed(seed, stream), k);
}

std::string yes(bool b) { return b ? "true" : "false"; }

Check make(std::string name, std::string anchor, double m, double t, std::string rel, bool ok,
           bool warning) {
  Check c;
  c.name = std::move(name);
  c.anchor = std::move(anchor);
  c.measured = m;
  c.threshold = t;
  c.relation = std::move(rel);
  c.pass = ok;
  c.warning = warning;
  return c;
}

struct Output {
  std::vector<Table> tables;
  std::vector<Check> checks;
};

Table kv_table(const std::string& name) {
  return Table{name, {{"name", "quantity"}, {"value", "its value"}}, {}};
}

// ---- verify-lemmas ----

void add_decay(Output& o, Table& pts, Table& fits, const DecayReport& r, double par,
               const std::string& anchor) {
  for (std::size_t i = 0; i < r.sweep.size(); ++i)
    pts.add({r.harness, fmt(par), fmt(r.sweep[i]), fmt(r.measured[i])});
  fits.add({r.harness, fmt(par), fmt(r.fit.slope), fmt(r.predicted_slope), fmt(r.fit.residual),
            yes(r.two_sided), yes(r.pass)});
  std::string rel = r.two_sided ? "within 20% of" : "<=";
  if (r.predicted_slope == 0) rel = "<";
  o.checks.push_back(make(r.harness + "[" + fmt(par) + "].slope", anchor, r.fit.slope,
                          r.two_sided || r.predicted_slope == 0 ? r.predicted_slope
                                                                : 0.8 * r.predicted_slope,
                          rel, r.pass, false));
}

Table identity_table() {
  return Table{"identities",
               {{"x", "first coordinate"},
                {"y", "second coordinate"},
                {"T1", "kernel applied to 1 by quadrature"},
                {"T1_exact", "(2/pi) arctan(y/x)"},
                {"rel1", "relative error of T1"},
                {"Teta", "kernel applied to eta by quadrature"},
                {"Teta_exact", "y"},
                {"rel_eta", "relative error of Teta"}},
               {}};
}

void identities(Output& o, std::uint64_t seed, int points) {
  Table t = identity_table();
  std::vector<KernelIdentities> ks(points);
  std::vector<std::pair<double, double>> xy(points);
  for (int i = 0; i < points; ++i) {
    std::mt19937_64 rng(stream_seed(seed, 1, i));
    std::uniform_real_distribution<double> u(0.1, 10);
    xy[i].first = u(rng);
    xy[i].second = u(rng);
  }
  parallel_for(points, [&](std::size_t i) { ks[i] = kernel_identities_check(xy[i].first, xy[i].second); });
  double w1 = 0, we = 0;
  for (int i = 0; i < points; ++i) {
    const auto& k = ks[i];
    t.add({fmt(xy[i].first), fmt(xy[i].second), fmt(k.T1), fmt(k.T1_exact), fmt(k.rel1),
           fmt(k.Teta), fmt(k.Teta_exact), fmt(k.rel_eta)});
    w1 = std::max(w1, k.rel1);
    we = std::max(we, k.rel_eta);
  }
  o.tables.push_back(std::move(t));
  o.checks.push_back(check_le("identities.T1", "quadrant kernel reproduces the angle function",
                              w1, 1e-8));
  o.checks.push_back(check_le("identities.Teta", "quadrant kernel reproduces y", we, 1e-8));
}

Output verify_lemmas(const ExperimentConfig& cfg) {
  Params P(cfg, "verify-lemmas");
  bool quick = P.choice("profile", {"default", "quick"}) == "quick";
  Output o;
  Table pts{"decay",
            {{"harness", "decay harness name"},
             {"parameter", "distance or derivative parameter of the harness"},
             {"sweep", "smoothing or frequency parameter"},
             {"measured", "measured quantity whose logarithm is fitted"}},
            {}};
  Table fits{"decay_fits",
             {{"harness", "decay harness name"},
              {"parameter", "distance or derivative parameter of the harness"},
              {"slope", "fitted slope of the log measurement"},
              {"predicted", "predicted slope (0 when only the sign is predicted)"},
              {"residual", "rms log misfit of the fit"},
              {"two_sided", "true when the rate is exact, false for an upper bound"},
              {"pass", "harness verdict"}},
            {}};
  for (double d : P.list("d"))
    add_decay(o, pts, fits, disjoint_support(d), d, "Gaussian smoothing of disjointly supported functions");
  add_decay(o, pts, fits, smooth_disjoint(1.0, P.integer("smooth_k")), P.integer("smooth_k"),
            "derivatives of smoothed disjoint functions");
  add_decay(o, pts, fits, support_nesting(1.0), 1.0, "smoothing off a nested support");
  add_decay(o, pts, fits, localized_fourier(), 0.5, "localized Fourier decay");
  if (!quick) add_decay(o, pts, fits, multiplier_commutation(), 0, "multiplier commutator norm");

  auto wc = weighted_cutoff();
  Table w{"weighted_cutoff",
          {{"lambda", "smoothing parameter"},
           {"tau", "weight parameter"},
           {"measured", "measured weighted sup"},
           {"ratio", "measured over the fitted bound"}},
          {}};
  for (std::size_t i = 0; i < wc.lambdas.size(); ++i)
    for (std::size_t j = 0; j < wc.taus.size(); ++j)
      w.add({fmt(wc.lambdas[i]), fmt(wc.taus[j]), fmt(wc.measured[i][j]), fmt(wc.ratio[i][j])});
  o.checks.push_back(make("weighted_cutoff.ratio", "weighted cutoff bound with fitted constant",
                          wc.worst, 1.1, "<=", wc.pass, false));

  auto lh = low_high_split();
  Table l{"low_high",
          {{"lambda", "smoothing parameter"}, {"E", "sup of the smoothed complement on the low band"}},
          {}};
  for (std::size_t i = 0; i < lh.lambdas.size(); ++i) l.add({fmt(lh.lambdas[i]), fmt(lh.E[i])});
  o.checks.push_back(make("low_high.excess", "low-high symbol bound at every lattice frequency",
                          lh.max_excess, 0, "<=", lh.bound_holds, false));
  o.checks.push_back(make("low_high.slope", "low-high complement decay rate", lh.fit.slope,
                          0.8 * lh.predicted_slope, "<=", lh.slope_ok, false));

  identities(o, cfg.seed, P.positive("points"));
  o.tables.insert(o.tables.begin(), {pts, fits, w, l});
  return o;
}

// ---- pseudoconvexity ----

Output pseudoconvexity(const ExperimentConfig& cfg) {
  Params P(cfg, "pseudoconvexity");
  int planes = P.positive("planes");
  double min_q = P.num("min_q"), margin = P.num("margin");
  double A_min = P.num("A_min"), A_max = P.num("A_max");
  if (!(min_q > 0 && min_q < 1)) throw ConfigError("pseudoconvexity.min_q: must lie in (0, 1)");
  if (!(A_min > 0 && A_max > A_min)) throw ConfigError("pseudoconvexity: need 0 < A_min < A_max");
  PseudoGrid grid;
  grid.directions = P.positive("directions");
  SymbolPoly p = wave_symbol(1, 2);

  struct Row {
    Vec g;
    double q = 0;
    SlackReport surf;
    ASearchResult A;
    SlackReport post;
  };
  std::vector<Row> rows(planes);
  for (int k = 0; k < planes; ++k) {
    std::mt19937_64 rng(stream_seed(cfg.seed, 2, k));
    std::normal_distribution<double> nd;
    Vec g(3);
    do {
      for (int i = 0; i < 3; ++i) g[i] = nd(rng);
    } while (std::abs(g[0] * g[0] - g[1] * g[1] - g[2] * g[2]) < min_q * g.squaredNorm());
    rows[k].g = g;
    rows[k].q = g[0] * g[0] - g[1] * g[1] - g[2] * g[2];
  }
  parallel_for(planes, [&](std::size_t k) {
    Row& r = rows[k];
    OrientedSurface s{Coefficient::quadratic(0, r.g.cast<cplx>(), CMat::Zero(3, 3)), Vec::Zero(3)};
    r.surf = check_surface_pseudoconvexity(p, s, grid);
    r.A = find_convexification_A(p, s, grid, A_min, A_max, margin);
    if (r.A.found) r.post = check_function_pseudoconvexity(p, convexify(s, r.A.A), grid);
  });
  Output o;
  Table t{"planes",
          {{"plane", "index"},
           {"g_t", "normal, time component"},
           {"g_x1", "normal, first space component"},
           {"g_x2", "normal, second space component"},
           {"Q", "principal symbol at the normal"},
           {"vacuous", "no constraint-active samples on the surface"},
           {"surface_slack", "min sampled slack on the surface (inf when vacuous)"},
           {"found", "convexification parameter found in range"},
           {"A", "convexification parameter"},
           {"post_slack", "slack of the convexified weight, rechecked"}},
          {}};
  for (int k = 0; k < planes; ++k) {
    const Row& r = rows[k];
    double post = r.A.found ? r.post.slack() : std::nan("");
    t.add({std::to_string(k), fmt(r.g[0]), fmt(r.g[1]), fmt(r.g[2]), fmt(r.q),
           yes(r.surf.vacuous()), fmt(r.surf.slack()), yes(r.A.found),
           r.A.found ? fmt(r.A.A) : "", fmt(post)});
    std::string n = "plane[" + std::to_string(k) + "]";
    o.checks.push_back(make(n + ".surface", "noncharacteristic surfaces pass the bracket test",
                            r.surf.slack(), 0, ">=", r.surf.vacuous() || r.surf.passes(), false));
    o.checks.push_back(make(n + ".convexified", "convexified weight is strongly pseudoconvex",
                            post, margin, ">=", r.A.found && post >= margin, false));
  }
  o.tables.push_back(std::move(t));
  return o;
}

// ---- quadrant ----

Output quadrant(const ExperimentConfig& cfg) {
  Params P(cfg, "quadrant");
  BarrierParams bp;
  if (P.choice("params", {"default", "custom"}) == "custom") {
    bp.R = P.num("R");
    bp.delta = P.num("delta");
    bp.kappa = P.num("kappa");
    bp.eps = P.num("eps");
    bp.c1 = P.num("c1");
  } else {
    for (const char* k : {"R", "delta", "kappa", "eps", "c1"})
      for (const auto& [key, v] : cfg.params)
        if (key == std::string("quadrant.") + k)
          throw ConfigError(std::string("quadrant.") + k + ": set params = custom to override");
  }
  double d_frac = P.num("d_frac"), b_frac = P.num("beta_frac");
  if (!(d_frac > 0 && d_frac <= 1 && b_frac > 0 && b_frac <= 1))
    throw ConfigError("quadrant: d_frac and beta_frac must lie in (0, 1]");
  bp.d = barrier_constants(bp).d0 * d_frac;
  bp.beta = barrier_constants(bp).beta0 * b_frac;
  bp.gamma = gamma_max(bp);
  auto bc = barrier_constants(bp);

  Output o;
  Table c = kv_table("barrier_constants");
  for (auto [n, v] : std::vector<std::pair<std::string, double>>{
           {"R", bp.R}, {"delta", bp.delta}, {"kappa", bp.kappa}, {"eps", bp.eps}, {"c1", bp.c1},
           {"d", bp.d}, {"beta", bp.beta}, {"gamma", bp.gamma}, {"D", bc.D}, {"C", bc.C},
           {"C_closed", bc.C_closed}, {"nu", bc.nu}, {"d0", bc.d0}, {"beta0", bc.beta0},
           {"Cprime", bc.Cprime}, {"I_lo", bc.I_lo}, {"I_hi", bc.I_hi}, {"D_beta", bc.D_beta}})
    c.add({n, fmt(v)});
  o.tables.push_back(std::move(c));
  auto viol = barrier_violations(bp);
  o.checks.push_back(make("barrier.admissible", "barrier parameters satisfy the construction",
                          static_cast<double>(viol.size()), 0, "<=", viol.empty(), false));

  if (P.flag("certify_barrier")) {
    double hf = P.num("h_frac");
    if (!(hf > 0 && hf <= 0.25)) throw ConfigError("quadrant.h_frac: must lie in (0, 1/4]");
    auto m = barrier_certify(bp, hf);
    Table t{"margin",
            {{"h", "grid step"},
             {"samples", "annulus samples"},
             {"min_margin", "min of -8 delta - f / y"},
             {"raw_min", "min of -8 delta y - f"},
             {"lipschitz", "estimated Lipschitz constant of the normalized margin"},
             {"witness_x", "worst sample, x"},
             {"witness_y", "worst sample, y"},
             {"max_rel_error", "largest quadrature error estimate"}},
            {}};
    t.add({fmt(m.h), std::to_string(m.samples), fmt(m.min_margin), fmt(m.raw_min),
           fmt(m.lipschitz), fmt(m.witness[0]), fmt(m.witness[1]), fmt(m.max_rel_error)});
    o.tables.push_back(std::move(t));
    o.checks.push_back(make("barrier.margin", "barrier stays below -8 delta y on the annulus",
                            m.min_margin, 0, ">=", m.pass, false));
  }

  identities(o, cfg.seed, P.positive("points"));

  // harmonicity order on random Lipschitz traces
  Table h{"harmonicity",
          {{"trace", "trace pair index"},
           {"h", "finite difference step"},
           {"residual", "max 5-point Laplacian over the centers"}},
          {}};
  int traces = P.positive("traces");
  double worst_order = std::numeric_limits<double>::infinity();
  const std::vector<double> steps{1.0 / 64, 1.0 / 128, 1.0 / 256};
  for (int tr = 0; tr < traces; ++tr) {
    auto wavy = [&](std::uint64_t s, double* lip) {
      std::mt19937_64 rng(s);
      std::uniform_real_distribution<double> u(-1, 1);
      double a = u(rng), b = u(rng);
      std::array<double, 3> cc{}, w{};
      *lip = std::abs(b);
      for (int k = 0; k < 3; ++k) {
        cc[k] = 0.5 * u(rng);
        w[k] = 1 + 2 * std::abs(u(rng));
        *lip += std::abs(cc[k]) * (w[k] + 0.25);
      }
      return std::function<double(double)>([=](double t) {
        double s = a + b * t;
        for (int k = 0; k < 3; ++k) s += cc[k] * std::sin(w[k] * t) * std::exp(-t / 4);
        return s;
      });
    };
    double l0, l1;
    auto f0 = wavy(stream_seed(cfg.seed, 3, 2 * tr), &l0);
    auto f1 = wavy(stream_seed(cfg.seed, 3, 2 * tr + 1), &l1);
    BoundaryTrace trace;
    trace.f0 = f0;
    trace.f1 = f1;
    trace.lip0 = l0;
    trace.lip1 = l1;
    const std::vector<Point2> centers{{1.0, 1.0}, {0.6, 1.7}, {2.0, 0.8}};
    std::vector<double> res(steps.size());
    parallel_for(steps.size(), [&](std::size_t i) {
      double s = steps[i], worst = 0;
      for (auto ctr : centers) {
        double x = ctr[0], y = ctr[1];
        auto v = green_extend(trace, {{x, y}, {x + s, y}, {x - s, y}, {x, y + s}, {x, y - s}}).values;
        worst = std::max(worst, std::abs(v[1] + v[2] + v[3] + v[4] - 4 * v[0]) / (s * s));
      }
      res[i] = worst;
    });
    for (std::size_t i = 0; i < steps.size(); ++i) {
      h.add({std::to_string(tr), fmt(steps[i]), fmt(res[i])});
      if (i > 0) worst_order = std::min(worst_order, std::log2(res[i - 1] / res[i]));
    }
  }
  o.tables.push_back(std::move(h));
  o.checks.push_back(check_ge("harmonicity.order", "Green extension is harmonic", worst_order, 1.8));
  return o;
}

// ---- foliate ----

json schedule_json(const Schedule& s) {
  auto fact = [](const Fact& f) { return json{{"lhs", f.lhs}, {"rhs", f.rhs}, {"strong", f.strong}}; };
  json steps = json::array();
  for (const auto& st : s.steps)
    steps.push_back({{"rule", to_string(st.rule)}, {"fact", fact(st.fact)}, {"premises", st.premises}});
  return json{{"steps", steps}, {"goal", fact(s.goal)}};
}

Schedule schedule_from_json(const json& j) {
  auto fact = [](const json& f) {
    Fact r;
    r.lhs = f.at("lhs").get<std::vector<int>>();
    r.rhs = f.at("rhs").get<std::vector<int>>();
    r.strong = f.at("strong").get<bool>();
    return r;
  };
  Schedule s;
  for (const auto& st : j.at("steps"))
    s.steps.push_back({rule_from_string(st.at("rule").get<std::string>()), fact(st.at("fact")),
                       st.at("premises").get<std::vector<int>>()});
  s.goal = fact(j.at("goal"));
  return s;
}

Output foliate(const ExperimentConfig& cfg, const fs::path& out_dir,
               std::vector<std::pair<fs::path, std::string>>& extra) {
  Params P(cfg, "foliate");
  double l0 = P.num("l0"), t0 = P.num("t0"), alpha = P.num("alpha"), b = P.num("b");
  double required = P.num("required");
  Output o;

  auto f = wave_foliation(l0, t0, b, alpha, ramp_profile(alpha));
  Table nc{"noncharacteristic",
           {{"equation", "wave or schrodinger"},
            {"min_slack", "min sampled slack"},
            {"required", "threshold"},
            {"b", "accepted half-width"},
            {"halvings", "width halvings needed"},
            {"eps", "worst leaf parameter"},
            {"t", "worst arclength parameter"},
            {"w", "worst transverse coordinate"},
            {"xn", "worst normal coordinate"},
            {"samples", "grid samples"}},
           {}};
  for (Equation eq : {Equation::Wave, Equation::Schrodinger}) {
    double req = eq == Equation::Wave ? required : -1;
    NoncharReport r;
    try {
      r = check_noncharacteristic(f, flat_metric(), eq, {}, req);
    } catch (const CheckFailed& e) {
      o.checks.push_back(check_true("noncharacteristic." + to_string(eq),
                                    "leaves are noncharacteristic", false));
      continue;
    }
    std::vector<double> wst = r.worst;
    wst.resize(4, std::nan(""));
    nc.add({to_string(eq), fmt(r.min_slack), fmt(r.required), fmt(r.b), std::to_string(r.halvings),
            fmt(wst[0]), fmt(wst[1]), fmt(wst[2]), fmt(wst[3]), std::to_string(r.samples)});
    o.checks.push_back(make("noncharacteristic." + to_string(eq), "leaves are noncharacteristic",
                            r.min_slack, r.required, ">=", r.pass, false));
    if (eq == Equation::Wave) {
      double closed = 1 - alpha * alpha * l0 * l0 / (t0 * t0);
      double rel = std::abs(r.min_slack - closed) / std::abs(closed);
      o.checks.push_back(make("noncharacteristic.closed_form",
                              "wave slack matches 1 - alpha^2 l0^2 / t0^2", rel, 0.02, "<=",
                              rel <= 0.02, r.halvings > 0));
    }
  }
  o.tables.push_back(std::move(nc));

  // randomized radius oracles on a narrower foliation
  int n_or = P.positive("oracles");
  auto fw = with_width(f, std::min(b, 0.5));
  struct OracleRun {
    double r0 = 0, amp = 0, freq = 0, phase = 0;
    bool ok = false;
    std::string error;
    BallCover cover;
  };
  std::vector<OracleRun> runs(n_or);
  for (int k = 0; k < n_or; ++k) {
    std::mt19937_64 rng(stream_seed(cfg.seed, 4, k));
    std::uniform_real_distribution<double> u(0, 1);
    runs[k].r0 = 0.22 + 0.08 * u(rng);
    runs[k].amp = 0.05 * u(rng);
    runs[k].freq = 1 + 3 * u(rng);
    runs[k].phase = 2 * std::numbers::pi * u(rng);
  }
  parallel_for(n_or, [&](std::size_t k) {
    auto& r = runs[k];
    CoverOptions opt;
    opt.depth_frac = 0.3;
    RadiusOracle orc = [r](const Vec& x, double) {
      return Radii{r.r0 + r.amp * std::sin(r.freq * x[0] + r.phase), 0.3, 0.15};
    };
    try {
      r.cover = extract_cover(fw, orc, opt);
      r.ok = true;
    } catch (const CheckFailed& e) {
      r.error = e.what();
    }
  });
  Table ct{"covers",
           {{"oracle", "index"},
            {"r0", "base ball radius"},
            {"amplitude", "radius modulation amplitude"},
            {"frequency", "radius modulation frequency"},
            {"phase", "radius modulation phase"},
            {"leaves", "leaves in the cover"},
            {"balls", "balls in the cover"},
            {"covers", "intervals cover [0, 1]"},
            {"ordree", "each interval overlaps the previous ones"},
            {"min_overlap", "smallest overlap"},
            {"inegge_min", "min leaf inequality margin"},
            {"inclusion_min", "min inclusion depth"},
            {"coverage_min", "min ball-union depth over leaf samples"},
            {"error", "extraction failure message"}},
           {}};
  for (int k = 0; k < n_or; ++k) {
    const auto& r = runs[k];
    std::size_t balls = 0;
    double cov = std::numeric_limits<double>::infinity();
    double ov = std::numeric_limits<double>::infinity();
    for (const auto& L : r.cover.leaves) {
      balls += L.centers.size();
      cov = std::min(cov, L.coverage_margin);
    }
    for (double v : r.cover.order.overlap) ov = std::min(ov, v);
    bool good = r.ok && r.cover.order.covers && r.cover.order.ordree;
    ct.add({std::to_string(k), fmt(r.r0), fmt(r.amp), fmt(r.freq), fmt(r.phase),
            std::to_string(r.cover.leaves.size()), std::to_string(balls), yes(r.ok && r.cover.order.covers),
            yes(r.ok && r.cover.order.ordree), r.ok ? fmt(ov) : "", r.ok ? fmt(r.cover.inegge_min) : "",
            r.ok ? fmt(r.cover.inclusion_min) : "", r.ok ? fmt(cov) : "", r.error});
    o.checks.push_back(check_true("cover[" + std::to_string(k) + "]",
                                  "finite cover with ordered overlapping intervals", good));
  }
  o.tables.push_back(std::move(ct));

  // three-leaf flat instance: schedule, serialize, replay
  Vec lo(1), hi(1);
  lo << 0;
  hi << 1;
  auto ff = flat_foliation(lo, hi);
  CoverOptions co;
  co.eps0 = 0.45;
  co.candidates = 56;
  auto C = extract_cover(ff, constant_radii(0.6, 0.1, 0.3), co);
  auto cg = build_dependence_graph(ff, C, below_set(0.5, 2), below_set(0.6, 2), P.positive("per_axis"));
  Schedule sched;
  std::string text;
  if (P.given("schedule")) {
    std::ifstream in(P.str("schedule"));
    if (!in) throw ConfigError("foliate.schedule: cannot read " + P.str("schedule"));
    try {
      sched = schedule_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("foliate.schedule: ") + e.what());
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("foliate.schedule: ") + e.what());
    }
  } else {
    sched = propagate_dependence(cg);
    text = schedule_json(sched).dump(2) + "\n";
    extra.push_back({out_dir / "foliate_schedule.json", text});
    // replay what was written, not the in-memory object
    sched = schedule_from_json(json::parse(text));
  }
  auto rr = replay(cg.graph, sched);
  Table st{"schedule",
           {{"step", "index"},
            {"rule", "inference rule"},
            {"fact", "derived relation"},
            {"premises", "indices of the steps used, space separated"}},
           {}};
  for (std::size_t i = 0; i < sched.steps.size(); ++i) {
    std::string prem;
    for (int p : sched.steps[i].premises) prem += (prem.empty() ? "" : " ") + std::to_string(p);
    std::string desc;
    try {
      desc = cg.graph.describe(sched.steps[i].fact);
    } catch (const std::exception&) {
      desc = "?";
    }
    st.add({std::to_string(i), to_string(sched.steps[i].rule), desc, prem});
  }
  o.tables.push_back(std::move(st));
  o.checks.push_back(check_true("cover.inclusions", "sampled inclusion witnesses exist",
                                cg.inclusions.pass));
  Check c = check_true("schedule.replay", "propagation schedule replays", rr.ok);
  c.measured = rr.failed_step;
  c.threshold = -1;
  c.relation = "== (failed step)";
  o.checks.push_back(c);
  return o;
}

// ---- pde lab ----

ControlProblem lab_problem(const Params& P) {
  bool interval = P.choice("geometry", {"interval", "rectangle"}) == "interval";
  int side = P.integer("side");
  try {
    if (interval) return interval_problem(P.num("L"), P.num("T"), boundary_side(side), P.positive("N"));
    return rectangle_problem(P.num("a"), P.num("b"), P.num("T"), boundary_side(side),
                             P.positive("Nx"), P.positive("Ny"));
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

Output observability(const ExperimentConfig& cfg) {
  Params P(cfg, "observability");
  auto p = lab_problem(P);
  Equation eq = P.choice("equation", {"wave", "schrodinger"}) == "wave" ? Equation::Wave
                                                                        : Equation::Schrodinger;
  auto mus = distinct_frequencies(p, P.positive("frequencies"));
  StabilityReport r;
  try {
    r = filtered_stability(p, mus, eq, P.flag("allow_short_time"));
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  Output o;
  Table t{"bands",
          {{"mu", "frequency cutoff"},
           {"modes", "modes in the band"},
           {"cost", "sup of the weak norm over the observation on the band"},
           {"shift", "regularizing shift added to the Gramian eigenvalue"},
           {"weak", "L2 x H^-1 norm of the extremal datum"},
           {"strong", "H1 x L2 norm of the extremal datum"},
           {"obs", "observation of the extremal datum"},
           {"bound", "fitted bound C e^{kappa mu} obs + strong / mu"},
           {"holds", "weak <= bound"}},
          {}};
  for (const auto& row : r.rows)
    t.add({fmt(row.mu), std::to_string(row.modes), fmt(row.cost), fmt(row.shift), fmt(row.weak),
           fmt(row.strong), fmt(row.obs), fmt(row.bound), yes(row.holds)});
  o.tables.push_back(std::move(t));
  Table f = kv_table("fit");
  for (auto [n, v] : std::vector<std::pair<std::string, double>>{
           {"T", r.T}, {"length", r.length}, {"C_hat", r.C_hat}, {"kappa_hat", r.kappa_hat},
           {"residual", r.fit.residual}, {"used", double(r.fit.used)}})
    f.add({n, fmt(v)});
  o.tables.push_back(std::move(f));
  o.checks.push_back(make("stability.bound", "filtered stability bound with fitted constants",
                          r.violations, 0, "<=", r.bound_holds, false));
  if (P.given("residual_max"))
    o.checks.push_back(check_le("stability.fit_residual", "log cost is linear in mu",
                                r.fit.residual, P.num("residual_max")));
  if (P.given("kappa_max"))
    o.checks.push_back(check_le("stability.kappa", "fitted exponent (plateau under GCC)",
                                r.kappa_hat, P.num("kappa_max")));
  return o;
}

Output control_cost(const ExperimentConfig& cfg) {
  Params P(cfg, "control-cost");
  auto p = lab_problem(P);
  auto eps = P.list("eps");
  for (double e : eps)
    if (!(e > 0 && e < 1)) throw ConfigError("control-cost.eps: values must lie in (0, 1)");
  StatePair data = zero_state(p);
  int j0 = P.positive("mode_j"), n = P.positive("data_modes");
  int k = p.geometry == Geometry::Interval ? 0 : P.positive("mode_k");
  try {
    for (int j = j0; j < j0 + n; ++j) data.u0 += mode_state(p, j, k).u0;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  Output o;
  CostSweep sw;
  try {
    sw = control_cost_sweep(p, data, eps);
  } catch (const CheckFailed& e) {
    o.checks.push_back(check_true("control.sweep", "penalized duality reaches the target", false));
    return o;
  }
  Table t{"runs",
          {{"eps", "relative terminal tolerance"},
           {"cost", "L2 norm of the control"},
           {"deviation", "terminal L2 x H^-1 norm"},
           {"target", "eps times the H1 x L2 norm of the data"},
           {"alpha", "penalty parameter"},
           {"backward_error", "normwise backward error of the last solve"},
           {"truncation", "extension band deviation over the data norm"},
           {"truncation_ok", "truncation below eps / 10"},
           {"fallback", "direct solver used"},
           {"iterations", "CG iterations"},
           {"sweeps", "penalty values tried"},
           {"basis", "modes in the coupled block"}},
          {}};
  for (const auto& r : sw.runs) {
    t.add({fmt(r.eps), fmt(r.cost), fmt(r.deviation), fmt(r.target), fmt(r.alpha),
           fmt(r.cg_residual), fmt(r.truncation), yes(r.truncation_ok), yes(r.cg_fallback),
           std::to_string(r.iterations), std::to_string(r.sweeps), std::to_string(r.basis.size())});
    std::string nm = "control[" + fmt(r.eps) + "]";
    o.checks.push_back(check_le(nm + ".deviation", "terminal state within eps of zero",
                                r.deviation, r.target));
    o.checks.push_back(make(nm + ".truncation", "truncated modes stay below eps / 10",
                            r.truncation, r.eps / 10, "<=", r.truncation_ok, true));
  }
  o.tables.push_back(std::move(t));
  Table f = kv_table("fit");
  for (auto [nm, v] : std::vector<std::pair<std::string, double>>{
           {"slope", sw.fit.slope}, {"intercept", sw.fit.intercept},
           {"residual", sw.fit.residual}, {"ratio", sw.ratio}})
    f.add({nm, fmt(v)});
  o.tables.push_back(std::move(f));
  o.checks.push_back(check_true("control.monotone", "cost does not decrease as eps shrinks", sw.monotone));
  o.checks.push_back(check_ge("control.slope", "log cost against 1/eps has nonnegative slope",
                              sw.fit.slope, 0));
  if (P.given("ratio_max"))
    o.checks.push_back(check_le("control.ratio", "cost plateaus under GCC", sw.ratio, P.num("ratio_max")));
  return o;
}

Output log_stability(const ExperimentConfig& cfg) {
  Params P(cfg, "log-stability");
  LogStability ls;
  try {
    ls = log_stability_constants(P.num("C1"), P.num("C2"), P.num("alpha"), P.num("mu0"));
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  auto h = validate_log_stability(ls, P.positive("triples"), split_seed(cfg.seed, 5),
                                  P.positive("mu_grid"));
  Output o;
  Table t = kv_table("constants");
  for (auto [n, v] : std::vector<std::pair<std::string, double>>{
           {"C1", ls.C1}, {"C2", ls.C2}, {"alpha", ls.alpha}, {"mu0", ls.mu0}, {"C3", ls.C3},
           {"x_star", ls.x_star}, {"D1", ls.D1}, {"D2", ls.D2}, {"triples", double(h.triples)},
           {"violations_a", double(h.violations_a)}, {"violations_c", double(h.violations_c)},
           {"worst_a", h.worst_a}, {"worst_c", h.worst_c}})
    t.add({n, fmt(v)});
  o.tables.push_back(std::move(t));
  o.checks.push_back(check_le("log_stability.first", "first output bound on random triples",
                              double(h.violations_a), 0));
  o.checks.push_back(check_le("log_stability.second", "second output bound on random triples",
                              double(h.violations_c), 0));
  return o;
}

json check_json(const Check& c) {
  return json{{"name", c.name},           {"anchor", c.anchor},
              {"measured", c.measured},   {"threshold", c.threshold},
              {"relation", c.relation},   {"severity", c.warning ? "warning" : "error"},
              {"verdict", c.pass ? "pass" : "fail"}};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw ConfigError("cannot write " + path.string());
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"verify-lemmas", "pseudoconvexity", "quadrant", "foliate",
                                          "observability", "control-cost", "log-stability"};
  return s;
}

std::string usage() {
  std::string s =
      "usage: ulab_cli <subcommand> [--config FILE] [--out DIR] [--seed N] [--threads N] [--strict]\n"
      "       ulab_cli quadrant --params default --certify-barrier\n"
      "subcommands:";
  for (const auto& c : subcommands()) s += " " + c;
  s += "\nconfig: key = value lines; top level keys command, out, seed, threads, strict;\n"
       "        [subcommand] sections hold that subcommand's parameters.\n"
       "exit status: 0 all checks pass, 1 a check failed, 2 configuration error\n";
  return s;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string where = "line " + std::to_string(line_no) + ": ";
    std::string line;
    bool quoted = false;
    for (char ch : raw) {
      if (ch == '"') quoted = !quoted;
      if (ch == '#' && !quoted) break;
      line += ch;
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
      val = val.substr(1, val.size() - 2);
    else if (val.size() >= 2 && val.front() == '[' && val.back() == ']')
      val = trim(val.substr(1, val.size() - 2));
    else if (val.empty())
      throw ConfigError(where + "missing value for " + key);
    std::string full = section.empty() ? key : section + "." + key;
    if (!seen.insert(full).second) throw ConfigError(where + "duplicate key " + full);
    if (full.find('.') == std::string::npos) {
      if (!kTopKeys.count(full)) throw ConfigError(where + "unknown key " + full);
      if (full == "command") {
        if (std::find(subcommands().begin(), subcommands().end(), val) == subcommands().end())
          throw ConfigError(where + "unknown subcommand " + val);
        cfg.subcommand = val;
      } else if (full == "out") {
        cfg.out = val;
      } else if (full == "seed") {
        cfg.seed = to_u64(full, val);
      } else if (full == "threads") {
        long t = to_long(full, val);
        if (t < 0 || t > 4096) throw ConfigError(where + "threads out of range");
        cfg.threads = static_cast<int>(t);
      } else {
        cfg.strict = to_bool(full, val);
      }
    } else {
      cfg.params[full] = val;
    }
  }
  try {
    validate_keys(cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void validate_keys(const ExperimentConfig& cfg) {
  for (const auto& [k, v] : cfg.params) {
    auto dot = k.find('.');
    if (dot == std::string::npos) throw ConfigError("unknown key " + k);
    auto it = schema().find(k.substr(0, dot));
    if (it == schema().end()) throw ConfigError("unknown section in " + k);
    std::string key = k.substr(dot + 1);
    if (std::none_of(it->second.begin(), it->second.end(), [&](const Param& p) { return p.key == key; }))
      throw ConfigError("unknown key " + k);
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string r = "\"";
  for (char c : s) {
    if (c == '"') r += '"';
    r += c;
  }
  return r + "\"";
}

std::string csv_record(const std::vector<std::string>& fields) {
  std::string r;
  for (std::size_t i = 0; i < fields.size(); ++i) r += (i ? "," : "") + csv_field(fields[i]);
  return r + "\r\n";
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size())
    throw std::logic_error("table " + name + ": row width " + std::to_string(row.size()));
  rows.push_back(std::move(row));
}

std::string Table::csv() const {
  std::vector<std::string> head;
  for (const auto& c : columns) head.push_back(c.name);
  std::string s = csv_record(head);
  for (const auto& r : rows) s += csv_record(r);
  return s;
}

Check check_le(std::string name, std::string anchor, double m, double t, bool warning) {
  return make(std::move(name), std::move(anchor), m, t, "<=", m <= t, warning);
}

Check check_ge(std::string name, std::string anchor, double m, double t, bool warning) {
  return make(std::move(name), std::move(anchor), m, t, ">=", m >= t, warning);
}

Check check_true(std::string name, std::string anchor, bool ok, bool warning) {
  return make(std::move(name), std::move(anchor), ok ? 1 : 0, 1, "==", ok, warning);
}

RunResult run(const ExperimentConfig& cfg, std::ostream& log) {
  RunResult res;
  auto t0 = std::chrono::steady_clock::now();
  Output o;
  std::vector<std::pair<fs::path, std::string>> extra;
  try {
    validate_keys(cfg);
    const auto& subs = subcommands();
    if (std::find(subs.begin(), subs.end(), cfg.subcommand) == subs.end())
      throw ConfigError(cfg.subcommand.empty() ? "no subcommand given"
                                               : "unknown subcommand " + cfg.subcommand);
    if (cfg.threads > 0) set_threads(cfg.threads);
    fs::create_directories(cfg.out);
    const std::string& s = cfg.subcommand;
    if (s == "verify-lemmas") o = verify_lemmas(cfg);
    else if (s == "pseudoconvexity") o = pseudoconvexity(cfg);
    else if (s == "quadrant") o = quadrant(cfg);
    else if (s == "foliate") o = foliate(cfg, cfg.out, extra);
    else if (s == "observability") o = observability(cfg);
    else if (s == "control-cost") o = control_cost(cfg);
    else o = log_stability(cfg);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n" << usage();
    res.status = 2;
    return res;
  } catch (const fs::filesystem_error& e) {
    log << "config error: " << e.what() << "\n";
    res.status = 2;
    return res;
  }
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (const auto& c : o.checks)
    if (!c.pass && (!c.warning || cfg.strict)) res.failed.push_back(c.name);
  res.status = res.failed.empty() ? 0 : 1;

  Params P(cfg, cfg.subcommand);
  json summary{{"schema_version", kSchemaVersion},
               {"subcommand", cfg.subcommand},
               {"seed", cfg.seed},
               {"threads", thread_count()},
               {"strict", cfg.strict},
               {"parameters", P.all()}};
  json tabs = json::array();
  for (const auto& t : o.tables) {
    fs::path file = cfg.out / (cfg.subcommand + "_" + t.name + ".csv");
    extra.push_back({file, t.csv()});
    json cols = json::array();
    for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"doc", c.doc}});
    tabs.push_back({{"name", t.name}, {"file", file.filename().string()}, {"rows", t.rows.size()},
                    {"columns", cols}});
  }
  summary["tables"] = tabs;
  json checks = json::array();
  for (const auto& c : o.checks) checks.push_back(check_json(c));
  summary["checks"] = checks;
  summary["failed"] = res.failed;
  summary["status"] = res.status;
  summary["elapsed_seconds"] = elapsed;
  extra.push_back({cfg.out / (cfg.subcommand + "_summary.json"), summary.dump(2) + "\n"});

  // single writer
  try {
    for (const auto& [path, text] : extra) {
      write_file(path, text);
      res.files.push_back(path);
    }
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    res.status = 2;
    return res;
  }
  for (const auto& c : o.checks)
    log << (c.pass ? "PASS " : c.warning ? "WARN " : "FAIL ") << c.name << "  " << fmt(c.measured)
        << " " << c.relation << " " << fmt(c.threshold) << "\n";
  if (!res.failed.empty()) {
    log << "failed checks:";
    for (const auto& n : res.failed) log << " " << n;
    log << "\n";
  }
  res.checks = std::move(o.checks);
  res.tables = std::move(o.tables);
  return res;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"unique continuation numerics lab"};
  std::string sub, config, outdir, params;
  std::uint64_t seed = 0;
  int threads = 0;
  bool strict = false, certify = false;
  app.add_option("subcommand", sub, "one of the subcommands");
  auto* o_config = app.add_option("--config", config, "configuration file");
  auto* o_out = app.add_option("--out", outdir, "output directory");
  auto* o_seed = app.add_option("--seed", seed, "64-bit seed");
  auto* o_threads = app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 4096));
  app.add_flag("--strict", strict, "treat warnings as failures");
  auto* o_params = app.add_option("--params", params, "quadrant: default or custom");
  auto* o_cert = app.add_flag("--certify-barrier", certify, "quadrant: certify the barrier margin");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help() << usage();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << usage();
    return 2;
  }
  ExperimentConfig cfg;
  try {
    if (o_config->count()) {
      cfg = load_config(config);
      if (cfg.empty()) {
        err << "empty config " << config << "\n" << usage();
        return 2;
      }
    }
    if (!sub.empty()) {
      if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end())
        throw ConfigError("unknown subcommand " + sub);
      cfg.subcommand = sub;
    }
    if (cfg.subcommand.empty()) {
      err << "no subcommand\n" << usage();
      return 2;
    }
    if (o_out->count()) cfg.out = outdir;
    if (o_seed->count()) cfg.seed = seed;
    if (o_threads->count()) cfg.threads = threads;
    if (strict) cfg.strict = true;
    if ((o_params->count() || o_cert->count()) && cfg.subcommand != "quadrant")
      throw ConfigError("--params and --certify-barrier belong to quadrant");
    if (o_params->count()) cfg.params["quadrant.params"] = params;
    if (certify) cfg.params["quadrant.certify_barrier"] = "true";
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n" << usage();
    return 2;
  }
  return run(cfg, err).status;
}

}  // namespace ulab::cli
