#include <cmath>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "homsusp/app.hpp"
#include "homsusp/error.hpp"
#include "homsusp/io.hpp"

namespace homsusp {

namespace {

[[noreturn]] void config_fail(const std::string& what) { fail(ErrorCode::ConfigError, what); }

double to_number(const toml::node& node, const std::string& key) {
  if (auto v = node.value_exact<double>()) return *v;
  if (auto v = node.value_exact<std::int64_t>()) return static_cast<double>(*v);
  if (auto s = node.value_exact<std::string>()) {
    try {
      return Rational::parse(*s).to_double();
    } catch (const Error&) {
    }
  }
  config_fail("'" + key + "' must be a number or a fraction string");
}

class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  std::string key(const char* k) const { return name_.empty() ? k : name_ + "." + k; }
  const toml::node* find(const char* k) {
    used_.insert(k);
    return table_ ? table_->get(k) : nullptr;
  }

  void get(const char* k, double& out) {
    if (auto* n = find(k)) out = to_number(*n, key(k));
  }
  void get(const char* k, int& out) {
    if (auto* n = find(k)) {
      auto v = n->value_exact<std::int64_t>();
      if (!v || *v < INT32_MIN || *v > INT32_MAX) config_fail("'" + key(k) + "' must be an integer");
      out = static_cast<int>(*v);
    }
  }
  void get(const char* k, std::uint64_t& out) {
    if (auto* n = find(k)) {
      auto v = n->value_exact<std::int64_t>();
      if (!v || *v < 0) config_fail("'" + key(k) + "' must be a nonnegative integer");
      out = static_cast<std::uint64_t>(*v);
    }
  }
  void get(const char* k, bool& out) {
    if (auto* n = find(k)) {
      auto v = n->value_exact<bool>();
      if (!v) config_fail("'" + key(k) + "' must be true or false");
      out = *v;
    }
  }
  void get(const char* k, std::string& out) {
    if (auto* n = find(k)) {
      if (auto s = n->value_exact<std::string>()) {
        out = *s;
      } else if (n->is_number()) {
        out = Rational::from_double(to_number(*n, key(k))).str();
      } else {
        config_fail("'" + key(k) + "' must be a string");
      }
    }
  }
  void get(const char* k, std::vector<double>& out) {
    if (auto* n = find(k)) out = numbers(*n, key(k));
  }
  template <std::size_t N>
  void get(const char* k, std::array<double, N>& out) {
    if (auto* n = find(k)) {
      const auto v = numbers(*n, key(k));
      if (v.size() != N) config_fail("'" + key(k) + "' must have " + std::to_string(N) + " entries");
      std::copy(v.begin(), v.end(), out.begin());
    }
  }
  void get(const char* k, std::vector<std::string>& out) {
    if (auto* n = find(k)) {
      const auto* arr = n->as_array();
      if (!arr) config_fail("'" + key(k) + "' must be an array");
      out.clear();
      for (const auto& e : *arr) {
        if (auto s = e.value_exact<std::string>())
          out.push_back(*s);
        else if (e.is_number())
          out.push_back(Rational::from_double(to_number(e, key(k))).str());
        else
          config_fail("'" + key(k) + "' must hold strings or numbers");
      }
    }
  }
  void get(const char* k, std::vector<std::array<double, 2>>& out) {
    if (auto* n = find(k)) {
      const auto* arr = n->as_array();
      if (!arr) config_fail("'" + key(k) + "' must be an array of pairs");
      out.clear();
      for (const auto& e : *arr) {
        const auto v = numbers(e, key(k));
        if (v.size() != 2) config_fail("'" + key(k) + "' must hold pairs");
        out.push_back({v[0], v[1]});
      }
    }
  }

  const toml::table* subtable(const char* k) {
    auto* n = find(k);
    if (!n) return nullptr;
    if (!n->is_table()) config_fail("'" + key(k) + "' must be a table");
    return n->as_table();
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_)
      if (!used_.count(std::string(k.str()))) config_fail("unknown key '" + key(std::string(k.str()).c_str()) + "'");
  }

 private:
  static std::vector<double> numbers(const toml::node& n, const std::string& key) {
    const auto* arr = n.as_array();
    if (!arr) config_fail("'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) out.push_back(to_number(e, key));
    return out;
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

void read_picard(Section& parent, const char* name, PicardConfig& p) {
  Section s(parent.subtable(name), parent.key(name));
  s.get("theta", p.theta);
  s.get("max_iterations", p.max_iterations);
  s.get("tol", p.tol);
  s.finish();
}

void check(bool cond, const std::string& what) {
  if (!cond) config_fail(what);
}

void validate(const RunConfig& c) {
  check(c.dim == 2 || c.dim == 3, "dim must be 2 or 3");
  check(c.dim == 2, "dim = 3 is not available in this build");
  check(c.jobs >= 1, "jobs must be >= 1");
  check(!c.out.empty(), "out must not be empty");
  const auto& g = c.geometry;
  check(g.phi >= 0.0 && g.phi < 1.0, "geometry.phi must lie in [0, 1)");
  check(g.h_per_cell > 0.0 && g.h_per_cell <= 0.5, "geometry.h_per_cell must lie in (0, 1/2]");
  check(g.domain_lo[0] < g.domain_hi[0] && g.domain_lo[1] < g.domain_hi[1], "geometry.domain_lo must be below domain_hi");
  check(c.fem.solver == "auto" || c.fem.solver == "direct" || c.fem.solver == "uzawa",
        "fem.solver must be auto, direct or uzawa");
  check(c.fem.tol > 0.0 && c.fem.max_iterations > 0 && c.fem.direct_limit > 0, "fem tolerances must be positive");
  check(c.cell.mu > 0.0, "cell.mu must be positive");
  check(c.cell.h > 0.0 && c.cell.h <= 0.5, "cell.h must lie in (0, 1/2]");
  const auto& f = c.forces;
  check(f.law == "uniform" || f.law == "lognormal", "forces.law must be uniform or lognormal");
  check(f.expectation == "closed_form" || f.expectation == "monte_carlo",
        "forces.expectation must be closed_form or monte_carlo");
  check(f.samples >= 2, "forces.samples must be >= 2");
  check(f.ergodic_midpoints >= 1 && f.ergodic_seeds >= 1, "forces.ergodic_* must be positive");
  check(c.macro.h > 0.0 && c.macro.h <= 0.5, "macro.h must lie in (0, 1/2]");
  check(c.macro.body_force == "none" || c.macro.body_force == "vortex" || c.macro.body_force == "sincos" ||
            c.macro.body_force == "constant",
        "macro.body_force must be none, vortex, sincos or constant");
  for (const PicardConfig* p : {&c.macro.picard, &c.micro.picard})
    check(p->theta > 0.0 && p->theta <= 1.0 && p->tol > 0.0 && p->max_iterations > 0,
          "picard needs theta in (0, 1], tol > 0, max_iterations > 0");
  check(!c.verify.eps.empty() && c.verify.seed_count >= 1, "verify needs eps values and seed_count >= 1");
  check(c.verify.dilute_phi.size() >= 2 && c.verify.dilute_h.size() >= 2,
        "verify.dilute_phi and verify.dilute_h need at least two entries");

  try {
    make_shape(c).validate();
    for (const auto& e : c.verify.eps) check(Rational::parse(e) > Rational(0), "verify.eps entries must be positive");
    check(Rational::parse(g.eps) > Rational(0), "geometry.eps must be positive");
    check(Rational::parse(f.ergodic_eps) > Rational(0), "forces.ergodic_eps must be positive");
    make_force_model(c);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) config_fail(e.what());
    throw;
  }
}

toml::array array_of(const std::vector<double>& v) {
  toml::array a;
  for (double x : v) a.push_back(x);
  return a;
}

template <std::size_t N>
toml::array array_of(const std::array<double, N>& v) {
  return array_of(std::vector<double>(v.begin(), v.end()));
}

toml::table picard_table(const PicardConfig& p) {
  return toml::table{{"theta", p.theta}, {"max_iterations", p.max_iterations}, {"tol", p.tol}};
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ": " << e.description() << " at line " << e.source().begin.line;
    config_fail(os.str());
  }
  RunConfig c;
  Section top(&root, "");
  top.get("seed", c.seed);
  top.get("out", c.out);
  top.get("jobs", c.jobs);
  top.get("dim", c.dim);
  top.get("quiet", c.quiet);
  {
    Section s(top.subtable("geometry"), "geometry");
    auto& g = c.geometry;
    s.get("shape", g.shape);
    s.get("phi", g.phi);
    s.get("aspect", g.aspect);
    s.get("corner", g.corner);
    s.get("delta_min", g.delta_min);
    s.get("domain_lo", g.domain_lo);
    s.get("domain_hi", g.domain_hi);
    s.get("eps", g.eps);
    s.get("h_per_cell", g.h_per_cell);
    s.finish();
  }
  {
    Section s(top.subtable("fem"), "fem");
    s.get("solver", c.fem.solver);
    s.get("direct_limit", c.fem.direct_limit);
    s.get("tol", c.fem.tol);
    s.get("max_iterations", c.fem.max_iterations);
    s.finish();
  }
  {
    Section s(top.subtable("cell"), "cell");
    s.get("mu", c.cell.mu);
    s.get("h", c.cell.h);
    s.get("strain", c.cell.strain);
    s.finish();
  }
  {
    Section s(top.subtable("forces"), "forces");
    auto& f = c.forces;
    s.get("profile", f.profile);
    s.get("b", f.b);
    s.get("kappa", f.kappa);
    s.get("weight_mean", f.weight_mean);
    s.get("weight_cos", f.weight_cos);
    s.get("weight_sin", f.weight_sin);
    s.get("law", f.law);
    s.get("lo", f.lo);
    s.get("hi", f.hi);
    s.get("mu_ln", f.mu_ln);
    s.get("sigma_ln", f.sigma_ln);
    s.get("expectation", f.expectation);
    s.get("samples", f.samples);
    s.get("z", f.z);
    s.get("ergodic_eps", f.ergodic_eps);
    s.get("ergodic_midpoints", f.ergodic_midpoints);
    s.get("ergodic_seeds", f.ergodic_seeds);
    s.finish();
  }
  {
    Section s(top.subtable("macro"), "macro");
    s.get("h", c.macro.h);
    s.get("body_force", c.macro.body_force);
    s.get("body_force_value", c.macro.body_force_value);
    s.get("tabulate", c.macro.tabulate);
    s.get("table_points", c.macro.table_points);
    read_picard(s, "picard", c.macro.picard);
    s.finish();
  }
  {
    Section s(top.subtable("micro"), "micro");
    read_picard(s, "picard", c.micro.picard);
    s.finish();
  }
  {
    Section s(top.subtable("verify"), "verify");
    s.get("eps", c.verify.eps);
    s.get("seed_count", c.verify.seed_count);
    s.get("dilute_phi", c.verify.dilute_phi);
    s.get("dilute_h", c.verify.dilute_h);
    s.finish();
  }
  top.finish();
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    config_fail("cannot read config '" + path + "': " + e.what());
  }
  return parse_config(text, path);
}

std::string resolved_config(const RunConfig& c) {
  const auto& g = c.geometry;
  const auto& f = c.forces;
  toml::array z;
  for (const auto& p : f.z) z.push_back(array_of(p));
  toml::array eps;
  for (const auto& e : c.verify.eps) eps.push_back(e);
  toml::table root{
      {"seed", static_cast<std::int64_t>(c.seed)},
      {"out", c.out},
      {"jobs", c.jobs},
      {"dim", c.dim},
      {"quiet", c.quiet},
      {"geometry", toml::table{{"shape", g.shape},
                               {"phi", g.phi},
                               {"aspect", g.aspect},
                               {"corner", g.corner},
                               {"delta_min", g.delta_min},
                               {"domain_lo", array_of(g.domain_lo)},
                               {"domain_hi", array_of(g.domain_hi)},
                               {"eps", g.eps},
                               {"h_per_cell", g.h_per_cell}}},
      {"fem", toml::table{{"solver", c.fem.solver},
                          {"direct_limit", c.fem.direct_limit},
                          {"tol", c.fem.tol},
                          {"max_iterations", c.fem.max_iterations}}},
      {"cell", toml::table{{"mu", c.cell.mu}, {"h", c.cell.h}, {"strain", array_of(c.cell.strain)}}},
      {"forces", toml::table{{"profile", f.profile},
                             {"b", array_of(f.b)},
                             {"kappa", f.kappa},
                             {"weight_mean", f.weight_mean},
                             {"weight_cos", array_of(f.weight_cos)},
                             {"weight_sin", array_of(f.weight_sin)},
                             {"law", f.law},
                             {"lo", f.lo},
                             {"hi", f.hi},
                             {"mu_ln", f.mu_ln},
                             {"sigma_ln", f.sigma_ln},
                             {"expectation", f.expectation},
                             {"samples", f.samples},
                             {"z", z},
                             {"ergodic_eps", f.ergodic_eps},
                             {"ergodic_midpoints", f.ergodic_midpoints},
                             {"ergodic_seeds", f.ergodic_seeds}}},
      {"macro", toml::table{{"h", c.macro.h},
                            {"body_force", c.macro.body_force},
                            {"body_force_value", array_of(c.macro.body_force_value)},
                            {"tabulate", c.macro.tabulate},
                            {"table_points", c.macro.table_points},
                            {"picard", picard_table(c.macro.picard)}}},
      {"micro", toml::table{{"picard", picard_table(c.micro.picard)}}},
      {"verify", toml::table{{"eps", eps},
                             {"seed_count", c.verify.seed_count},
                             {"dilute_phi", array_of(c.verify.dilute_phi)},
                             {"dilute_h", array_of(c.verify.dilute_h)}}},
  };
  std::ostringstream os;
  os << root << "\n";
  return os.str();
}

void apply_overrides(RunConfig& config, const Overrides& o) {
  if (o.seed) config.seed = *o.seed;
  if (o.jobs) config.jobs = *o.jobs;
  if (o.out) config.out = *o.out;
  if (o.dim) config.dim = *o.dim;
  if (o.quiet) config.quiet = true;
  validate(config);
}

InclusionShape make_shape(const RunConfig& config) {
  const auto& g = config.geometry;
  InclusionShape s;
  s.kind = shape_kind_from_string(g.shape);
  s.phi = g.phi;
  s.aspect = g.aspect;
  s.corner = g.corner;
  s.delta_min = g.delta_min;
  return s;
}

Box make_domain(const RunConfig& config) {
  Box b;
  for (int i = 0; i < 2; ++i) {
    b.lo[i] = Rational::from_double(config.geometry.domain_lo[i]);
    b.hi[i] = Rational::from_double(config.geometry.domain_hi[i]);
  }
  return b;
}

SolverOptions make_solver_options(const RunConfig& config) {
  SolverOptions o;
  const auto& m = config.fem.solver;
  o.method = m == "direct" ? SolverOptions::Method::Direct
             : m == "uzawa" ? SolverOptions::Method::Uzawa
                            : SolverOptions::Method::Auto;
  o.direct_limit = config.fem.direct_limit;
  o.tol = config.fem.tol;
  o.max_iterations = config.fem.max_iterations;
  return o;
}

std::optional<SurfaceForceModel> make_force_model(const RunConfig& config) {
  const auto& f = config.forces;
  Profile profile;
  switch (profile_kind_from_string(f.profile)) {
    case Profile::Kind::None: profile = Profile::none(); break;
    case Profile::Kind::Linear: profile = Profile::linear(Vec2(f.b[0], f.b[1])); break;
    case Profile::Kind::Sqrt1p: profile = Profile::sqrt1p(); break;
    case Profile::Kind::Huber: profile = Profile::huber(f.kappa); break;
  }
  SurfaceWeight w;
  w.mean = f.weight_mean;
  w.cos_coef = f.weight_cos;
  w.sin_coef = f.weight_sin;
  const AmplitudeLaw law = f.law == "lognormal" ? AmplitudeLaw::lognormal(f.mu_ln, f.sigma_ln)
                                                : AmplitudeLaw::uniform(f.lo, f.hi);
  const InclusionShape shape = make_shape(config);
  if (shape.empty()) return std::nullopt;
  SurfaceForceModel model(shape, profile, w, law);
  if (model.is_zero()) return std::nullopt;
  return model;
}

VectorFn make_body_force(const RunConfig& config) {
  const auto& name = config.macro.body_force;
  if (name == "vortex")
    return [](const Vec2& x) {
      const Vec2 r = x - Vec2(0.5, 0.5);
      const double g = 20.0 * std::exp(-r.squaredNorm() / 0.04);
      return Vec2(-r.y() * g, r.x() * g);
    };
  if (name == "sincos")
    return [](const Vec2& x) { return Vec2(std::sin(kPi * x.y()) + 1.0, std::cos(2.0 * kPi * x.x()) * x.y()); };
  if (name == "constant") {
    const Vec2 v(config.macro.body_force_value[0], config.macro.body_force_value[1]);
    return [v](const Vec2&) { return v; };
  }
  return {};
}

}  // namespace homsusp
