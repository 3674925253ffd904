#include "epigrid/io/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "epigrid/errors.hpp"
#include "epigrid/io/format.hpp"

namespace epigrid {
namespace {

using nlohmann::json;

// One JSON object being read: records the keys it consumed and writes the
// value actually used (default or given) into `out`.
class Section {
 public:
  Section(const json& in, json& out, std::string path) : in_(in), out_(out), path_(std::move(path)) {
    if (!in_.is_object()) fail("", "must be an object");
    out_ = json::object();
  }

  bool has(const std::string& key) const { return in_.contains(key) && !in_[key].is_null(); }

  double number(const std::string& key, double fallback) {
    double v = fallback;
    if (has(key)) {
      const json& j = take(key);
      if (!j.is_number()) fail(key, "must be a number");
      v = j.get<double>();
    } else {
      used_.insert(key);
    }
    out_[key] = v;
    return v;
  }

  std::optional<double> optional_number(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    std::int64_t v = fallback;
    if (has(key)) {
      const json& j = take(key);
      if (j.is_number_integer()) {
        v = j.get<std::int64_t>();
      } else if (j.is_number_float() && std::floor(j.get<double>()) == j.get<double>() &&
                 std::abs(j.get<double>()) < 9e15) {
        v = static_cast<std::int64_t>(j.get<double>());
      } else {
        fail(key, "must be an integer, got " + j.dump());
      }
    } else {
      used_.insert(key);
    }
    out_[key] = v;
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    std::uint64_t v = fallback;
    if (has(key)) {
      const json& j = take(key);
      if (!j.is_number_unsigned()) fail(key, "must be a nonnegative integer, got " + j.dump());
      v = j.get<std::uint64_t>();
    } else {
      used_.insert(key);
    }
    out_[key] = v;
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    bool v = fallback;
    if (has(key)) {
      const json& j = take(key);
      if (!j.is_boolean()) fail(key, "must be true or false");
      v = j.get<bool>();
    } else {
      used_.insert(key);
    }
    out_[key] = v;
    return v;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    std::string v = fallback;
    if (has(key)) {
      const json& j = take(key);
      if (!j.is_string()) fail(key, "must be a string");
      v = j.get<std::string>();
    } else {
      used_.insert(key);
    }
    out_[key] = v;
    return v;
  }

  const json& raw(const std::string& key) { return take(key); }
  json& out(const std::string& key) { return out_[key]; }

  Section sub(const std::string& key) {
    static const json empty = json::object();
    used_.insert(key);
    return Section(has(key) ? in_[key] : empty, out_[key], qualified(key));
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ValidationError("config " + (key.empty() ? (path_.empty() ? "root" : path_) : qualified(key)) + " " +
                          what);
  }

  void finish() const {
    for (const auto& [k, v] : in_.items()) {
      if (!used_.count(k)) fail(k, "is not a recognized key");
    }
  }

 private:
  const json& take(const std::string& key) {
    used_.insert(key);
    return in_[key];
  }

  const json& in_;
  json& out_;
  std::string path_;
  std::set<std::string> used_;
};

InfectivityLaw read_law(Section& s) {
  const std::string kind = s.string("kind", "exponential_death");
  LawKind law;
  if (kind == "exponential_death") {
    law = ExponentialDeath{s.number("level", 1.0), s.number("rate", 1.0)};
  } else if (kind == "fixed_death") {
    law = FixedDeath{s.number("level", 1.0), s.number("duration", 1.0)};
  } else if (kind == "trapezoid") {
    law = Trapezoid{s.number("peak", 1.0), s.number("ramp_up", 0.1), s.number("plateau_min", 0.2),
                    s.number("plateau_max", 0.5), s.number("ramp_down", 0.3)};
  } else {
    s.fail("kind", "must be one of exponential_death, fixed_death, trapezoid; got '" + kind + "'");
  }
  const double shift = s.number("age_shift", 0.0);
  const auto lambda_star = s.optional_number("lambda_star");
  InfectivityLaw out = lambda_star ? InfectivityLaw(std::move(law), *lambda_star, shift)
                                   : InfectivityLaw::with_default_bound(std::move(law), shift);
  s.out("lambda_star") = out.lambda_star();
  s.finish();
  return out;
}

ContactKernel read_kernel(Section& s, const TorusGrid& grid) {
  const std::string kind = s.string("kind", "local");
  KernelKind k;
  if (kind == "local") {
    k = LocalKernel{s.number("scale", 1.0)};
  } else if (kind == "gaussian") {
    k = GaussianKernel{s.number("scale", 1.0), s.number("sigma", 0.1)};
  } else if (kind == "top_hat") {
    k = TopHatKernel{s.number("scale", 1.0), s.number("radius", 0.1)};
  } else if (kind == "matrix") {
    if (!s.has("entries")) s.fail("entries", "is required for matrix kernels");
    const json& e = s.raw("entries");
    std::vector<double> flat;
    if (!e.is_array()) s.fail("entries", "must be an array of rows");
    for (const auto& row : e) {
      if (!row.is_array()) s.fail("entries", "must be an array of rows");
      for (const auto& v : row) {
        if (!v.is_number()) s.fail("entries", "must hold numbers");
        flat.push_back(v.get<double>());
      }
    }
    s.out("entries") = e;
    k = MatrixKernel{grid.dim(), grid.inv_mesh(), flat};
  } else {
    s.fail("kind", "must be one of local, gaussian, top_hat, matrix; got '" + kind + "'");
  }
  Section m = s.sub("modulation");
  const Modulation mod{m.number("amplitude", 0.0), m.number("period", 1.0)};
  m.finish();
  const auto beta_star = s.optional_number("beta_star");
  ContactKernel out = beta_star ? ContactKernel(std::move(k), *beta_star, mod)
                                : ContactKernel::with_default_bound(std::move(k), mod);
  s.out("beta_star") = out.beta_star();
  s.finish();
  // Row sums on this grid, and matrix shape.
  out.discretize_base(grid);
  return out;
}

FourierDensity read_density(Section& s, int dim) {
  FourierDensity d;
  d.mean = s.number("mean", 0.0);
  json terms_out = json::array();
  if (s.has("terms")) {
    const json& terms = s.raw("terms");
    if (!terms.is_array()) s.fail("terms", "must be an array");
    for (std::size_t n = 0; n < terms.size(); ++n) {
      json t_out;
      Section t(terms[n], t_out, s.qualified("terms[" + std::to_string(n) + "]"));
      FourierTerm term;
      if (!t.has("k") || !t.raw("k").is_array()) t.fail("k", "must be an integer array");
      for (const auto& v : t.raw("k")) {
        if (!v.is_number_integer()) t.fail("k", "must be an integer array");
        term.k.push_back(v.get<int>());
      }
      if (static_cast<int>(term.k.size()) != dim) t.fail("k", "must have one entry per grid axis");
      t_out["k"] = term.k;
      term.cos_coef = t.number("cos", 0.0);
      term.sin_coef = t.number("sin", 0.0);
      t.finish();
      d.terms.push_back(term);
      terms_out.push_back(t_out);
    }
  }
  s.out("terms") = terms_out;
  s.finish();
  return d;
}

void check_divides(double horizon, double step, const std::string& what) {
  try {
    step_count(horizon, step);
  } catch (const ValidationError&) {
    throw ValidationError("config " + what + " = " + format_double(step) + " must divide the horizon " +
                          format_double(horizon));
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig config_from_json(const json& input) {
  RunConfig c;
  json resolved;
  Section root(input, resolved, "");

  Section g = root.sub("grid");
  const auto dim = g.integer("dim", 1);
  const auto inv = g.integer("inv_eps", 8);
  g.finish();
  if (dim < 1 || dim > 3) g.fail("dim", "must be 1, 2 or 3");
  if (inv < 1) g.fail("inv_eps", "must be a positive integer");
  c.grid = TorusGrid(static_cast<int>(dim), static_cast<int>(inv));

  Section p = root.sub("params");
  c.params.nu_s = p.number("nu_s", 0.02);
  c.params.nu_i = p.number("nu_i", 0.02);
  c.params.gamma = p.number("gamma", 0.0);
  c.params.horizon = p.number("horizon", 1.0);
  p.finish();
  c.params.validate();

  Section law = root.sub("law");
  c.law = read_law(law);
  if (root.has("initial_law")) {
    Section il = root.sub("initial_law");
    c.initial_law = read_law(il);
  } else {
    c.initial_law = c.law;
    resolved["initial_law"] = resolved["law"];
  }

  Section k = root.sub("kernel");
  c.kernel = read_kernel(k, c.grid);

  Section init = root.sub("initial");
  if (init.has("preset")) {
    const std::string preset = init.string("preset", "cosine");
    init.finish();
    std::tie(c.s0, c.i0) = density_preset(preset, c.grid.dim());
  } else if (init.has("s") || init.has("i")) {
    Section s = init.sub("s");
    c.s0 = read_density(s, c.grid.dim());
    Section i = init.sub("i");
    c.i0 = read_density(i, c.grid.dim());
    init.finish();
  } else {
    init.string("preset", "cosine");
    init.finish();
    std::tie(c.s0, c.i0) = density_preset("cosine", c.grid.dim());
  }
  validate_densities(c.s0, c.i0, c.grid.dim());

  Section sim = root.sub("simulation");
  c.simulation.n_per_patch = sim.integer("n_per_patch", 100);
  c.simulation.output_dt = sim.number("output_dt", 0.1);
  c.simulation.replicates = static_cast<int>(sim.integer("replicates", 1));
  c.simulation.event_log = sim.boolean("event_log", false);
  c.simulation.full_invariant_check = sim.boolean("full_invariant_check", true);
  sim.finish();
  if (c.simulation.n_per_patch < 1) sim.fail("n_per_patch", "must be >= 1");
  if (c.simulation.replicates < 1) sim.fail("replicates", "must be >= 1");
  check_divides(c.params.horizon, c.simulation.output_dt, "simulation.output_dt");

  Section sol = root.sub("solver");
  c.solver.step = sol.number("step", 0.01);
  c.solver.modes = static_cast<int>(sol.integer("modes", 64));
  c.solver.fixed_point_tol = sol.number("fixed_point_tol", 1e-14);
  c.solver.negativity_tol = sol.number("negativity_tol", 1e-8);
  c.solver.picard_max_iters = static_cast<int>(sol.integer("picard_max_iters", 100));
  c.solver.picard_tol = sol.number("picard_tol", 1e-12);
  c.solver.output_stride = static_cast<int>(sol.integer("output_stride", 1));
  sol.finish();
  check_divides(c.params.horizon, c.solver.step, "solver.step");
  if (c.solver.modes < 3) sol.fail("modes", "must be at least 3");
  if (c.solver.picard_max_iters < 1) sol.fail("picard_max_iters", "must be >= 1");
  if (c.solver.output_stride < 1) sol.fail("output_stride", "must be >= 1");
  if (!(c.solver.fixed_point_tol > 0.0)) sol.fail("fixed_point_tol", "must be > 0");

  Section out = root.sub("output");
  c.format = out.string("format", "csv");
  out.finish();
  if (c.format != "csv" && c.format != "ndjson") out.fail("format", "must be csv or ndjson");

  c.seed = root.unsigned_integer("seed", 0);

  if (root.has("experiment")) {
    Section e = root.sub("experiment");
    ExperimentSettings x;
    x.kind = experiment_kind_from_string(e.string("kind", "lln_fixed_eps"));
    x.probe_count = static_cast<int>(e.integer("probe_count", 9));
    x.output_dt = e.number("output_dt", 0.025);
    if (!e.has("schedule") || !e.raw("schedule").is_array()) e.fail("schedule", "must be an array of entries");
    json sched_out = json::array();
    const json& sched = e.raw("schedule");
    for (std::size_t n = 0; n < sched.size(); ++n) {
      json en_out;
      Section en(sched[n], en_out, e.qualified("schedule[" + std::to_string(n) + "]"));
      ScheduleEntry entry;
      entry.n = en.integer("N", 0);
      entry.inv_eps = static_cast<int>(en.integer("inv_eps", 8));
      entry.replicates = static_cast<int>(en.integer("replicates", 0));
      en.finish();
      x.schedule.push_back(entry);
      sched_out.push_back(en_out);
    }
    e.out("schedule") = sched_out;
    e.finish();
    c.experiment = x;
  }
  root.finish();

  if (c.experiment) c.experiment_plan(1).validate();

  c.resolved = resolved;
  json hashed = resolved;
  hashed.erase("seed");
  c.hash = fnv1a_hex(hashed.dump());
  return c;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config is not valid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return config_from_json(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

SimulationSetup RunConfig::simulation_setup() const {
  SimulationSetup s;
  s.grid = grid;
  s.params = params;
  s.law = law;
  s.initial_law = initial_law;
  s.kernel = kernel;
  s.n_per_patch = simulation.n_per_patch;
  s.output_dt = simulation.output_dt;
  s.full_invariant_check = simulation.full_invariant_check;
  return s;
}

SolverControls RunConfig::solver_controls() const {
  return SolverControls{solver.step, solver.fixed_point_tol, solver.negativity_tol};
}

PdeControls RunConfig::pde_controls() const {
  PdeControls c;
  c.modes = solver.modes;
  c.step = solver.step;
  c.fixed_point_tol = solver.fixed_point_tol;
  c.negativity_tol = solver.negativity_tol;
  return c;
}

ExperimentPlan RunConfig::experiment_plan(int threads) const {
  if (!experiment) throw ValidationError("config has no experiment section");
  ExperimentPlan p;
  p.kind = experiment->kind;
  p.entries = experiment->schedule;
  p.probe_count = experiment->probe_count;
  p.master_seed = seed;
  p.threads = threads;
  p.model.dim = grid.dim();
  p.model.params = params;
  p.model.law = law;
  p.model.initial_law = initial_law;
  p.model.kernel = kernel;
  p.model.s0 = s0;
  p.model.i0 = i0;
  p.model.step = solver.step;
  p.model.output_dt = experiment->output_dt;
  p.model.fixed_point_tol = solver.fixed_point_tol;
  p.model.negativity_tol = solver.negativity_tol;
  p.model.full_invariant_check = simulation.full_invariant_check;
  return p;
}

}  // namespace epigrid
