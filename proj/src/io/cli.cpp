#include "epigrid/io/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

#include "CLI11.hpp"
#include "epigrid/errors.hpp"
#include "epigrid/harness/harness.hpp"
#include "epigrid/io/config.hpp"
#include "epigrid/io/field_io.hpp"
#include "epigrid/io/format.hpp"
#include "epigrid/rng.hpp"
#include "epigrid/sim/simulator.hpp"
#include "epigrid/solver/patch_solver.hpp"
#include "epigrid/solver/pde_solver.hpp"

namespace epigrid {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct GlobalOptions {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir = "out";
  std::string format;
  int threads = 0;
};

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("EPIGRID_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ValidationError("EPIGRID_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    return static_cast<int>(v);
  }
  return 1;
}

struct Context {
  GlobalOptions opts;
  RunConfig cfg;
  std::string format;
  fs::path out;
  int threads = 1;
  std::ostream* log = nullptr;

  fs::path file(const std::string& stem) const { return out / (stem + "." + (format == "csv" ? "csv" : "ndjson")); }

  ordered_json meta() const {
    return ordered_json{{"config_hash", cfg.hash}, {"seed", cfg.seed}};
  }

  void write_json(const std::string& name, const ordered_json& j) const {
    const fs::path p = out / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write to '" + p.string() + "' failed");
    *log << "wrote " << p.string() << '\n';
  }

  void write_series(FieldSeries s, const std::string& stem) const {
    s.config_hash = cfg.hash;
    s.seed = cfg.seed;
    const fs::path p = file(stem);
    write_fields(s, p.string(), format);
    *log << "wrote " << p.string() << '\n';
  }
};

Context make_context(const GlobalOptions& o, std::ostream& log, bool needs_out = true) {
  if (o.config.empty()) throw ValidationError("--config PATH is required");
  Context c{o, load_config(o.config), "", o.out_dir, resolve_threads(o.threads), &log};
  if (o.seed_given) c.cfg.seed = o.seed;
  c.format = o.format.empty() ? c.cfg.format : o.format;
  if (needs_out) {
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw IoError("cannot create output directory '" + c.out.string() + "': " + ec.message());
  }
  return c;
}

ordered_json counts_json(const EventCounts& c) {
  return {{"s_migrations", c.s_migrations}, {"i_migrations", c.i_migrations}, {"infections", c.infections},
          {"rejections", c.rejections},     {"breakpoints", c.breakpoints},   {"invariant_checks", c.invariant_checks}};
}

void run_simulate(Context& c, int replicates_flag, bool event_log_flag) {
  const int reps = replicates_flag > 0 ? replicates_flag : c.cfg.simulation.replicates;
  const bool events = event_log_flag || c.cfg.simulation.event_log;
  std::vector<ReplicateResult> results(reps);
  parallel_for(static_cast<std::size_t>(reps), c.threads, [&](std::size_t r) {
    SimulationSetup setup = c.cfg.simulation_setup();
    std::ofstream log;
    if (events) {
      const fs::path p = c.out / ("events_r" + std::to_string(r) + ".ndjson");
      log.open(p, std::ios::binary);
      if (!log) throw IoError("cannot open '" + p.string() + "' for writing");
      setup.event_log = &log;
    }
    try {
      results[r] = run_replicate(setup, c.cfg.s0, c.cfg.i0, derive_seed(c.cfg.seed, 0, r));
    } catch (const InvariantViolation& e) {
      throw InvariantViolation("replicate " + std::to_string(r) + ": " + e.what());
    }
  });
  ordered_json summary = c.meta();
  summary["replicates"] = ordered_json::array();
  for (int r = 0; r < reps; ++r) {
    c.write_series(results[r].series, "simulate_r" + std::to_string(r));
    summary["replicates"].push_back({{"replicate", r},
                                     {"seed", derive_seed(c.cfg.seed, 0, static_cast<std::uint64_t>(r))},
                                     {"events", counts_json(results[r].counts)}});
  }
  c.write_json("simulate_summary.json", summary);
}

ordered_json bounds_json(const BoundsReport& b) {
  return {{"ok", b.ok()},
          {"s_nonincreasing", b.s_nonincreasing},
          {"i_within_envelope", b.i_within_envelope},
          {"b_positive", b.b_positive},
          {"sup_s", b.sup_s_overall},
          {"sup_i", b.sup_i_overall},
          {"inf_b", b.inf_b},
          {"max_s_increase", b.max_s_increase},
          {"growth_rate", b.growth_rate}};
}

int run_solve_patch(Context& c) {
  const PatchSolution sol = solve_patch_system(patch_initial_condition(c.cfg.s0, c.cfg.i0, c.cfg.grid), c.cfg.params,
                                               c.cfg.law, c.cfg.initial_law, c.cfg.kernel, c.cfg.solver_controls());
  c.write_series(sol.series(static_cast<std::size_t>(c.cfg.solver.output_stride)), "patch");
  const BoundsReport b = solution_bounds_report(sol, c.cfg.kernel);
  ordered_json j = c.meta();
  j["bounds"] = bounds_json(b);
  c.write_json("patch_bounds.json", j);
  if (!b.ok()) {
    *c.log << "bounds monitors failed; see patch_bounds.json\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int run_solve_pde(Context& c, const std::string& backend) {
  const auto controls = c.cfg.pde_controls();
  const ContinuumSolution sol =
      backend == "picard"
          ? solve_pde_picard(c.cfg.s0, c.cfg.i0, c.cfg.grid.dim(), c.cfg.params, c.cfg.law, c.cfg.initial_law,
                             c.cfg.kernel, controls, c.cfg.solver.picard_max_iters, c.cfg.solver.picard_tol)
          : solve_pde_marching(c.cfg.s0, c.cfg.i0, c.cfg.grid.dim(), c.cfg.params, c.cfg.law, c.cfg.initial_law,
                               c.cfg.kernel, controls);
  const auto stride = static_cast<std::size_t>(c.cfg.solver.output_stride);
  c.write_series(sol.series(stride), "pde");
  std::vector<double> times;
  for (std::size_t n = 0; n < sol.times().size(); n += stride) times.push_back(sol.times()[n]);
  if ((sol.times().size() - 1) % stride != 0) times.push_back(sol.times().back());
  c.write_series(project_pde(c.cfg.grid, sol, times), "pde_cells");
  ordered_json j = c.meta();
  j["backend"] = backend;
  j["modes"] = c.cfg.solver.modes;
  j["upper_clamp"] = sol.upper_clamp;
  j["lower_clamp"] = sol.lower_clamp;
  j["clamp_activations"] = {{"evaluations", sol.clamps.evaluations}, {"s_negative", sol.clamps.s_negative},
                            {"s_above", sol.clamps.s_above},         {"b_below", sol.clamps.b_below},
                            {"f_above", sol.clamps.f_above}};
  if (backend == "picard") {
    j["picard_iterations"] = sol.picard_iterations;
    j["picard_residuals"] = sol.picard_residuals;
  }
  c.write_json("pde_report.json", j);
  return kExitOk;
}

int run_converge(Context& c) {
  const ErrorReport rep = run_experiment(c.cfg.experiment_plan(c.threads));
  ordered_json j = c.meta();
  j["report"] = rep.to_json();
  c.write_json("report.json", j);
  const fs::path csv = c.out / "report.csv";
  std::ofstream f(csv, std::ios::binary);
  if (!f) throw IoError("cannot open '" + csv.string() + "' for writing");
  f << "# config_hash=" << c.cfg.hash << "\n# seed=" << c.cfg.seed << '\n';
  rep.write_csv(f);
  *c.log << "wrote " << csv.string() << '\n';
  for (const auto& chk : rep.checks) *c.log << (chk.passed ? "PASS " : "FAIL ") << chk.name << '\n';
  for (const auto& fl : rep.flags) *c.log << "FLAG " << fl << '\n';
  return kExitOk;
}

void run_lambda_bar(Context& c, double dt) {
  const double step = dt > 0.0 ? dt : c.cfg.solver.step;
  const auto times = output_grid(c.cfg.params.horizon, step);
  const fs::path p = c.out / "lambda_bar.csv";
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
  f << "# config_hash=" << c.cfg.hash << "\n# seed=" << c.cfg.seed << "\nt,lambda_bar,lambda_bar_se,lambda_bar0,lambda_bar0_se\n";
  for (double t : times) {
    const auto a = c.cfg.law.mean_with_error(t);
    const auto b = c.cfg.initial_law.mean_with_error(t);
    f << format_double(t) << ',' << format_double(a.mean) << ',' << format_double(a.standard_error) << ','
      << format_double(b.mean) << ',' << format_double(b.standard_error) << '\n';
  }
  *c.log << "wrote " << p.string() << '\n';
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial SI epidemic with infection-age infectivity on the torus: stochastic, patch and continuum layers"};
  app.name("epigrid");
  GlobalOptions o;
  app.add_option("--config", o.config, "JSON run configuration");
  auto* seed_opt = app.add_option("--seed", o.seed, "Master seed (overrides the config)");
  app.add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", o.format, "Field output format")->check(CLI::IsMember({"csv", "ndjson"}));
  app.add_option("--threads", o.threads, "Worker threads (default: EPIGRID_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.require_subcommand(1);

  int replicates = 0;
  bool event_log = false;
  auto* simulate = app.add_subcommand("simulate", "Stochastic replicates");
  simulate->add_option("--replicates", replicates, "Replicate count (overrides the config)")->check(CLI::PositiveNumber);
  simulate->add_flag("--event-log", event_log, "Write one NDJSON event log per replicate");
  auto* patch = app.add_subcommand("solve-patch", "Patch-level limit system at fixed eps");
  std::string backend = "marching";
  auto* pde = app.add_subcommand("solve-pde", "Continuum system on a collocation grid");
  pde->add_option("--backend", backend, "Time integration backend")
      ->check(CLI::IsMember({"marching", "picard"}))
      ->capture_default_str();
  auto* converge = app.add_subcommand("converge", "Run the experiment plan of the config");
  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults filled in");
  double dt = 0.0;
  auto* lambda = app.add_subcommand("lambda-bar", "Tabulate the mean infectivity functions");
  lambda->add_option("--dt", dt, "Tabulation step (default: solver step)")->check(CLI::PositiveNumber);
  for (auto* sub : {simulate, patch, pde, converge, validate, lambda}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  o.seed_given = seed_opt->count() > 0;

  try {
    if (validate->parsed()) {
      Context c = make_context(o, out, false);
      out << "config ok, hash " << c.cfg.hash << '\n' << c.cfg.resolved.dump(2) << '\n';
      return kExitOk;
    }
    Context c = make_context(o, out);
    if (simulate->parsed()) {
      run_simulate(c, replicates, event_log);
      return kExitOk;
    }
    if (patch->parsed()) return run_solve_patch(c);
    if (pde->parsed()) return run_solve_pde(c, backend);
    if (converge->parsed()) return run_converge(c);
    if (lambda->parsed()) {
      run_lambda_bar(c, dt);
      return kExitOk;
    }
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace epigrid
