#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epigrid/grid/torus_grid.hpp"
#include "epigrid/harness/harness.hpp"
#include "epigrid/model/contact_kernel.hpp"
#include "epigrid/model/infectivity.hpp"
#include "epigrid/model/initial_condition.hpp"
#include "epigrid/model/params.hpp"
#include "epigrid/sim/simulator.hpp"
#include "epigrid/solver/patch_solver.hpp"
#include "epigrid/solver/pde_solver.hpp"
#include "json.hpp"

namespace epigrid {

struct SimulationSettings {
  std::int64_t n_per_patch = 100;
  double output_dt = 0.1;
  int replicates = 1;
  bool event_log = false;
  bool full_invariant_check = true;
};

struct SolverSettings {
  double step = 0.01;
  int modes = 64;
  double fixed_point_tol = 1e-14;
  double negativity_tol = 1e-8;
  int picard_max_iters = 100;
  double picard_tol = 1e-12;
  int output_stride = 1;
};

struct ExperimentSettings {
  ExperimentKind kind = ExperimentKind::lln_fixed_eps;
  std::vector<ScheduleEntry> schedule;
  int probe_count = 9;
  double output_dt = 0.025;
};

struct RunConfig {
  TorusGrid grid{1, 8};
  ModelParams params;
  InfectivityLaw law = InfectivityLaw::with_default_bound(ExponentialDeath{1.0, 1.0});
  InfectivityLaw initial_law = law;
  ContactKernel kernel = ContactKernel::with_default_bound(LocalKernel{1.0});
  FourierDensity s0;
  FourierDensity i0;
  SimulationSettings simulation;
  SolverSettings solver;
  std::string format = "csv";
  std::uint64_t seed = 0;
  std::optional<ExperimentSettings> experiment;

  nlohmann::json resolved;  // the input with every default filled in
  std::string hash;         // FNV-1a of the canonical resolved JSON, seed excluded

  SimulationSetup simulation_setup() const;
  SolverControls solver_controls() const;
  PdeControls pde_controls() const;
  ExperimentPlan experiment_plan(int threads) const;
};

/// Parses, defaults and validates a configuration; throws ValidationError
/// (with the byte offset for JSON syntax errors) before any computation.
RunConfig parse_config(const std::string& text);
RunConfig config_from_json(const nlohmann::json& input);
/// parse_config on a file; IoError when it cannot be read.
RunConfig load_config(const std::string& path);

/// 16 hex digits of FNV-1a 64 over the bytes.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace epigrid
