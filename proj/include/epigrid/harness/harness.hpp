#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "epigrid/harness/stats.hpp"
#include "epigrid/model/contact_kernel.hpp"
#include "epigrid/model/infectivity.hpp"
#include "epigrid/model/initial_condition.hpp"
#include "epigrid/model/params.hpp"
#include "json.hpp"

namespace epigrid {

/// Everything the three layers need to describe one model, independent of ε and N.
struct ModelSpec {
  int dim = 1;
  ModelParams params;
  InfectivityLaw law = InfectivityLaw::with_default_bound(ExponentialDeath{1.0, 1.0});
  InfectivityLaw initial_law = InfectivityLaw::with_default_bound(ExponentialDeath{1.0, 1.0});
  ContactKernel kernel = ContactKernel::with_default_bound(LocalKernel{1.0});
  FourierDensity s0{0.9, {}};
  FourierDensity i0{0.1, {}};
  double step = 0.01;       // patch solver step; the continuum reference uses step/4
  int modes = 0;            // continuum collocation points per axis; 0 picks max(32, 4/ε_min)
  double output_dt = 0.05;  // stochastic sampling interval
  double fixed_point_tol = 1e-14;
  double negativity_tol = 1e-8;
  bool full_invariant_check = false;
};

enum class ExperimentKind { lln_fixed_eps, eps_limit, joint_limit, f0_lemma };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct ScheduleEntry {
  std::int64_t n = 0;  // individuals per patch; unused by the deterministic limit
  int inv_eps = 4;
  int replicates = 0;
};

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::lln_fixed_eps;
  ModelSpec model;
  std::vector<ScheduleEntry> entries;
  std::uint64_t master_seed = 0;
  int probe_count = 9;  // fixed times kT/(probe_count-1) for the force fields
  int threads = 1;

  /// Throws ValidationError when the schedule does not fit the experiment kind.
  void validate() const;
  std::vector<double> probe_times() const;
};

struct ErrorStat {
  std::string field;  // "SI" is max(S, I) or S + I, see the norm name
  std::string norm;
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t replicates = 0;  // 0 for deterministic entries
};

struct EntryReport {
  std::size_t index = 0;
  std::int64_t n = 0;
  int inv_eps = 0;
  double n_eps_d = 0.0;
  int replicates = 0;
  std::vector<ErrorStat> stats;

  const ErrorStat& stat(const std::string& field, const std::string& norm) const;
};

struct RateFit {
  std::string field;
  std::string norm;
  std::string axis;  // "N", "eps", "N_eps_d" or "composite"
  PowerLawFit fit;
  double rate = 0.0;  // decay rate: -exponent for N-type axes, exponent for eps and composite
  double expected_low = 0.0;
  double expected_high = 0.0;
};

struct ReportCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ErrorReport {
  ExperimentKind kind = ExperimentKind::lln_fixed_eps;
  std::uint64_t master_seed = 0;
  std::vector<EntryReport> entries;
  std::vector<RateFit> fits;
  std::vector<ReportCheck> checks;
  std::vector<std::string> flags;

  bool passed() const;
  const ReportCheck* check(const std::string& name) const;
  nlohmann::ordered_json to_json() const;
  /// Tidy rows: entry, N, eps, N_eps_d, field, norm, mean, stderr.
  void write_csv(std::ostream& out) const;
};

ErrorReport run_lln_fixed_eps(const ExperimentPlan& plan);
ErrorReport run_deterministic_eps_limit(const ExperimentPlan& plan);
ErrorReport run_joint_limit(const ExperimentPlan& plan);
ErrorReport run_f0_lemma_check(const ExperimentPlan& plan);
ErrorReport run_experiment(const ExperimentPlan& plan);

/// Runs fn(0..count-1) on up to `threads` workers. Every index runs exactly once;
/// the exception of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace epigrid
