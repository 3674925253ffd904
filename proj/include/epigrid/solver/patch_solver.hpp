#pragma once

#include <vector>

#include "epigrid/field_series.hpp"
#include "epigrid/grid/torus_grid.hpp"
#include "epigrid/model/contact_kernel.hpp"
#include "epigrid/model/infectivity.hpp"
#include "epigrid/model/initial_condition.hpp"
#include "epigrid/model/params.hpp"
#include "epigrid/solver/mild.hpp"

namespace epigrid {

struct SolverControls {
  double step = 0.01;
  double fixed_point_tol = 1e-14;
  double negativity_tol = 1e-8;
};

struct PatchSolution {
  TorusGrid grid;
  ModelParams params;
  InfectivityLaw law;
  InfectivityLaw initial_law;
  double step;
  MildTrajectory trajectory;  // s, i, f (= 𝔉̄), gamma (= Γ̄), flux (= S̄Γ̄)

  const std::vector<double>& times() const { return trajectory.times; }
  Field b(std::size_t n) const;  // B̄ = S̄ + Ī at step n
  /// Step index of grid time t; DomainError when t is not on the grid.
  std::size_t time_index(double t) const;
  /// Sub-sampled series with fields S, I, F.
  FieldSeries series(std::size_t stride = 1) const;
};

/// Patch-level limit system at fixed ε, from the cell averages in `ic`.
PatchSolution solve_patch_system(const InitialCondition& ic, const ModelParams& params,
                                 const InfectivityLaw& law, const InfectivityLaw& initial_law,
                                 const ContactKernel& kernel, const SolverControls& controls);

/// 𝔉̄(t,·) rebuilt from the stored flux history by applying the walk kernel to
/// each history slice in physical space.
Field evaluate_force_representation(const PatchSolution& sol, double t);

struct BoundsReport {
  std::vector<double> sup_s;  // ‖S̄(t_n)‖∞
  std::vector<double> sup_i;  // ‖Ī(t_n)‖∞
  std::vector<double> gronwall_envelope;
  double sup_s_overall = 0.0;
  double sup_i_overall = 0.0;
  double inf_b = 0.0;
  double growth_rate = 0.0;  // K in (‖Ī(0)‖∞ + 1)e^{Kt}
  double max_s_increase = 0.0;  // largest step-to-step increase of ‖S̄‖∞
  bool s_nonincreasing = false;
  bool i_within_envelope = false;
  bool b_positive = false;

  bool ok() const { return s_nonincreasing && i_within_envelope && b_positive; }
};

/// Sup/inf monitors over a trajectory. `lambda_star`, `beta_star` bound the
/// infectivity and contact kernel; `tol` is the allowed increase of ‖S̄‖∞.
BoundsReport bounds_report(const MildTrajectory& tr, double lambda_star, double beta_star,
                           double gamma, double tol = 1e-10);
BoundsReport solution_bounds_report(const PatchSolution& sol, const ContactKernel& kernel,
                                    double tol = 1e-10);

}  // namespace epigrid
