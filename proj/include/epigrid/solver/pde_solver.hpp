#pragma once

#include <optional>
#include <span>
#include <vector>

#include "epigrid/field_series.hpp"
#include "epigrid/grid/fft.hpp"
#include "epigrid/model/contact_kernel.hpp"
#include "epigrid/model/infectivity.hpp"
#include "epigrid/model/initial_condition.hpp"
#include "epigrid/model/params.hpp"
#include "epigrid/solver/mild.hpp"
#include "epigrid/solver/patch_solver.hpp"

namespace epigrid {

struct ClampStats {
  std::size_t evaluations = 0;     // points evaluated
  std::size_t s_negative = 0;      // S < 0 beyond tolerance
  std::size_t s_above = 0;         // S > C
  std::size_t b_below = 0;         // B < c
  std::size_t f_above = 0;         // F > λ*C
  double tolerance = 1e-10;

  std::size_t total() const { return s_negative + s_above + b_below + f_above; }
  void merge(const ClampStats& o);
};

/// The bounded, globally Lipschitz infection flux
/// ℋ(S,I,F)(x) = ([S∨0]∧C)/([B∨c]^γ) · m(t)∫β(x,dy)[(F∨0)∧λ*C]
/// evaluated pseudo-spectrally on a collocation grid.
class ClampedNonlinearity {
 public:
  ClampedNonlinearity(std::vector<int> dims, const ContactKernel& kernel, double lambda_star,
                      double gamma, double upper, double lower);

  double upper() const { return upper_; }
  double lower() const { return lower_; }
  double gamma() const { return gamma_; }
  /// sup of the output, C·λ*C·β*/c^γ.
  double output_bound() const;
  /// Sup-norm Lipschitz constant with respect to max(‖ΔS‖∞, ‖ΔI‖∞, ‖ΔF‖∞).
  double lipschitz() const;

  /// Writes ℋ at time t into `out` and the matching Γ into `gamma_out` when given.
  void apply(double t, std::span<const double> s, std::span<const double> i,
             std::span<const double> f, std::span<double> out,
             std::span<double> gamma_out = {}, ClampStats* stats = nullptr) const;

 private:
  std::vector<int> dims_;
  std::vector<double> multiplier_;  // duplicated per real/imaginary part
  Modulation modulation_;
  double lambda_star_;
  double beta_star_;
  double gamma_;
  double upper_;
  double lower_;
};

Field apply_H(const ClampedNonlinearity& nl, std::span<const double> s, std::span<const double> i,
              std::span<const double> f, double t);

struct PdeControls {
  int modes = 64;  // collocation points per axis
  double step = 0.01;
  double fixed_point_tol = 1e-14;
  double negativity_tol = 1e-8;
  std::optional<double> upper_clamp;
  std::optional<double> lower_clamp;
  double resolution_tol = 1e-10;
};

struct ContinuumSolution {
  std::vector<int> dims;  // collocation grid
  ModelParams params;
  double step;
  double upper_clamp;
  double lower_clamp;
  MildTrajectory trajectory;
  ClampStats clamps;  // activations on the final fields
  std::vector<double> picard_residuals;
  int picard_iterations = 0;
  bool picard_converged = true;

  const std::vector<double>& times() const { return trajectory.times; }
  /// Fourier coefficients of a stored field ("S", "I", "F") at step n.
  SpectralField spectral(const std::string& field, std::size_t n) const;
  FieldSeries series(std::size_t stride = 1) const;
};

/// Builds the mild problem for the continuum system; exposed for diagnostics.
struct PdeSetup {
  MildProblem problem;
  ClampedNonlinearity nonlinearity;
};
PdeSetup make_pde_problem(const FourierDensity& s0, const FourierDensity& i0, int dim,
                          const ModelParams& params, const InfectivityLaw& law,
                          const InfectivityLaw& initial_law, const ContactKernel& kernel,
                          const PdeControls& controls);

ContinuumSolution solve_pde_marching(const FourierDensity& s0, const FourierDensity& i0, int dim,
                                     const ModelParams& params, const InfectivityLaw& law,
                                     const InfectivityLaw& initial_law, const ContactKernel& kernel,
                                     const PdeControls& controls);

/// Throws NumericalError carrying the residual history when `max_iters` is reached.
ContinuumSolution solve_pde_picard(const FourierDensity& s0, const FourierDensity& i0, int dim,
                                   const ModelParams& params, const InfectivityLaw& law,
                                   const InfectivityLaw& initial_law, const ContactKernel& kernel,
                                   const PdeControls& controls, int max_iters, double tol);

struct ComparisonReport {
  std::vector<double> times;
  std::vector<double> error_s, error_i, error_f;  // sup_x per time
  std::vector<double> error;                      // max over the three
  double sup_error = 0.0;
  double sup_error_s = 0.0, sup_error_i = 0.0, sup_error_f = 0.0;
};

/// Patch fields against cell averages of the continuum fields, at every patch time.
ComparisonReport compare_patch_to_pde(const PatchSolution& patch, const ContinuumSolution& pde);

/// Cell averages of the continuum fields S, I, F on `grid` at the given times,
/// which must lie on the continuum time grid.
FieldSeries project_pde(const TorusGrid& grid, const ContinuumSolution& pde,
                        std::span<const double> times);

/// Sup-norm gaps of fields S, I, F between two series on the same points and times.
ComparisonReport compare_series(const FieldSeries& a, const FieldSeries& reference);

}  // namespace epigrid
