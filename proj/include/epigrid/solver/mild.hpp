#pragma once

#include <functional>
#include <span>
#include <vector>

#include "epigrid/grid/torus_grid.hpp"

namespace epigrid {

/// Flux callback: writes f = S·Γ and Γ at time t for the given fields.
using FluxFunction = std::function<void(double t, std::span<const double> s,
                                        std::span<const double> i, std::span<const double> f,
                                        std::span<double> flux, std::span<double> gamma)>;

/// Mild (Duhamel) form of the SI limit system on a periodic grid:
///
///   S(t) = T_S(t)S0 - ∫ T_S(t-s) f(s) ds
///   I(t) = T_I(t)I0 + ∫ T_I(t-s) f(s) ds
///   F(t) = λ̄0(t) T_I(t)I0 + ∫ λ̄(t-s) T_I(t-s) f(s) ds
///
/// with diagonal semigroups T(t) = e^{tμ_k} in the real-FFT basis of `dims`.
struct MildProblem {
  std::vector<int> dims;
  std::vector<double> mu_s;  // one exponent per half-spectrum entry
  std::vector<double> mu_i;
  Field s0;
  Field i0;
  std::function<double(double)> lambda_bar;
  std::function<double(double)> lambda_bar0;
  FluxFunction flux;
  double horizon = 1.0;
  double step = 0.01;
  double fixed_point_tol = 1e-14;  // relative, implicit endpoint solve
  int max_fixed_point_iters = 200;
  double negativity_tol = 1e-8;
};

/// Fields on the full time grid t_n = n·h, time-major.
struct MildTrajectory {
  std::vector<double> times;
  std::vector<Field> s, i, f, gamma, flux;
  int max_inner_iterations = 0;

  std::size_t steps() const { return times.size() - 1; }
};

struct PicardReport {
  MildTrajectory trajectory;
  std::vector<double> residuals;  // sup-norm change per iteration
  bool converged = false;
  int iterations = 0;
};

/// Number of steps n with n·h = T; throws ValidationError unless h divides T.
std::size_t step_count(double horizon, double step);

/// Time marching of the trapezoid-in-time Duhamel scheme. Each step solves its
/// implicit endpoint by fixed-point iteration; the history integral is a
/// trapezoid sum evaluated mode by mode.
MildTrajectory march_mild(const MildProblem& problem);

/// Picard iteration on the whole trajectory for the same discrete system,
/// starting from zero flux.
PicardReport picard_mild(const MildProblem& problem, int max_iters, double tol);

}  // namespace epigrid
