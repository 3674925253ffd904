#include "epigrid/solver/patch_solver.hpp"

#include <algorithm>
#include <cmath>

#include "epigrid/errors.hpp"
#include "epigrid/grid/laplacian.hpp"

namespace epigrid {

namespace {

double sup_norm(const Field& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

Field PatchSolution::b(std::size_t n) const {
  Field out(trajectory.s[n]);
  for (std::size_t x = 0; x < out.size(); ++x) out[x] += trajectory.i[n][x];
  return out;
}

std::size_t PatchSolution::time_index(double t) const {
  const auto& ts = trajectory.times;
  const double r = t / step;
  const auto n = static_cast<std::size_t>(std::llround(std::max(r, 0.0)));
  if (n >= ts.size() || std::abs(ts[n] - t) > 1e-9 * std::max(1.0, std::abs(t))) {
    throw DomainError("time is not on the solution grid; interpolation is not provided");
  }
  return n;
}

FieldSeries PatchSolution::series(std::size_t stride) const {
  FieldSeries out(grid.dims(), {"S", "I", "F"}, "patch");
  stride = std::max<std::size_t>(stride, 1);
  for (std::size_t n = 0; n < trajectory.times.size(); n += stride) {
    const std::span<const double> slices[] = {trajectory.s[n], trajectory.i[n], trajectory.f[n]};
    out.append(trajectory.times[n], slices);
  }
  return out;
}

PatchSolution solve_patch_system(const InitialCondition& ic, const ModelParams& params,
                                 const InfectivityLaw& law, const InfectivityLaw& initial_law,
                                 const ContactKernel& kernel, const SolverControls& controls) {
  params.validate();
  const TorusGrid& grid = ic.grid;
  const LaplacianOperator lap_s(grid, params.nu_s);
  const LaplacianOperator lap_i(grid, params.nu_i);
  const KernelRows rows = kernel.discretize_base(grid);
  const Modulation mod = kernel.modulation();
  const double gamma = params.gamma;

  MildProblem p;
  p.dims = grid.dims();
  p.mu_s.assign(lap_s.spectrum().begin(), lap_s.spectrum().end());
  p.mu_i.assign(lap_i.spectrum().begin(), lap_i.spectrum().end());
  p.s0 = ic.s_bar;
  p.i0 = ic.i_bar;
  p.lambda_bar = [law](double t) { return law.mean(t); };
  p.lambda_bar0 = [initial_law](double t) { return initial_law.mean(t); };
  p.horizon = params.horizon;
  p.step = controls.step;
  p.fixed_point_tol = controls.fixed_point_tol;
  p.negativity_tol = controls.negativity_tol;
  p.flux = [rows, mod, gamma](double t, std::span<const double> s, std::span<const double> i,
                              std::span<const double> f, std::span<double> flux,
                              std::span<double> g) {
    const double m = mod(t);
    for (NodeIndex x = 0; x < s.size(); ++x) {
      const double sp = std::max(s[x], 0.0);
      const double bp = std::max(s[x] + i[x], 0.0);
      double sum = 0.0;
      auto cols = rows.row_cols(x);
      auto vals = rows.row_vals(x);
      for (std::size_t k = 0; k < cols.size(); ++k) sum += vals[k] * std::max(f[cols[k]], 0.0);
      const double gx = bp > 0.0 ? m * sum / std::pow(bp, gamma) : 0.0;
      g[x] = gx;
      flux[x] = sp * gx;
    }
  };
  return PatchSolution{grid, params, law, initial_law, controls.step, march_mild(p)};
}

Field evaluate_force_representation(const PatchSolution& sol, double t) {
  const std::size_t n = sol.time_index(t);
  const LaplacianOperator lap(sol.grid, sol.params.nu_i);
  const double h = sol.step;
  const auto& tr = sol.trajectory;
  const double tn = static_cast<double>(n) * h;
  Field out = semigroup_apply(TransitionKernel(lap, tn), tr.i[0]);
  const double l0 = sol.initial_law.mean(tn);
  for (double& v : out) v *= l0;
  for (std::size_t m = 0; m <= n && n > 0; ++m) {
    const double lag = static_cast<double>(n - m) * h;
    const double w = ((m == 0 || m == n) ? 0.5 : 1.0) * h * sol.law.mean(lag);
    if (w == 0.0) continue;
    const Field slice = semigroup_apply(TransitionKernel(lap, lag), tr.flux[m]);
    for (std::size_t x = 0; x < out.size(); ++x) out[x] += w * slice[x];
  }
  return out;
}

BoundsReport bounds_report(const MildTrajectory& tr, double lambda_star, double beta_star,
                           double gamma, double tol) {
  BoundsReport r;
  const std::size_t steps = tr.times.size();
  r.inf_b = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < steps; ++n) {
    r.sup_s.push_back(sup_norm(tr.s[n]));
    r.sup_i.push_back(sup_norm(tr.i[n]));
    for (std::size_t x = 0; x < tr.s[n].size(); ++x) r.inf_b = std::min(r.inf_b, tr.s[n][x] + tr.i[n][x]);
  }
  r.sup_s_overall = *std::max_element(r.sup_s.begin(), r.sup_s.end());
  r.sup_i_overall = *std::max_element(r.sup_i.begin(), r.sup_i.end());
  r.s_nonincreasing = true;
  for (std::size_t n = 1; n < steps; ++n) {
    r.max_s_increase = std::max(r.max_s_increase, r.sup_s[n] - r.sup_s[n - 1]);
  }
  r.s_nonincreasing = r.max_s_increase <= tol;
  r.b_positive = r.inf_b > 0.0;
  // dĪ/dt ≤ ΔĪ + ‖S̄‖∞·λ*β*‖Ī‖∞/c^γ with c = inf B̄.
  const double c = r.b_positive ? r.inf_b : 0.0;
  r.growth_rate = c > 0.0 ? lambda_star * beta_star * std::max(1.0, r.sup_s[0]) / std::pow(c, gamma)
                          : std::numeric_limits<double>::infinity();
  r.i_within_envelope = true;
  for (std::size_t n = 0; n < steps; ++n) {
    const double env = (r.sup_i[0] + 1.0) * std::exp(r.growth_rate * tr.times[n]);
    r.gronwall_envelope.push_back(env);
    if (!(r.sup_i[n] <= env)) r.i_within_envelope = false;
  }
  return r;
}

BoundsReport solution_bounds_report(const PatchSolution& sol, const ContactKernel& kernel,
                                    double tol) {
  const double lambda_star = std::max(sol.law.lambda_star(), sol.initial_law.lambda_star());
  return bounds_report(sol.trajectory, lambda_star, kernel.beta_star(), sol.params.gamma, tol);
}

}  // namespace epigrid
