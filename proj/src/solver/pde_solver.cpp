#include "epigrid/solver/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epigrid/errors.hpp"
#include "epigrid/grid/continuum.hpp"
#include "epigrid/simd/kernels.hpp"

namespace epigrid {

namespace {

double sup_norm(std::span<const double> f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

double lambda_star_of(const InfectivityLaw& law, const InfectivityLaw& initial_law) {
  return std::max(law.lambda_star(), initial_law.lambda_star());
}

// Keeps modes with every |k_i| ≤ n_i/3.
std::vector<double> dealias_mask(const SpectralLayout& layout) {
  std::vector<double> mask(2 * layout.size(), 1.0);
  for (std::size_t idx = 0; idx < layout.size(); ++idx) {
    for (int a = 0; a < layout.dim(); ++a) {
      if (3 * std::abs(layout.wavenumber(idx, a)) > layout.dims()[a]) {
        mask[2 * idx] = mask[2 * idx + 1] = 0.0;
      }
    }
  }
  return mask;
}

void check_resolution(const FourierDensity& d, const Field& samples, const std::vector<int>& dims,
                      double tol, const char* name) {
  if (3 * d.max_wavenumber() > dims[0]) {
    throw NumericalError(std::string("resolution error: initial ") + name + " has wavenumber " +
                         std::to_string(d.max_wavenumber()) + " beyond the dealiased band of " +
                         std::to_string(dims[0]) + " modes");
  }
  const SpectralField c = SpectralField::from_samples(dims, samples);
  double head = 0.0, tail = 0.0;
  for (std::size_t idx = 0; idx < c.layout.size(); ++idx) {
    bool outside = false;
    for (int a = 0; a < c.layout.dim(); ++a) {
      if (3 * std::abs(c.layout.wavenumber(idx, a)) > dims[a]) outside = true;
    }
    (outside ? tail : head) = std::max(outside ? tail : head, std::abs(c.coeffs[idx]));
  }
  if (tail > tol * std::max(head, 1e-300)) {
    throw NumericalError(std::string("resolution error: initial ") + name +
                         " is not resolved by the mode count");
  }
}

}  // namespace

void ClampStats::merge(const ClampStats& o) {
  evaluations += o.evaluations;
  s_negative += o.s_negative;
  s_above += o.s_above;
  b_below += o.b_below;
  f_above += o.f_above;
}

ClampedNonlinearity::ClampedNonlinearity(std::vector<int> dims, const ContactKernel& kernel,
                                         double lambda_star, double gamma, double upper,
                                         double lower)
    : dims_(std::move(dims)),
      modulation_(kernel.modulation()),
      lambda_star_(lambda_star),
      beta_star_(kernel.beta_star()),
      gamma_(gamma),
      upper_(upper),
      lower_(lower) {
  if (!(upper > 0.0) || !(lower > 0.0)) throw ValidationError("clamp constants must be positive");
  const SpectralLayout layout(dims_);
  const std::vector<double> m = kernel.spectral_multiplier(layout);
  multiplier_.resize(2 * m.size());
  for (std::size_t k = 0; k < m.size(); ++k) multiplier_[2 * k] = multiplier_[2 * k + 1] = m[k];
}

double ClampedNonlinearity::output_bound() const {
  return upper_ * lambda_star_ * upper_ * beta_star_ / std::pow(lower_, gamma_);
}

double ClampedNonlinearity::lipschitz() const {
  const double inv = 1.0 / std::pow(lower_, gamma_);
  const double conv_bound = beta_star_ * lambda_star_ * upper_;
  return inv * conv_bound + 2.0 * upper_ * gamma_ * inv / lower_ * conv_bound + upper_ * inv * beta_star_;
}

void ClampedNonlinearity::apply(double t, std::span<const double> s, std::span<const double> i,
                                std::span<const double> f, std::span<double> out,
                                std::span<double> gamma_out, ClampStats* stats) const {
  RealFft& fft = thread_fft(dims_);
  const std::size_t m = fft.layout().real_size();
  if (s.size() != m || i.size() != m || f.size() != m || out.size() != m) {
    throw DimensionError("apply_H field size mismatch");
  }
  const double cap = lambda_star_ * upper_;
  Field fc(m);
  for (std::size_t x = 0; x < m; ++x) fc[x] = std::clamp(f[x], 0.0, cap);
  std::vector<Complex> spec(fft.layout().size());
  fft.forward(fc, spec);
  simd::multiply_inplace({reinterpret_cast<double*>(spec.data()), 2 * spec.size()}, multiplier_);
  Field conv(m);
  fft.inverse(spec, conv);
  const double mod = modulation_(t);
  for (std::size_t x = 0; x < m; ++x) {
    const double a = std::clamp(s[x], 0.0, upper_);
    const double b = std::max(s[x] + i[x], lower_);
    const double g = mod * conv[x] / std::pow(b, gamma_);
    out[x] = a * g;
    if (!gamma_out.empty()) gamma_out[x] = g;
    if (stats != nullptr) {
      const double tol = stats->tolerance;
      ++stats->evaluations;
      if (s[x] < -tol) ++stats->s_negative;
      if (s[x] > upper_ + tol) ++stats->s_above;
      if (s[x] + i[x] < lower_ - tol) ++stats->b_below;
      if (f[x] > cap + tol) ++stats->f_above;
    }
  }
}

Field apply_H(const ClampedNonlinearity& nl, std::span<const double> s, std::span<const double> i,
              std::span<const double> f, double t) {
  Field out(s.size());
  nl.apply(t, s, i, f, out);
  return out;
}

SpectralField ContinuumSolution::spectral(const std::string& field, std::size_t n) const {
  const auto& src = field == "S" ? trajectory.s : field == "I" ? trajectory.i
                  : field == "F" ? trajectory.f
                                 : throw DomainError("unknown continuum field '" + field + "'");
  return SpectralField::from_samples(dims, src[n]);
}

FieldSeries ContinuumSolution::series(std::size_t stride) const {
  FieldSeries out(dims, {"S", "I", "F"}, "pde");
  stride = std::max<std::size_t>(stride, 1);
  for (std::size_t n = 0; n < trajectory.times.size(); n += stride) {
    const std::span<const double> slices[] = {trajectory.s[n], trajectory.i[n], trajectory.f[n]};
    out.append(trajectory.times[n], slices);
  }
  return out;
}

PdeSetup make_pde_problem(const FourierDensity& s0, const FourierDensity& i0, int dim,
                          const ModelParams& params, const InfectivityLaw& law,
                          const InfectivityLaw& initial_law, const ContactKernel& kernel,
                          const PdeControls& controls) {
  params.validate();
  if (controls.modes < 3) throw ValidationError("mode count must be at least 3");
  const std::vector<int> dims(dim, controls.modes);
  const SpectralLayout layout(dims);
  MildProblem p;
  p.dims = dims;
  p.mu_s = ContinuumSemigroup(dim, params.nu_s).spectrum(layout);
  p.mu_i = ContinuumSemigroup(dim, params.nu_i).spectrum(layout);
  p.s0 = sample_collocation(s0.as_function(), dims);
  p.i0 = sample_collocation(i0.as_function(), dims);
  check_resolution(s0, p.s0, dims, controls.resolution_tol, "S");
  check_resolution(i0, p.i0, dims, controls.resolution_tol, "I");

  const double lambda_star = lambda_star_of(law, initial_law);
  const double upper = controls.upper_clamp.value_or(
      2.0 * (sup_norm(p.s0) + sup_norm(p.i0)) *
      std::exp(lambda_star * kernel.beta_star() * params.horizon));
  double lower;
  if (controls.lower_clamp) {
    lower = *controls.lower_clamp;
  } else {
    const double inf_s = *std::min_element(p.s0.begin(), p.s0.end());
    const ContinuumSemigroup heat(dim, params.nu_i);
    const Field flowed = heat.apply(SpectralField::from_samples(dims, p.i0), std::log(2.0)).to_samples();
    const double floor_i = *std::min_element(flowed.begin(), flowed.end());
    lower = 0.5 * (floor_i > 0.0 ? std::min(inf_s, floor_i) : inf_s);
  }
  ClampedNonlinearity nl(dims, kernel, lambda_star, params.gamma, upper, lower);

  p.lambda_bar = [law](double t) { return law.mean(t); };
  p.lambda_bar0 = [initial_law](double t) { return initial_law.mean(t); };
  p.horizon = params.horizon;
  p.step = controls.step;
  p.fixed_point_tol = controls.fixed_point_tol;
  p.negativity_tol = controls.negativity_tol;
  p.flux = [nl, mask = dealias_mask(layout), dims](double t, std::span<const double> s,
                                                   std::span<const double> i,
                                                   std::span<const double> f,
                                                   std::span<double> flux, std::span<double> g) {
    nl.apply(t, s, i, f, flux, g);
    RealFft& fft = thread_fft(dims);
    std::vector<Complex> spec(fft.layout().size());
    fft.forward(flux, spec);
    simd::multiply_inplace({reinterpret_cast<double*>(spec.data()), 2 * spec.size()}, mask);
    fft.inverse(spec, flux);
  };
  return PdeSetup{std::move(p), std::move(nl)};
}

namespace {

ContinuumSolution finish(const PdeSetup& setup, const ModelParams& params, MildTrajectory tr) {
  ContinuumSolution sol{setup.problem.dims, params, setup.problem.step,
                        setup.nonlinearity.upper(), setup.nonlinearity.lower(), std::move(tr),
                        {}, {}, 0, true};
  const std::size_t m = sol.trajectory.s[0].size();
  Field scratch(m);
  for (std::size_t n = 0; n < sol.trajectory.times.size(); ++n) {
    setup.nonlinearity.apply(sol.trajectory.times[n], sol.trajectory.s[n], sol.trajectory.i[n],
                             sol.trajectory.f[n], scratch, {}, &sol.clamps);
  }
  return sol;
}

}  // namespace

ContinuumSolution solve_pde_marching(const FourierDensity& s0, const FourierDensity& i0, int dim,
                                     const ModelParams& params, const InfectivityLaw& law,
                                     const InfectivityLaw& initial_law, const ContactKernel& kernel,
                                     const PdeControls& controls) {
  const PdeSetup setup = make_pde_problem(s0, i0, dim, params, law, initial_law, kernel, controls);
  return finish(setup, params, march_mild(setup.problem));
}

ContinuumSolution solve_pde_picard(const FourierDensity& s0, const FourierDensity& i0, int dim,
                                   const ModelParams& params, const InfectivityLaw& law,
                                   const InfectivityLaw& initial_law, const ContactKernel& kernel,
                                   const PdeControls& controls, int max_iters, double tol) {
  const PdeSetup setup = make_pde_problem(s0, i0, dim, params, law, initial_law, kernel, controls);
  PicardReport rep = picard_mild(setup.problem, max_iters, tol);
  if (!rep.converged) {
    std::string history;
    for (double r : rep.residuals) history += " " + std::to_string(r);
    throw NumericalError("Picard iteration did not converge in " + std::to_string(max_iters) +
                         " iterations; residuals:" + history);
  }
  ContinuumSolution sol = finish(setup, params, std::move(rep.trajectory));
  sol.picard_residuals = std::move(rep.residuals);
  sol.picard_iterations = rep.iterations;
  sol.picard_converged = rep.converged;
  return sol;
}

FieldSeries project_pde(const TorusGrid& grid, const ContinuumSolution& pde,
                        std::span<const double> times) {
  if (static_cast<int>(pde.dims.size()) != grid.dim()) {
    throw DomainError("patch grid and continuum grid have different dimensions");
  }
  FieldSeries out(grid.dims(), {"S", "I", "F"}, "pde");
  for (double t : times) {
    const double r = t / pde.step;
    const auto n = static_cast<std::size_t>(std::llround(std::max(r, 0.0)));
    if (n >= pde.times().size() || std::abs(pde.times()[n] - t) > 1e-9 * std::max(1.0, t)) {
      throw DomainError("time " + std::to_string(t) + " is not on the continuum time grid");
    }
    const Field s = project_spectral(grid, pde.spectral("S", n));
    const Field i = project_spectral(grid, pde.spectral("I", n));
    const Field f = project_spectral(grid, pde.spectral("F", n));
    const std::span<const double> slices[] = {s, i, f};
    out.append(t, slices);
  }
  return out;
}

ComparisonReport compare_series(const FieldSeries& a, const FieldSeries& reference) {
  if (a.dims != reference.dims) throw DomainError("series are on different grids");
  if (a.time_count() != reference.time_count()) throw DomainError("series have different time grids");
  const std::size_t fa[] = {a.field_index("S"), a.field_index("I"), a.field_index("F")};
  const std::size_t fr[] = {reference.field_index("S"), reference.field_index("I"),
                            reference.field_index("F")};
  ComparisonReport rep;
  for (std::size_t n = 0; n < a.time_count(); ++n) {
    if (std::abs(a.times[n] - reference.times[n]) > 1e-9 * std::max(1.0, a.times[n])) {
      throw DomainError("series have different time grids");
    }
    double e[3];
    for (int k = 0; k < 3; ++k) e[k] = simd::max_abs_diff(a.at(fa[k], n), reference.at(fr[k], n));
    rep.times.push_back(a.times[n]);
    rep.error_s.push_back(e[0]);
    rep.error_i.push_back(e[1]);
    rep.error_f.push_back(e[2]);
    rep.error.push_back(std::max({e[0], e[1], e[2]}));
    rep.sup_error_s = std::max(rep.sup_error_s, e[0]);
    rep.sup_error_i = std::max(rep.sup_error_i, e[1]);
    rep.sup_error_f = std::max(rep.sup_error_f, e[2]);
    rep.sup_error = std::max(rep.sup_error, rep.error.back());
  }
  return rep;
}

ComparisonReport compare_patch_to_pde(const PatchSolution& patch, const ContinuumSolution& pde) {
  if (std::abs(patch.params.horizon - pde.params.horizon) > 1e-12 * patch.params.horizon) {
    throw DomainError("patch and continuum solutions have different horizons");
  }
  return compare_series(patch.series(), project_pde(patch.grid, pde, patch.times()));
}

}  // namespace epigrid
