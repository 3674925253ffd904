#include "epigrid/model/initial_condition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "epigrid/errors.hpp"

namespace epigrid {

double FourierDensity::operator()(std::span<const double> x) const {
  double v = mean;
  for (const auto& term : terms) {
    double phase = 0.0;
    for (std::size_t a = 0; a < term.k.size() && a < x.size(); ++a) phase += term.k[a] * x[a];
    phase *= 2.0 * std::numbers::pi;
    v += term.cos_coef * std::cos(phase) + term.sin_coef * std::sin(phase);
  }
  return v;
}

int FourierDensity::max_wavenumber() const {
  int best = 0;
  for (const auto& term : terms) {
    for (int k : term.k) best = std::max(best, std::abs(k));
  }
  return best;
}

std::pair<double, double> FourierDensity::range(int dim) const {
  const int per_axis = std::max(64, 16 * max_wavenumber());
  const int samples = dim == 1 ? per_axis : std::min(per_axis, 256);
  const std::vector<int> dims(dim, samples);
  const Field values = sample_collocation(as_function(), dims);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

ContinuumFunction FourierDensity::as_function() const {
  return [copy = *this](std::span<const double> x) { return copy(x); };
}

std::pair<FourierDensity, FourierDensity> density_preset(const std::string& name, int dim) {
  std::vector<int> k1(dim, 0);
  k1[0] = 1;
  if (name == "uniform") return {FourierDensity{0.9, {}}, FourierDensity{0.1, {}}};
  if (name == "no_infection") return {FourierDensity{1.0, {}}, FourierDensity{0.0, {}}};
  if (name == "cosine") {
    return {FourierDensity{0.8, {{k1, 0.15, 0.0}}}, FourierDensity{0.2, {{k1, -0.15, 0.0}}}};
  }
  throw ValidationError("unknown density preset '" + name + "'");
}

void validate_densities(const FourierDensity& s, const FourierDensity& i, int dim) {
  for (const auto* density : {&s, &i}) {
    for (const auto& term : density->terms) {
      if (static_cast<int>(term.k.size()) != dim) {
        throw ValidationError("density wave vector has " + std::to_string(term.k.size()) +
                              " entries, grid dimension is " + std::to_string(dim));
      }
    }
  }
  const auto [s_lo, s_hi] = s.range(dim);
  if (!(s_lo > 0.0)) {
    throw ValidationError("initial susceptible density must be bounded below by a positive "
                          "constant; minimum is " + std::to_string(s_lo));
  }
  const auto [i_lo, i_hi] = i.range(dim);
  if (i_lo < -1e-12) {
    throw ValidationError("initial infected density must be nonnegative; minimum is " +
                          std::to_string(i_lo));
  }
  if (std::abs(s.mean + i.mean - 1.0) > 1e-12) {
    throw ValidationError("initial densities must integrate to 1; S + I integrates to " +
                          std::to_string(s.mean + i.mean));
  }
}

std::pair<std::int64_t, std::int64_t> round_totals(double a, double b) {
  auto fa = static_cast<std::int64_t>(std::floor(a));
  auto fb = static_cast<std::int64_t>(std::floor(b));
  const double target = std::round(a + b);
  if (std::abs(a + b - target) > 1e-6) return {std::llround(a), std::llround(b)};
  // Remainders sum to 0 or 1 when a + b is an integer.
  for (auto missing = static_cast<std::int64_t>(target) - fa - fb; missing > 0; --missing) {
    if (a - static_cast<double>(fa) >= b - static_cast<double>(fb)) {
      ++fa;
    } else {
      ++fb;
    }
  }
  return {fa, fb};
}

InitialCondition patch_initial_condition(const FourierDensity& s, const FourierDensity& i,
                                         const TorusGrid& grid) {
  validate_densities(s, i, grid.dim());
  InitialCondition ic{grid, 0, project_cells(grid, s.as_function()),
                      project_cells(grid, i.as_function()), {}, {}, 0, 0};
  for (double& v : ic.i_bar) v = std::max(v, 0.0);
  return ic;
}

InitialCondition build_initial_condition(const FourierDensity& s, const FourierDensity& i,
                                         const TorusGrid& grid, std::int64_t n_per_patch,
                                         Rng& rng) {
  if (n_per_patch < 1) throw ValidationError("N must be >= 1");
  InitialCondition ic = patch_initial_condition(s, i, grid);
  ic.n_per_patch = n_per_patch;
  double s_sum = 0.0;
  double i_sum = 0.0;
  for (double v : ic.s_bar) s_sum += v;
  for (double v : ic.i_bar) i_sum += v;
  const double n = static_cast<double>(n_per_patch);
  std::tie(ic.s_total, ic.i_total) = round_totals(n * s_sum, n * i_sum);

  auto place = [&](const Field& weights, double sum, std::int64_t count) {
    std::vector<std::int64_t> counts(grid.node_count(), 0);
    if (count == 0 || sum <= 0.0) return counts;
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    for (std::int64_t j = 0; j < count; ++j) ++counts[pick(rng)];
    return counts;
  };
  ic.s_counts = place(ic.s_bar, s_sum, ic.s_total);
  ic.i_counts = place(ic.i_bar, i_sum, ic.i_total);
  return ic;
}

}  // namespace epigrid
