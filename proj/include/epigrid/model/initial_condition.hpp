#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "epigrid/grid/continuum.hpp"
#include "epigrid/grid/torus_grid.hpp"
#include "epigrid/rng.hpp"

namespace epigrid {

struct FourierTerm {
  std::vector<int> k;  // integer wave vector, one entry per axis
  double cos_coef = 0.0;
  double sin_coef = 0.0;
};

/// A trigonometric polynomial density on T^d:
/// mean + Σ cos_coef·cos(2πk·x) + sin_coef·sin(2πk·x).
struct FourierDensity {
  double mean = 0.0;
  std::vector<FourierTerm> terms;

  double operator()(std::span<const double> x) const;
  int max_wavenumber() const;
  /// Minimum and maximum over a fine sampling grid (resolves every term).
  std::pair<double, double> range(int dim) const;
  ContinuumFunction as_function() const;
};

/// Named presets: "uniform" (S=0.9, I=0.1), "cosine" (cosine-modulated
/// susceptibles and a localized infected bump), "no_infection" (S=1, I=0).
std::pair<FourierDensity, FourierDensity> density_preset(const std::string& name, int dim);

/// Validates the initial densities: S bounded below by a positive constant,
/// I nonnegative, total mass 1.
void validate_densities(const FourierDensity& s, const FourierDensity& i, int dim);

struct InitialCondition {
  TorusGrid grid;
  std::int64_t n_per_patch = 0;  // N
  Field s_bar;  // S̄^ε(0,x): cell averages of the susceptible density
  Field i_bar;  // Ī^ε(0,x)
  std::vector<std::int64_t> s_counts;
  std::vector<std::int64_t> i_counts;
  std::int64_t s_total = 0;
  std::int64_t i_total = 0;

  std::int64_t population() const { return s_total + i_total; }
};

/// Cell averages only (for the deterministic solvers).
InitialCondition patch_initial_condition(const FourierDensity& s, const FourierDensity& i,
                                         const TorusGrid& grid);

/// Cell averages, integer totals within 1 of N·ΣS̄^ε and N·ΣĪ^ε (their sum is
/// exactly N·ε^{-d} when that is an integer), and per-patch counts tallied from
/// i.i.d. placements with P(x) ∝ cell average.
InitialCondition build_initial_condition(const FourierDensity& s, const FourierDensity& i,
                                         const TorusGrid& grid, std::int64_t n_per_patch, Rng& rng);

/// Integer totals (S, I) for target real totals a, b: floors, then the unit
/// lost to rounding goes to the larger remainder.
std::pair<std::int64_t, std::int64_t> round_totals(double a, double b);

}  // namespace epigrid
