#pragma once

#include <functional>
#include <span>
#include <vector>

#include "epigrid/grid/fft.hpp"
#include "epigrid/grid/torus_grid.hpp"

namespace epigrid {

/// A real field on T^d held as normalized Fourier coefficients c_k with
/// f(x) = Σ_k c_k e^{2πi k·x}, truncated to the modes resolvable on a
/// collocation grid of `dims` points (half spectrum stored).
struct SpectralField {
  SpectralLayout layout;
  std::vector<Complex> coeffs;

  explicit SpectralField(std::vector<int> dims)
      : layout(std::move(dims)), coeffs(layout.size(), Complex(0.0, 0.0)) {}

  static SpectralField from_samples(const std::vector<int>& dims, std::span<const double> samples);
  /// Values at collocation points x_m = m / dims (row-major).
  Field to_samples() const;
  /// Spatial mean, i.e. the zero mode.
  double mean() const { return coeffs[0].real(); }
};

using ContinuumFunction = std::function<double(std::span<const double>)>;

/// Samples `f` at the collocation points of a grid with `dims` points per axis.
Field sample_collocation(const ContinuumFunction& f, const std::vector<int>& dims);

/// Heat semigroup of ν·Δ on L²(T^d), acting mode by mode.
class ContinuumSemigroup {
 public:
  ContinuumSemigroup(int dim, double diffusivity);

  int dim() const { return dim_; }
  double diffusivity() const { return nu_; }
  /// Exponent -ν·4π²|k|² for every entry of `layout`.
  std::vector<double> spectrum(const SpectralLayout& layout) const;
  SpectralField apply(const SpectralField& f, double t) const;

 private:
  int dim_;
  double nu_;
};

SpectralField continuum_semigroup_apply(const ContinuumSemigroup& sg, const SpectralField& coeffs,
                                        double t);

/// Cell averages ε^{-d}∫_{V_ε(x)} f over the cube of side ε centered on each
/// node, by 5-point Gauss–Legendre quadrature per axis per cell.
Field project_cells(const TorusGrid& grid, const ContinuumFunction& f);

/// Exact cell averages of a truncated Fourier series: mode k picks up the factor
/// Π_i sin(πk_iε)/(πk_iε). Modes are folded onto the grid and summed with one
/// small complex DFT.
Field project_spectral(const TorusGrid& grid, const SpectralField& f);

}  // namespace epigrid
