#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "epigrid/grid/fft.hpp"
#include "epigrid/grid/torus_grid.hpp"

namespace epigrid {

/// β(x, dy) = scale·δ_x(dy): contacts only within the patch.
struct LocalKernel {
  double scale;
};

/// Periodized Gaussian density of width `sigma` and total mass `scale`.
struct GaussianKernel {
  double scale;
  double sigma;
};

/// Uniform density of total mass `scale` on the axis-aligned cube of
/// half-width `radius` (< 1/2) around the source point.
struct TopHatKernel {
  double scale;
  double radius;
};

/// Explicit patch-level matrix β_ε^{x,y}, row-major, for one grid only.
struct MatrixKernel {
  int dim;
  int inv_mesh;
  std::vector<double> entries;
};

using KernelKind = std::variant<LocalKernel, GaussianKernel, TopHatKernel, MatrixKernel>;

/// Time modulation m(t) = 1 - amplitude·sin²(πt/period) ∈ [1 - amplitude, 1].
struct Modulation {
  double amplitude = 0.0;
  double period = 1.0;

  double operator()(double t) const;
  bool active() const { return amplitude != 0.0; }
};

/// Sparse rows of β_ε^{x,·} (CSR).
struct KernelRows {
  std::size_t size = 0;
  std::vector<std::size_t> row_start;  // size + 1 entries
  std::vector<NodeIndex> cols;
  std::vector<double> vals;

  std::span<const NodeIndex> row_cols(NodeIndex x) const {
    return {cols.data() + row_start[x], row_start[x + 1] - row_start[x]};
  }
  std::span<const double> row_vals(NodeIndex x) const {
    return {vals.data() + row_start[x], row_start[x + 1] - row_start[x]};
  }
  double row_sum(NodeIndex x) const;
  double entry(NodeIndex x, NodeIndex y) const;
  /// out[x] = scale·Σ_y β^{x,y} f[y]
  void apply(std::span<const double> f, std::span<double> out, double scale = 1.0) const;
  KernelRows transposed() const;
};

class ContactKernel {
 public:
  ContactKernel(KernelKind kind, double beta_star, Modulation modulation = {});
  /// β* equal to the kernel mass (or largest matrix row sum).
  static ContactKernel with_default_bound(KernelKind kind, Modulation modulation = {});

  const KernelKind& kind() const { return kind_; }
  std::string kind_name() const;
  double beta_star() const { return beta_star_; }
  const Modulation& modulation() const { return modulation_; }
  bool translation_invariant() const { return !std::holds_alternative<MatrixKernel>(kind_); }
  bool is_zero() const;

  /// Rows β_ε^{x,y} without the time modulation.
  KernelRows discretize_base(const TorusGrid& grid) const;
  /// Real Fourier multiplier of y ↦ ∫β(x,dy)f(y) for translation-invariant kinds,
  /// indexed by `layout`. Throws ValidationError for matrix kernels.
  std::vector<double> spectral_multiplier(const SpectralLayout& layout) const;

 private:
  KernelKind kind_;
  double beta_star_;
  Modulation modulation_;
};

/// β_ε^{x,·}(t) for every source node, modulation included.
KernelRows discretize_kernel(const ContactKernel& kernel, const TorusGrid& grid, double t);

}  // namespace epigrid
