#pragma once

#include <span>
#include <vector>

#include "epigrid/grid/fft.hpp"
#include "epigrid/grid/torus_grid.hpp"
#include "epigrid/rng.hpp"

namespace epigrid {

/// ν·Δ_ε on a torus grid: the 2d-neighbor stencil with prefactor ν/ε².
///
/// This is exactly the generator of a continuous-time walk that jumps to each
/// neighbor at rate ν/ε², so the deterministic semigroup and the simulated
/// migrations share one operator.
class LaplacianOperator {
 public:
  LaplacianOperator(TorusGrid grid, double diffusivity);

  const TorusGrid& grid() const { return grid_; }
  double diffusivity() const { return nu_; }
  /// Rate of jumping to one particular neighbor.
  double jump_rate_per_neighbor() const { return nu_ * grid_.inv_mesh() * grid_.inv_mesh(); }
  /// Eigenvalues μ_k ≤ 0 indexed by the half-spectrum layout of the grid.
  std::span<const double> spectrum() const { return spectrum_; }
  const SpectralLayout& layout() const { return layout_; }

  Field apply(std::span<const double> f) const;

 private:
  TorusGrid grid_;
  double nu_;
  SpectralLayout layout_;
  std::vector<double> spectrum_;
};

/// e^{t ν Δ_ε}: the walk transition matrix over an elapsed time, applied
/// matrix-free through spectral multipliers. Immutable; `apply` uses a
/// per-thread FFT workspace.
class TransitionKernel {
 public:
  TransitionKernel(const LaplacianOperator& op, double elapsed);

  double elapsed() const { return elapsed_; }
  const TorusGrid& grid() const { return grid_; }

  Field apply(std::span<const double> f) const;
  /// p(x, ·): law at the end of the interval of a walk started at x.
  Field row(NodeIndex x) const;

 private:
  TorusGrid grid_;
  double elapsed_;
  std::vector<int> dims_;
  std::vector<double> multipliers_;
};

Field semigroup_apply(const TransitionKernel& kernel, std::span<const double> f);
Field transition_row(const TransitionKernel& kernel, NodeIndex x);

/// A sampled piecewise-constant walk: node `nodes[i]` occupied on [times[i], times[i+1]).
struct WalkPath {
  std::vector<double> times;
  std::vector<NodeIndex> nodes;
  double horizon = 0.0;

  NodeIndex position_at(double t) const;
  std::size_t jump_count() const { return nodes.size() - 1; }
};

/// Walk generated by `op`: exponential holding times with total rate 2d·ν/ε², uniformly
/// chosen neighbor at each jump. Self-loop jumps (inv_mesh == 1) are recorded too.
WalkPath sample_walk_path(const LaplacianOperator& op, NodeIndex start, double horizon, Rng& rng);

}  // namespace epigrid
