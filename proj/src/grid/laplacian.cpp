#include "epigrid/grid/laplacian.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "epigrid/errors.hpp"
#include "epigrid/simd/kernels.hpp"

namespace epigrid {

LaplacianOperator::LaplacianOperator(TorusGrid grid, double diffusivity)
    : grid_(std::move(grid)), nu_(diffusivity), layout_(grid_.dims()) {
  if (!(diffusivity >= 0.0) || !std::isfinite(diffusivity)) {
    throw ValidationError("diffusivity must be finite and >= 0, got " + std::to_string(diffusivity));
  }
  const double inv_eps2 = static_cast<double>(grid_.inv_mesh()) * grid_.inv_mesh();
  const int n = grid_.inv_mesh();
  spectrum_.resize(layout_.size());
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < grid_.dim(); ++a) {
      const double half_angle = std::numbers::pi * layout_.wavenumber(i, a) / n;
      const double sn = std::sin(half_angle);
      s += sn * sn;
    }
    spectrum_[i] = -4.0 * nu_ * inv_eps2 * s;
  }
}

Field LaplacianOperator::apply(std::span<const double> f) const {
  if (f.size() != grid_.node_count()) {
    throw DimensionError("field has " + std::to_string(f.size()) + " values, grid has " +
                         std::to_string(grid_.node_count()) + " nodes");
  }
  const double coef = nu_ * grid_.inv_mesh() * grid_.inv_mesh();
  Field out(f.size(), 0.0);
  for (NodeIndex x = 0; x < f.size(); ++x) {
    double acc = 0.0;
    for (NodeIndex y : grid_.neighbors(x)) acc += f[y] - f[x];
    out[x] = coef * acc;
  }
  return out;
}

TransitionKernel::TransitionKernel(const LaplacianOperator& op, double elapsed)
    : grid_(op.grid()), elapsed_(elapsed), dims_(op.grid().dims()) {
  if (!(elapsed >= 0.0)) {
    throw DomainError("transition kernel needs elapsed time >= 0, got " + std::to_string(elapsed));
  }
  const auto spec = op.spectrum();
  // Duplicated per (re, im) so the multiplier applies to interleaved complex data.
  multipliers_.resize(2 * spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    multipliers_[2 * i] = multipliers_[2 * i + 1] = std::exp(spec[i] * elapsed);
  }
}

Field TransitionKernel::apply(std::span<const double> f) const {
  if (f.size() != grid_.node_count()) {
    throw DimensionError("field has " + std::to_string(f.size()) + " values, grid has " +
                         std::to_string(grid_.node_count()) + " nodes");
  }
  if (elapsed_ == 0.0) return Field(f.begin(), f.end());
  RealFft& fft = thread_fft(dims_);
  std::vector<Complex> spec(fft.layout().size());
  fft.forward(f, spec);
  simd::multiply_inplace(std::span<double>(reinterpret_cast<double*>(spec.data()), 2 * spec.size()),
                         multipliers_);
  Field out(f.size());
  fft.inverse(spec, out);
  return out;
}

Field TransitionKernel::row(NodeIndex x) const {
  if (x >= grid_.node_count()) throw DimensionError("node index out of range");
  Field e(grid_.node_count(), 0.0);
  e[x] = 1.0;
  // The generator is symmetric, so the column through x equals the row.
  return apply(e);
}

Field semigroup_apply(const TransitionKernel& kernel, std::span<const double> f) {
  return kernel.apply(f);
}

Field transition_row(const TransitionKernel& kernel, NodeIndex x) { return kernel.row(x); }

NodeIndex WalkPath::position_at(double t) const {
  if (t < 0.0 || t > horizon) throw DomainError("walk queried outside [0, horizon]");
  std::size_t i = 0;
  while (i + 1 < times.size() && times[i + 1] <= t) ++i;
  return nodes[i];
}

WalkPath sample_walk_path(const LaplacianOperator& op, NodeIndex start, double horizon, Rng& rng) {
  if (!(horizon >= 0.0)) throw DomainError("walk horizon must be >= 0");
  const TorusGrid& grid = op.grid();
  if (start >= grid.node_count()) throw DimensionError("start node out of range");
  WalkPath path;
  path.horizon = horizon;
  path.times.push_back(0.0);
  path.nodes.push_back(start);
  const double total_rate = 2.0 * grid.dim() * op.jump_rate_per_neighbor();
  if (total_rate <= 0.0) return path;
  double t = exponential(rng, total_rate);
  NodeIndex at = start;
  while (t <= horizon) {
    const auto nbrs = grid.neighbors(at);
    at = nbrs[uniform_index(rng, nbrs.size())];
    path.times.push_back(t);
    path.nodes.push_back(at);
    t += exponential(rng, total_rate);
  }
  return path;
}

}  // namespace epigrid
