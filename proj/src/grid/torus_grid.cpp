#include "epigrid/grid/torus_grid.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "epigrid/errors.hpp"

namespace epigrid {

TorusGrid::TorusGrid(int dim, int inv_mesh) : dim_(dim), inv_mesh_(inv_mesh) {
  if (dim < 1) throw ValidationError("grid dimension must be >= 1, got " + std::to_string(dim));
  if (inv_mesh < 1) {
    throw ValidationError("inverse mesh size must be a positive integer, got " +
                          std::to_string(inv_mesh));
  }
  const double count = std::pow(static_cast<double>(inv_mesh), dim);
  if (count > static_cast<double>(std::numeric_limits<NodeIndex>::max()) / (2.0 * dim)) {
    throw ValidationError("grid too large: " + std::to_string(count) + " nodes");
  }
  node_count_ = static_cast<std::size_t>(count);
  neighbor_table_.resize(node_count_ * 2 * dim_);
  for (NodeIndex x = 0; x < node_count_; ++x) {
    for (int axis = 0; axis < dim_; ++axis) {
      neighbor_table_[x * 2 * dim_ + 2 * axis] = neighbor(x, axis, +1);
      neighbor_table_[x * 2 * dim_ + 2 * axis + 1] = neighbor(x, axis, -1);
    }
  }
}

double TorusGrid::cell_volume() const { return std::pow(mesh(), dim_); }

std::vector<int> TorusGrid::coords(NodeIndex node) const {
  std::vector<int> c(dim_);
  for (int axis = dim_ - 1; axis >= 0; --axis) {
    c[axis] = static_cast<int>(node % inv_mesh_);
    node /= inv_mesh_;
  }
  return c;
}

NodeIndex TorusGrid::node(std::span<const int> coords) const {
  if (coords.size() != static_cast<std::size_t>(dim_)) {
    throw DimensionError("coordinate vector has " + std::to_string(coords.size()) +
                         " entries, grid dimension is " + std::to_string(dim_));
  }
  NodeIndex out = 0;
  for (int c : coords) {
    const int wrapped = ((c % inv_mesh_) + inv_mesh_) % inv_mesh_;
    out = out * inv_mesh_ + static_cast<NodeIndex>(wrapped);
  }
  return out;
}

std::vector<double> TorusGrid::position(NodeIndex node) const {
  const auto c = coords(node);
  std::vector<double> p(dim_);
  for (int i = 0; i < dim_; ++i) p[i] = c[i] * mesh();
  return p;
}

NodeIndex TorusGrid::neighbor(NodeIndex node, int axis, int step) const {
  auto c = coords(node);
  c[axis] += step;
  return this->node(c);
}

}  // namespace epigrid
