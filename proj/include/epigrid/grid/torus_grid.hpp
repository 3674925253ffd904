#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace epigrid {

using Field = std::vector<double>;
using NodeIndex = std::uint32_t;

/// Periodic lattice [0,1)^d ∩ εZ^d with ε = 1/inv_mesh.
///
/// Nodes are numbered row-major over their integer coordinates (first axis
/// slowest), which is also the memory order FFTW expects. Node i sits at
/// position ε·(i_1, ..., i_d) and owns the cube of side ε centered on it.
class TorusGrid {
 public:
  TorusGrid(int dim, int inv_mesh);

  int dim() const { return dim_; }
  int inv_mesh() const { return inv_mesh_; }
  double mesh() const { return 1.0 / inv_mesh_; }
  std::size_t node_count() const { return node_count_; }
  /// ε^d, the volume of one cell.
  double cell_volume() const;
  std::vector<int> dims() const { return std::vector<int>(dim_, inv_mesh_); }

  std::vector<int> coords(NodeIndex node) const;
  NodeIndex node(std::span<const int> coords) const;  // coordinates taken modulo inv_mesh
  std::vector<double> position(NodeIndex node) const;

  /// Neighbor of `node` along `axis`, `step` = ±1, with periodic wraparound.
  NodeIndex neighbor(NodeIndex node, int axis, int step) const;
  /// The 2d neighbors in order (+e_1, -e_1, +e_2, -e_2, ...). With inv_mesh == 1
  /// every neighbor is the node itself; with inv_mesh == 2 the two neighbors
  /// along an axis coincide.
  std::span<const NodeIndex> neighbors(NodeIndex node) const {
    return {neighbor_table_.data() + node * 2 * dim_, static_cast<std::size_t>(2 * dim_)};
  }

  bool operator==(const TorusGrid& other) const {
    return dim_ == other.dim_ && inv_mesh_ == other.inv_mesh_;
  }

 private:
  int dim_;
  int inv_mesh_;
  std::size_t node_count_;
  std::vector<NodeIndex> neighbor_table_;
};

}  // namespace epigrid
