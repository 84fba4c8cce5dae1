#pragma once

#include <array>
#include <optional>
#include <vector>

#include "pic/types.hpp"

namespace pic {

/// Field components stored on the Yee lattice.
enum class Component { Ex, Ey, Ez, Bx, By, Bz, Node, Center };

/// Half-cell offsets of each component within cell (i,j,k): E on edges, B on
/// faces, J with E, rho at nodes. Node and Center are the primal and dual
/// scalar locations used by the divergence diagnostics.
struct YeeLayout {
  Real3 cell_size{1.0, 1.0, 1.0};

  static constexpr Real3 offset(Component c) {
    switch (c) {
      case Component::Ex: return {0.5, 0.0, 0.0};
      case Component::Ey: return {0.0, 0.5, 0.0};
      case Component::Ez: return {0.0, 0.0, 0.5};
      case Component::Bx: return {0.0, 0.5, 0.5};
      case Component::By: return {0.5, 0.0, 0.5};
      case Component::Bz: return {0.5, 0.5, 0.0};
      case Component::Node: return {0.0, 0.0, 0.0};
      case Component::Center: return {0.5, 0.5, 0.5};
    }
    return {};
  }

  static constexpr Component e_component(int axis) {
    return static_cast<Component>(static_cast<int>(Component::Ex) + axis);
  }
  static constexpr Component b_component(int axis) {
    return static_cast<Component>(static_cast<int>(Component::Bx) + axis);
  }

  /// Physical position of the sample of `c` at global index `g`.
  Real3 position(Component c, const Int3& g) const {
    const Real3 off = offset(c);
    return {(g[0] + off[0]) * cell_size[0], (g[1] + off[1]) * cell_size[1],
            (g[2] + off[2]) * cell_size[2]};
  }
};

/// Boundary handling per axis. Only periodic is implemented.
enum class BoundaryKind { Periodic };

/// Half-open range of global cell indices owned along one axis.
struct Extent {
  int start = 0;
  int count = 0;
  int end() const { return start + count; }
  bool contains(int g) const { return g >= start && g < end(); }
  bool operator==(const Extent&) const = default;
};

/// Half-open box of global cell indices.
struct IndexBox {
  Int3 lo{0, 0, 0};
  Int3 hi{0, 0, 0};
  bool empty() const { return hi[0] <= lo[0] || hi[1] <= lo[1] || hi[2] <= lo[2]; }
  Int3 count() const {
    return {std::max(0, hi[0] - lo[0]), std::max(0, hi[1] - lo[1]), std::max(0, hi[2] - lo[2])};
  }
  IndexBox intersect(const IndexBox& o) const {
    IndexBox r;
    for (int a = 0; a < 3; ++a) {
      r.lo[a] = std::max(lo[a], o.lo[a]);
      r.hi[a] = std::min(hi[a], o.hi[a]);
    }
    return r;
  }
  bool operator==(const IndexBox&) const = default;
};

/// Cartesian block decomposition of the global grid, seen from one rank.
///
/// Ranks are numbered with z fastest: rank = (cx * Py + cy) * Pz + cz.
/// Remainder cells go to the lowest-coordinate ranks, one each.
class DomainTopology {
 public:
  /// Throws ConfigError if an axis has more ranks than cells.
  DomainTopology(const Int3& rank_grid, const Int3& global_cells, int ghost_width, int rank);

  static std::vector<DomainTopology> build_all(const Int3& rank_grid, const Int3& global_cells,
                                               int ghost_width);

  const Int3& rank_grid() const { return rank_grid_; }
  const Int3& global_cells() const { return global_cells_; }
  int ghost_width() const { return ghost_; }
  int rank() const { return rank_; }
  int size() const { return rank_grid_[0] * rank_grid_[1] * rank_grid_[2]; }
  const Int3& coords() const { return coords_; }
  const Extent& extent(int axis) const { return extents_[axis]; }
  Int3 local_cells() const { return {extents_[0].count, extents_[1].count, extents_[2].count}; }
  Int3 origin() const { return {extents_[0].start, extents_[1].start, extents_[2].start}; }
  IndexBox owned_box() const {
    return {origin(), {extents_[0].end(), extents_[1].end(), extents_[2].end()}};
  }
  BoundaryKind boundary(int /*axis*/) const { return BoundaryKind::Periodic; }

  /// Face neighbor across `axis` in direction dir (-1 or +1), periodic.
  int neighbor(int axis, int dir) const { return neighbors_[axis][dir > 0 ? 1 : 0]; }
  /// Distinct ranks this rank exchanges bulk data with.
  std::vector<int> neighbor_set() const;
  /// True when this rank sits on the global boundary on the given side.
  bool at_global_boundary(int axis, int dir) const {
    return dir < 0 ? coords_[axis] == 0 : coords_[axis] == rank_grid_[axis] - 1;
  }

  int rank_of_coords(Int3 c) const;
  Int3 coords_of_rank(int rank) const;
  /// Per-axis extent owned by the rank with coordinate `coord` along `axis`.
  Extent extent_of(int axis, int coord) const;

  struct LocalIndex {
    int rank = 0;
    Int3 local{0, 0, 0};
    bool operator==(const LocalIndex&) const = default;
  };
  /// Owner and local interior index of a global cell; throws on out-of-range.
  LocalIndex global_to_local(const Int3& global) const;
  Int3 local_to_global(const LocalIndex& li) const;

 private:
  Int3 rank_grid_;
  Int3 global_cells_;
  int ghost_;
  int rank_;
  Int3 coords_{};
  std::array<Extent, 3> extents_{};
  std::array<std::array<int, 2>, 3> neighbors_{};
};

/// Split of `cells` over `parts` with the remainder on the lowest parts.
Extent block_extent(int cells, int parts, int index);

/// Part index owning global cell `g` under block_extent's rule.
int block_owner(int cells, int parts, int g);

}  // namespace pic
