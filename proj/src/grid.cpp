#include "pic/grid.hpp"

#include <algorithm>
#include <string>

#include "pic/error.hpp"

namespace pic {

Extent block_extent(int cells, int parts, int index) {
  const int base = cells / parts;
  const int extra = cells % parts;
  const int start = index * base + std::min(index, extra);
  return {start, base + (index < extra ? 1 : 0)};
}

int block_owner(int cells, int parts, int g) {
  const int base = cells / parts;
  const int extra = cells % parts;
  const int boundary = extra * (base + 1);
  if (g < boundary) return g / (base + 1);
  return extra + (g - boundary) / base;
}

DomainTopology::DomainTopology(const Int3& rank_grid, const Int3& global_cells, int ghost_width,
                               int rank)
    : rank_grid_(rank_grid), global_cells_(global_cells), ghost_(ghost_width), rank_(rank) {
  for (int a = 0; a < 3; ++a) {
    if (rank_grid[a] < 1) throw ConfigError("rank grid entries must be >= 1");
    if (global_cells[a] < rank_grid[a]) {
      throw ConfigError("more ranks than cells on axis " + std::to_string(a) + " (" +
                        std::to_string(rank_grid[a]) + " ranks, " +
                        std::to_string(global_cells[a]) + " cells)");
    }
  }
  if (rank < 0 || rank >= size()) throw ConfigError("rank out of range");
  coords_ = coords_of_rank(rank);
  for (int a = 0; a < 3; ++a) {
    extents_[a] = extent_of(a, coords_[a]);
    for (int side = 0; side < 2; ++side) {
      Int3 c = coords_;
      const int dir = side == 0 ? -1 : 1;
      c[a] = (c[a] + dir + rank_grid_[a]) % rank_grid_[a];
      neighbors_[a][side] = rank_of_coords(c);
    }
  }
}

std::vector<DomainTopology> DomainTopology::build_all(const Int3& rank_grid,
                                                      const Int3& global_cells,
                                                      int ghost_width) {
  std::vector<DomainTopology> out;
  const int n = rank_grid[0] * rank_grid[1] * rank_grid[2];
  out.reserve(n);
  for (int r = 0; r < n; ++r) out.emplace_back(rank_grid, global_cells, ghost_width, r);
  return out;
}

std::vector<int> DomainTopology::neighbor_set() const {
  std::vector<int> out;
  for (const auto& pair : neighbors_) {
    for (int r : pair) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int DomainTopology::rank_of_coords(Int3 c) const {
  for (int a = 0; a < 3; ++a) c[a] = ((c[a] % rank_grid_[a]) + rank_grid_[a]) % rank_grid_[a];
  return (c[0] * rank_grid_[1] + c[1]) * rank_grid_[2] + c[2];
}

Int3 DomainTopology::coords_of_rank(int rank) const {
  const int cz = rank % rank_grid_[2];
  const int cy = (rank / rank_grid_[2]) % rank_grid_[1];
  const int cx = rank / (rank_grid_[2] * rank_grid_[1]);
  return {cx, cy, cz};
}

Extent DomainTopology::extent_of(int axis, int coord) const {
  return block_extent(global_cells_[axis], rank_grid_[axis], coord);
}

DomainTopology::LocalIndex DomainTopology::global_to_local(const Int3& global) const {
  Int3 owner{};
  Int3 local{};
  for (int a = 0; a < 3; ++a) {
    if (global[a] < 0 || global[a] >= global_cells_[a]) {
      throw SimulationError("global index out of range on axis " + std::to_string(a) + ": " +
                            std::to_string(global[a]));
    }
    owner[a] = block_owner(global_cells_[a], rank_grid_[a], global[a]);
    local[a] = global[a] - extent_of(a, owner[a]).start;
  }
  return {rank_of_coords(owner), local};
}

Int3 DomainTopology::local_to_global(const LocalIndex& li) const {
  const Int3 c = coords_of_rank(li.rank);
  Int3 g{};
  for (int a = 0; a < 3; ++a) {
    const Extent e = extent_of(a, c[a]);
    if (li.local[a] < 0 || li.local[a] >= e.count) {
      throw SimulationError("local index outside the interior on axis " + std::to_string(a));
    }
    g[a] = e.start + li.local[a];
  }
  return g;
}

}  // namespace pic
