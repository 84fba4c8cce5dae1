#include "pic/io_topology.hpp"

#include <string>

#include "pic/error.hpp"

namespace pic {

IoTopology IoTopology::plan(int n_ranks, int group_size, int n_files) {
  if (n_ranks < 1) throw ConfigError("rank count must be at least 1");
  if (group_size < 1) throw ConfigError("group size must be at least 1");
  if (n_files < 1) throw ConfigError("file count must be at least 1");
  if (n_ranks % group_size != 0) {
    throw ConfigError("group size must divide rank count (G=" + std::to_string(group_size) +
                      ", N=" + std::to_string(n_ranks) + ")");
  }
  const int masters = n_ranks / group_size;
  if (masters % n_files != 0) {
    throw ConfigError("file count must divide master count (F=" + std::to_string(n_files) +
                      ", M=" + std::to_string(masters) + ")");
  }
  if (!(n_files < masters) && !(n_files == 1 && masters == 1)) {
    throw ConfigError("file count must be smaller than master count (F=" +
                      std::to_string(n_files) + ", M=" + std::to_string(masters) + ")");
  }
  return IoTopology(IoStrategy::Aggregated, n_ranks, group_size, n_files);
}

IoTopology IoTopology::shared_file(int n_ranks) {
  if (n_ranks < 1) throw ConfigError("rank count must be at least 1");
  return IoTopology(IoStrategy::LegacyShared, n_ranks, 1, 1);
}

IoTopology IoTopology::task_local(int n_ranks) {
  if (n_ranks < 1) throw ConfigError("rank count must be at least 1");
  return IoTopology(IoStrategy::TaskLocal, n_ranks, 1, n_ranks);
}

IoTopology IoTopology::for_strategy(IoStrategy strategy, int n_ranks, int group_size,
                                    int n_files) {
  switch (strategy) {
    case IoStrategy::LegacyShared:
      return shared_file(n_ranks);
    case IoStrategy::TaskLocal:
      return task_local(n_ranks);
    case IoStrategy::Aggregated:
      break;
  }
  return plan(n_ranks, group_size, n_files);
}

std::vector<int> IoTopology::masters_of_file(int file) const {
  std::vector<int> out;
  const int per = masters_per_file();
  for (int m = file * per; m < (file + 1) * per; ++m) out.push_back(master_of_group(m));
  return out;
}

std::vector<int> IoTopology::group_members(int group) const {
  std::vector<int> out;
  for (int r = group * g_; r < (group + 1) * g_; ++r) out.push_back(r);
  return out;
}

std::vector<BlockPlacement> IoTopology::place_blocks(std::span<const std::uint64_t> lengths,
                                                     std::uint64_t header_bytes) const {
  if (static_cast<int>(lengths.size()) != n_) {
    throw SimulationError("block length table does not match rank count");
  }
  std::vector<BlockPlacement> out(n_);
  std::vector<std::uint64_t> cursor(f_, header_bytes);
  // Ranks are visited in order, which is group order then member order.
  for (int r = 0; r < n_; ++r) {
    const int file = file_of(r);
    out[r] = {r, group_of(r), file, cursor[file], lengths[r]};
    cursor[file] += lengths[r];
  }
  return out;
}

int largest_divisor_at_most(int n, int cap) {
  for (int d = std::min(n, cap); d >= 1; --d) {
    if (n % d == 0) return d;
  }
  return 1;
}

}  // namespace pic
