#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pic {

enum class IoStrategy { Aggregated, LegacyShared, TaskLocal };

/// Where one rank's block lands on disk.
struct BlockPlacement {
  int rank = 0;
  int group = 0;
  int file = 0;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

/// Aggregation plan for N ranks: groups of G ranks funnel their blocks to the
/// group's lowest rank (the master); the M = N/G masters share F files with
/// M/F masters per file.
///
/// Shared-file output (every rank writes its own block into one file) is the
/// same plan with G = 1, F = 1, and task-local output is G = 1, F = N.
class IoTopology {
 public:
  IoTopology() = default;

  /// Throws ConfigError unless G | N, F | M and F < M (F = M = 1 is accepted).
  static IoTopology plan(int n_ranks, int group_size, int n_files);
  static IoTopology shared_file(int n_ranks);
  static IoTopology task_local(int n_ranks);
  static IoTopology for_strategy(IoStrategy strategy, int n_ranks, int group_size, int n_files);

  IoStrategy strategy() const { return strategy_; }
  int ranks() const { return n_; }
  int group_size() const { return g_; }
  int masters() const { return n_ / g_; }
  int files() const { return f_; }
  int masters_per_file() const { return masters() / f_; }

  int group_of(int rank) const { return rank / g_; }
  int master_of_group(int group) const { return group * g_; }
  int master_of(int rank) const { return master_of_group(group_of(rank)); }
  bool is_master(int rank) const { return rank % g_ == 0; }
  int file_of_group(int group) const { return group / masters_per_file(); }
  int file_of(int rank) const { return file_of_group(group_of(rank)); }
  /// Lowest master writing to `file`; it also writes the file header.
  int file_leader(int file) const { return master_of_group(file * masters_per_file()); }
  std::vector<int> masters_of_file(int file) const;
  std::vector<int> group_members(int group) const;

  /// Places every rank's block given per-rank block lengths (indexed by rank).
  /// Each file starts with a header of `header_bytes`; blocks follow in
  /// group order, members in rank order.
  std::vector<BlockPlacement> place_blocks(std::span<const std::uint64_t> lengths,
                                           std::uint64_t header_bytes) const;

  bool operator==(const IoTopology&) const = default;

 private:
  IoTopology(IoStrategy s, int n, int g, int f) : strategy_(s), n_(n), g_(g), f_(f) {}

  IoStrategy strategy_ = IoStrategy::Aggregated;
  int n_ = 1;
  int g_ = 1;
  int f_ = 1;
};

/// Largest divisor of n not exceeding cap.
int largest_divisor_at_most(int n, int cap);

}  // namespace pic
