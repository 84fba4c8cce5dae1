#pragma once

#include <string>
#include <vector>

#include "pic/config.hpp"
#include "pic/profiler.hpp"

namespace pic {

enum class ScalingMode { Strong, Weak };

struct ScalingPoint {
  int ranks = 1;
  Int3 rank_grid{1, 1, 1};
  Int3 cells{1, 1, 1};
  std::int64_t cells_per_rank = 0;
  /// Class times, maximum over ranks, in seconds.
  double all_s = 0.0;
  double comm_s = 0.0;
  double usr_s = 0.0;
  double com_s = 0.0;
  double speedup_all = 1.0;  ///< strong mode, relative to the first point
  double speedup_usr = 1.0;
  std::vector<RegionReport::Aggregate> top;
};

/// Write time of one output, old shared-file path against the aggregated one.
struct IoTiming {
  int ranks = 1;
  std::string quantity;
  int group_size = 1;
  int files = 1;
  double legacy_s = 0.0;
  double aggregated_s = 0.0;
  double ratio() const { return aggregated_s > 0.0 ? legacy_s / aggregated_s : 0.0; }
};

struct ScalingTable {
  ScalingMode mode = ScalingMode::Strong;
  unsigned hardware_threads = 1;
  bool oversubscribed = false;
  std::vector<ScalingPoint> points;
  std::vector<IoTiming> io;

  std::string to_json() const;
  std::string to_csv() const;
  std::string to_table() const;
};

struct ScalingOptions {
  bool measure_io = true;
  int repeats = 1;  ///< best of `repeats` runs per point
};

/// Weak scaling rule: from base_ranks to ranks (a power-of-two multiple), the
/// cells, box and rank grid double along x, y, z in turn, so the cells per
/// rank stay fixed. Throws ConfigError when ranks is not such a multiple.
SimulationConfig weak_scaled_config(const SimulationConfig& base, int base_ranks, int ranks);

/// Runs the base config at every rank count. Strong mode keeps the global box;
/// weak mode applies weak_scaled_config relative to the first count and
/// asserts the per-rank cell count is unchanged.
ScalingTable run_scaling_suite(const SimulationConfig& base, const std::vector<int>& rank_counts,
                               ScalingMode mode, const ScalingOptions& options = {});

std::string_view to_string(ScalingMode mode);

}  // namespace pic
