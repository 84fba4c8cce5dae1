#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pic {

/// Wall-clock classes: communication, local computation, call-tree glue.
enum class RegionClass { Comm, Usr, Com };

std::string_view to_string(RegionClass c);

struct RegionStats {
  std::string name;
  RegionClass cls = RegionClass::Usr;
  std::int64_t self_ns = 0;
  std::int64_t inclusive_ns = 0;
  std::int64_t calls = 0;
};

/// One rank's breakdown. all_ns is the root region's inclusive time, and
/// comm_ns + usr_ns + com_ns == all_ns exactly (integer nanoseconds).
struct RankReport {
  int rank = 0;
  std::int64_t all_ns = 0;
  std::int64_t comm_ns = 0;
  std::int64_t usr_ns = 0;
  std::int64_t com_ns = 0;
  std::vector<RegionStats> regions;  ///< in first-entry order

  std::int64_t class_ns(RegionClass c) const {
    return c == RegionClass::Comm ? comm_ns : (c == RegionClass::Usr ? usr_ns : com_ns);
  }
};

/// Per-rank reports merged in rank order.
struct RegionReport {
  std::vector<RankReport> ranks;

  struct Aggregate {
    std::string name;
    RegionClass cls = RegionClass::Usr;
    std::int64_t self_ns = 0;  ///< summed over ranks
    std::int64_t calls = 0;
  };

  double mean_seconds(RegionClass c) const;
  double max_seconds(RegionClass c) const;
  double mean_all_seconds() const;
  double max_all_seconds() const;

  /// Regions summed over ranks, in first-seen order (rank 0 first).
  std::vector<Aggregate> aggregate() const;
  /// The k regions with the most self time summed over ranks; ties by name.
  std::vector<Aggregate> top(std::size_t k) const;
  /// Self time of a named region, averaged over ranks, in seconds.
  double region_mean_seconds(std::string_view name) const;
  /// Largest per-rank inclusive time of a named region, in seconds.
  double region_max_inclusive_seconds(std::string_view name) const;

  std::string to_json() const;
  std::string to_csv() const;
  std::string to_table() const;
};

/// Scoped, nested self-time attribution for a single rank.
///
/// start() opens the root region "main" (class COM); time not claimed by any
/// nested region is the root's self time. Regions must nest properly.
class Profiler {
 public:
  using Clock = std::chrono::steady_clock;

  explicit Profiler(bool enabled = true, int rank = 0) : enabled_(enabled), rank_(rank) {}

  bool enabled() const { return enabled_; }
  void start();
  void stop();
  bool running() const { return running_; }

  void enter(std::string_view name, RegionClass cls);
  /// Throws SimulationError if `name` is not the innermost open region.
  void exit(std::string_view name);

  RankReport report() const;

 private:
  struct Frame {
    int id;
    Clock::time_point start;
    std::int64_t child_ns;
  };

  int id_of(std::string_view name, RegionClass cls);
  void close_top(Clock::time_point now);

  bool enabled_;
  int rank_;
  bool running_ = false;
  std::vector<RegionStats> stats_;
  std::map<std::string, int, std::less<>> ids_;
  std::vector<Frame> stack_;
};

class ScopedRegion {
 public:
  ScopedRegion(Profiler* prof, std::string_view name, RegionClass cls)
      : prof_(prof && prof->enabled() && prof->running() ? prof : nullptr), name_(name) {
    if (prof_) prof_->enter(name_, cls);
  }
  ~ScopedRegion() {
    if (prof_) prof_->exit(name_);
  }
  ScopedRegion(const ScopedRegion&) = delete;
  ScopedRegion& operator=(const ScopedRegion&) = delete;

 private:
  Profiler* prof_;
  std::string_view name_;
};

}  // namespace pic
