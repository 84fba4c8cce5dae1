#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "pic/config.hpp"
#include "pic/transport.hpp"

namespace testing {

/// Runs fn(comm) on n in-process ranks and rethrows the first failure.
inline void run_ranks(int n, const std::function<void(pic::Communicator&)>& fn,
                      std::optional<std::uint64_t> jitter = std::nullopt) {
  pic::Hub hub(n, jitter);
  std::vector<std::unique_ptr<pic::Transport>> eps;
  for (int r = 0; r < n; ++r) eps.push_back(hub.endpoint(r));
  std::mutex mu;
  std::exception_ptr first;
  std::vector<std::thread> threads;
  for (int r = 0; r < n; ++r) {
    threads.emplace_back([&, r] {
      try {
        pic::Communicator comm(*eps[r]);
        fn(comm);
      } catch (...) {
        {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
        }
        hub.abort("rank " + std::to_string(r) + " failed");
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("pic_test_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

/// Particle records sorted lexicographically, for multiset comparisons.
inline std::vector<std::array<double, 7>> sorted_records(const std::vector<double>& flat) {
  std::vector<std::array<double, 7>> out(flat.size() / 7);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (int a = 0; a < 7; ++a) out[i][a] = flat[i * 7 + a];
  std::sort(out.begin(), out.end());
  return out;
}

/// Least-squares slope of log(err) against log(h).
inline double log_slope(const std::vector<double>& h, const std::vector<double>& err) {
  const std::size_t n = h.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// A small periodic two-stream configuration.
inline pic::SimulationConfig two_stream(pic::Int3 cells, pic::Real3 box, int ppc, int steps) {
  pic::SimulationConfig c;
  c.grid_cells = cells;
  c.box_size = box;
  c.n_steps = steps;
  c.rng_seed = 42;
  pic::SpeciesSpec s;
  s.name = "electrons";
  s.particles_per_cell = ppc;
  s.init = pic::InitKind::TwoStream;
  s.drift_momentum = 0.2;
  s.perturbation = 1e-3;
  c.species = {s};
  return c;
}

}  // namespace testing
