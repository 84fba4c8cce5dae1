#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pic/config.hpp"
#include "pic/fields.hpp"
#include "pic/grid.hpp"
#include "pic/mover.hpp"
#include "pic/particles.hpp"
#include "pic/profiler.hpp"
#include "pic/transport.hpp"

namespace pic {

enum class TransportKind { Threads, Loopback };

struct RunOptions {
  bool instrument = true;
  /// Continuity residual, div B and Gauss-residual drift every step.
  bool check_conservation = false;
  /// Global particle count compared with the initial count every step.
  bool check_particle_count = false;
  bool record_history = true;
  /// Gather the final global fields and particles onto the result.
  bool collect_state = false;
  bool write_outputs = true;
  /// Write diagnostics.csv and report files next to the outputs.
  bool write_reports = false;
  TransportKind transport = TransportKind::Threads;
  std::optional<std::uint64_t> jitter_seed;
  /// Polled once per step through a collective; set by signal handlers.
  const std::atomic<bool>* stop_flag = nullptr;
  /// Effective configuration echoed into every output index.
  std::string provenance;
};

struct StepRecord {
  std::uint64_t step = 0;
  double time = 0.0;
  double field_energy = 0.0;
  double kinetic_energy = 0.0;
  double total_energy() const { return field_energy + kinetic_energy; }
  /// max |(rho^{n+1} - rho^n)/dt + div J| over nodes, when checked.
  double continuity_residual = 0.0;
  double div_b = 0.0;
  /// max |(div E - rho)(n+1) - (div E - rho)(0)| over nodes, when checked.
  double gauss_drift = 0.0;
  std::int64_t particles = 0;
};

/// Global arrays assembled from every rank, z fastest over the global cells.
struct GlobalState {
  Int3 cells{0, 0, 0};
  std::array<std::vector<double>, 3> E;
  std::array<std::vector<double>, 3> B;
  std::array<std::vector<double>, 3> J;
  /// Per species, record-major, in rank order then buffer order.
  std::vector<std::vector<double>> particles;
};

struct RunResult {
  std::uint64_t steps_completed = 0;
  bool stopped = false;
  std::vector<StepRecord> history;
  RegionReport report;
  std::optional<GlobalState> state;
  std::vector<std::filesystem::path> outputs;  ///< one prefix per emission
  double max_continuity_residual = 0.0;
  double max_div_b = 0.0;
  double max_gauss_drift = 0.0;
  double wall_seconds = 0.0;
};

/// One rank's share of a run: its lattice, particles and communicator.
class RankSimulation {
 public:
  RankSimulation(const RunPlan& plan, int rank, Communicator& comm, const RunOptions& options);

  const DomainTopology& topology() const { return topo_; }
  FieldLattice& lattice() { return lat_; }
  const FieldLattice& lattice() const { return lat_; }
  std::vector<ParticleBuffer>& particles() { return buffers_; }
  const std::vector<Species>& species() const { return species_; }
  std::uint64_t step() const { return step_; }
  double time() const { return static_cast<double>(step_) * plan_.dt; }

  /// Rewinds momenta to -dt/2 and records the initial charge state.
  void initialize();
  /// One leapfrog cycle. Returns the global record for the step it started at.
  StepRecord advance();
  /// Collective: writes every output request due at the current step.
  std::vector<std::filesystem::path> emit_outputs();

  /// Collective: global field and particle state on rank 0 (empty elsewhere).
  std::optional<GlobalState> gather_state();

 private:
  void deposit_rho(Array3& rho, int species) const;
  std::filesystem::path output_prefix(std::size_t request, std::uint64_t step) const;

  const RunPlan& plan_;
  const RunOptions& options_;
  Communicator& comm_;
  DomainTopology topo_;
  YeeLayout layout_;
  LocalFrame frame_;
  FieldLattice lat_;
  std::vector<Species> species_;
  std::vector<ParticleBuffer> buffers_;
  std::uint64_t step_ = 0;
  std::int64_t initial_count_ = 0;
  Array3 gauss0_;
};

/// Runs a validated plan on plan.n_ranks in-process workers and blocks until
/// all of them finish. A failure on any rank aborts the others and is
/// rethrown here.
RunResult run_world(const RunPlan& plan, const RunOptions& options = {});

/// Writes the energy and conservation history as CSV.
void write_history_csv(const std::vector<StepRecord>& history, const std::filesystem::path& path);

}  // namespace pic
