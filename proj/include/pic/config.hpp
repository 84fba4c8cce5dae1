#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pic/io_topology.hpp"
#include "pic/types.hpp"

namespace pic {

enum class Layout { AoS, SoA };

enum class InitKind { TwoStream, Uniform };

struct SpeciesSpec {
  std::string name;
  double charge = -1.0;  ///< units of the elementary charge, sign included
  double mass = 1.0;     ///< units of the electron mass
  int particles_per_cell = 1;
  InitKind init = InitKind::Uniform;
  double density = 1.0;
  double drift_momentum = 0.0;    ///< two_stream: beams at +p0 and -p0 along x
  double thermal_momentum = 0.0;  ///< Gaussian spread per momentum component
  double perturbation = 0.0;      ///< two_stream: uniform random kick amplitude on px

  bool operator==(const SpeciesSpec&) const = default;
};

enum class Quantity { E, B, J, Density, PhaseSpace };

enum class RegionKind { Full, Plane, Box, Line };

/// Spatial selection of an output, in physical (normalized) coordinates.
struct OutputRegion {
  RegionKind kind = RegionKind::Full;
  int axis = 0;             ///< plane: normal axis
  double coordinate = 0.0;  ///< plane: position along the normal axis
  Real3 lo{};               ///< box
  Real3 hi{};               ///< box
  std::array<int, 2> fixed_axes{1, 2};    ///< line: the two pinned axes
  Real3 fixed_coordinates{};              ///< line: indexed by axis

  bool operator==(const OutputRegion&) const = default;
};

struct OutputRequest {
  Quantity quantity = Quantity::E;
  std::string species;  ///< density and particle_phase_space only
  OutputRegion region;
  double t_start = 0.0;
  double t_end = std::numeric_limits<double>::infinity();
  int every_n_steps = 1;

  bool operator==(const OutputRequest&) const = default;
};

struct IoSpec {
  std::optional<int> group_size;  ///< nullopt means "auto"
  std::optional<int> files;       ///< nullopt means "auto"
  IoStrategy strategy = IoStrategy::Aggregated;

  bool operator==(const IoSpec&) const = default;
};

struct SimulationConfig {
  Int3 grid_cells{1, 1, 1};
  Real3 box_size{1.0, 1.0, 1.0};
  double cfl_factor = 0.98;
  int n_steps = 0;
  std::vector<SpeciesSpec> species;
  std::vector<OutputRequest> outputs;
  IoSpec io;
  std::optional<Int3> rank_grid;  ///< nullopt means "auto" from n_ranks
  int n_ranks = 1;
  std::uint64_t rng_seed = 0;
  Layout layout = Layout::SoA;
  std::string output_dir = "output";

  bool operator==(const SimulationConfig&) const = default;
};

/// A validated configuration with every derived quantity resolved.
struct RunPlan {
  SimulationConfig config;
  Real3 cell_size{};
  double dt = 0.0;
  Int3 rank_grid{1, 1, 1};
  int n_ranks = 1;
  int ghost_width = 2;
  IoTopology io;
};

/// Ghost layers needed by the CIC charge-conserving deposit: a particle that
/// starts in the last interior cell can end up to one cell past it, and its
/// shape then reaches one node further.
inline constexpr int kGhostWidth = 2;

/// Largest stable step for the 3D Yee scheme at c = 1.
double yee_stable_dt(const Real3& cell_size);

/// Parses a JSON document. Throws ConfigError with line/column for malformed
/// JSON and ValidationError for unknown, missing or mistyped keys.
SimulationConfig parse_config(std::string_view text);
SimulationConfig load_config(const std::string& path);

/// Inverse of parse_config; the output re-parses to an equal config.
std::string serialize_config(const SimulationConfig& config);

struct ValidationResult {
  std::optional<RunPlan> plan;
  std::vector<std::string> errors;
  bool ok() const { return plan.has_value(); }
};

/// Collects every violation rather than stopping at the first.
ValidationResult validate(const SimulationConfig& config);

/// validate() that throws ValidationError on failure.
RunPlan resolve(const SimulationConfig& config);

/// Resolved plan (dt, rank grid, IoTopology) as JSON text.
std::string describe_plan(const RunPlan& plan);

/// Picks Px*Py*Pz = n_ranks with every axis dividing evenly into cells when
/// possible, preferring the most cube-like subdomains.
std::optional<Int3> auto_rank_grid(int n_ranks, const Int3& cells, int ghost_width);

std::string_view to_string(Layout layout);
std::string_view to_string(IoStrategy strategy);
std::string_view to_string(Quantity quantity);
std::optional<Layout> layout_from_string(std::string_view s);
std::optional<IoStrategy> strategy_from_string(std::string_view s);

}  // namespace pic
