#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pic/config.hpp"
#include "pic/fields.hpp"
#include "pic/grid.hpp"
#include "pic/io_topology.hpp"
#include "pic/particles.hpp"
#include "pic/transport.hpp"

namespace pic {

// On-disk format, little-endian throughout.
//
// Data file:  FileHeader (128 bytes), then blocks back to back.
//   header:   "PICB" | u32 version | u32 0x01020304 | u32 kind
//             | u64 dims[3] | i64 origin[3] | u64 step | f64 time
//             | u32 file_index | u32 file_count | u32 block_count | u32 components
//             | char quantity[32]
//   grid block (72-byte head):  "PGRD" | u32 kind | u32 rank | u32 group
//             | i64 lo[3] | u64 count[3] | u32 components | u32 reserved
//             | f64 payload[components][count x][count y][count z]  (z fastest)
//   particle block (32-byte head): "PPRT" | u32 kind | u32 rank | u32 group
//             | u32 species | u32 reserved | u64 count
//             | f64 records[count][7]  (x, y, z, px, py, pz, w)
// Index sidecar <prefix>.index.json maps every block to (file, offset, length).
// Data files are <prefix>.<file>.picb.

enum class BlockKind : std::uint32_t { Grid = 0, Particles = 1 };

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kEndianMarker = 0x01020304u;
inline constexpr std::uint64_t kFileHeaderBytes = 128;
inline constexpr std::uint64_t kGridBlockHeaderBytes = 72;
inline constexpr std::uint64_t kParticleBlockHeaderBytes = 32;

struct FileHeader {
  BlockKind kind = BlockKind::Grid;
  std::array<std::uint64_t, 3> dims{};
  std::array<std::int64_t, 3> origin{};
  std::uint64_t step = 0;
  double time = 0.0;
  std::uint32_t file_index = 0;
  std::uint32_t file_count = 1;
  std::uint32_t block_count = 0;
  std::uint32_t components = 0;
  std::string quantity;

  bool operator==(const FileHeader&) const = default;
};

Bytes encode_header(const FileHeader& h);
FileHeader decode_header(std::span<const std::byte> bytes);

/// A rank's share of a grid quantity: `box` in global cell indices and the
/// component-major, z-fastest values for it.
struct GridBlock {
  int rank = 0;
  int group = 0;
  IndexBox box;
  int components = 0;
  std::vector<double> values;
};

struct ParticleBlock {
  int rank = 0;
  int group = 0;
  int species = 0;
  std::vector<double> records;  ///< record-major, 7 per particle
};

Bytes encode_block(const GridBlock& b);
Bytes encode_block(const ParticleBlock& b);

/// What is being written and how the reader should lay it out.
struct OutputDescriptor {
  std::string quantity;          ///< e.g. "E", "density:electrons"
  BlockKind kind = BlockKind::Grid;
  IndexBox region;               ///< global index box of the output
  std::uint64_t step = 0;
  double time = 0.0;
  int components = 0;            ///< 7 for particles
};

struct WriteResult {
  std::vector<std::filesystem::path> files;
  std::filesystem::path index;
  std::vector<BlockPlacement> placements;
  std::uint64_t total_bytes = 0;
};

std::filesystem::path data_file_path(const std::filesystem::path& prefix, int file);
std::filesystem::path index_file_path(const std::filesystem::path& prefix);

/// Collective write. Non-masters send their block to the group master, each
/// master writes its group's blocks (rank order) at their precomputed offset
/// in its file, and rank 0 writes the index after a barrier. An empty `block`
/// means this rank contributes nothing. `provenance` is JSON embedded in the
/// index (may be empty).
WriteResult write_output(const OutputDescriptor& desc, const Bytes& block, const IoTopology& io,
                         Communicator& comm, const std::filesystem::path& prefix,
                         const std::string& provenance = {});

/// Every rank writes its own block at its own offset into one shared file.
WriteResult legacy_write_all(const OutputDescriptor& desc, const Bytes& block, Communicator& comm,
                             const std::filesystem::path& prefix,
                             const std::string& provenance = {});

struct BlockInfo {
  int rank = 0;
  int group = 0;
  int file = 0;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  int species = -1;  ///< particle blocks only
  IndexBox box;      ///< grid blocks only
};

/// A reconstructed grid quantity over its output region.
struct GridField {
  IndexBox region;
  int components = 0;
  std::vector<double> values;  ///< component-major, z fastest over region

  double at(int c, int i, int j, int k) const {
    const Int3 n = region.count();
    return values[((static_cast<std::size_t>(c) * n[0] + (i - region.lo[0])) * n[1] +
                   (j - region.lo[1])) * n[2] + (k - region.lo[2])];
  }
};

struct FileSet {
  FileHeader header;  ///< from file 0, with block_count summed over files
  std::vector<BlockInfo> blocks;
  std::optional<GridField> grid;
  std::vector<double> particles;  ///< record-major, files and blocks in order
  bool used_index = false;

  std::size_t particle_count() const { return particles.size() / kAttrs; }
};

/// Reads a fileset given its prefix or its index path. Uses the index when
/// present, otherwise scans the data files block by block. Throws IoError on
/// any inconsistency; never returns partial data.
FileSet read_output(const std::filesystem::path& path);
/// Sequential scan that ignores the index.
FileSet scan_output(const std::filesystem::path& prefix);

/// The global index box selected by a region on a grid of `cells` cells.
IndexBox region_box(const OutputRegion& region, const Int3& cells, const Real3& cell_size);

struct Emission {
  bool emit = false;
  IndexBox region;  ///< global output box
  IndexBox clip;    ///< this rank's share (possibly empty)
};

/// True iff time lies in the request's window and step is a multiple of its
/// period; also returns the region clipped to the rank's subdomain.
Emission should_emit(const OutputRequest& request, const RunPlan& plan, const DomainTopology& topo,
                     std::uint64_t step, double time);

/// Copies the clip of up to three arrays into a block.
GridBlock make_grid_block(std::span<const Array3* const> arrays, const IndexBox& clip,
                          const DomainTopology& topo, const IoTopology& io);

/// Selects particles whose cell lies in `region`.
ParticleBlock make_particle_block(const ParticleBuffer& buf, int species, const IndexBox& region,
                                  const YeeLayout& layout, const DomainTopology& topo,
                                  const IoTopology& io);

}  // namespace pic
