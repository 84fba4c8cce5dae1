#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "pic/error.hpp"
#include "pic/output.hpp"
#include "support.hpp"

using namespace pic;
namespace fs = std::filesystem;

namespace {

double sample(int c, int i, int j, int k) { return c * 1000.0 + std::sin(0.3 * i) + 0.01 * j + 1e-4 * k; }

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::vector<char> v((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Bytes b(v.size());
  std::memcpy(b.data(), v.data(), v.size());
  return b;
}

void write_file(const fs::path& p, const Bytes& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

/// Every rank writes its clip of a three-component sample field.
WriteResult write_grid(Int3 cells, Int3 grid, const IoTopology& io, const fs::path& prefix,
                       const IndexBox& region, bool legacy = false) {
  const int n = grid[0] * grid[1] * grid[2];
  WriteResult result;
  testing::run_ranks(n, [&](Communicator& comm) {
    const DomainTopology t(grid, cells, 2, comm.rank());
    std::array<Array3, 3> a{Array3(t.local_cells(), 2), Array3(t.local_cells(), 2), Array3(t.local_cells(), 2)};
    const Int3 o = t.origin(), m = t.local_cells();
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < m[0]; ++i)
        for (int j = 0; j < m[1]; ++j)
          for (int k = 0; k < m[2]; ++k) a[c](i, j, k) = sample(c, o[0] + i, o[1] + j, o[2] + k);
    const Array3* arr[] = {&a[0], &a[1], &a[2]};
    const IndexBox clip = region.intersect(t.owned_box());
    Bytes bytes;
    if (!clip.empty()) bytes = encode_block(make_grid_block(arr, clip, t, io));
    OutputDescriptor d{"E", BlockKind::Grid, region, 12, 0.6, 3};
    auto r = legacy ? legacy_write_all(d, bytes, comm, prefix) : write_output(d, bytes, io, comm, prefix);
    if (comm.rank() == 0) result = r;
  });
  return result;
}

void check_grid(const FileSet& s, const IndexBox& region) {
  REQUIRE(s.grid.has_value());
  REQUIRE(s.grid->region == region);
  for (int c = 0; c < 3; ++c)
    for (int i = region.lo[0]; i < region.hi[0]; ++i)
      for (int j = region.lo[1]; j < region.hi[1]; ++j)
        for (int k = region.lo[2]; k < region.hi[2]; ++k) REQUIRE(s.grid->at(c, i, j, k) == sample(c, i, j, k));
}

const IndexBox kFull{{0, 0, 0}, {8, 8, 8}};

}  // namespace

TEST_SUITE("output") {

TEST_CASE("header encodes to 128 bytes with fields at fixed offsets") {
  FileHeader h;
  h.kind = BlockKind::Particles;
  h.dims = {4, 5, 6};
  h.origin = {-1, 2, 3};
  h.step = 99;
  h.time = 1.25;
  h.file_index = 2;
  h.file_count = 3;
  h.block_count = 17;
  h.components = 7;
  h.quantity = "phase_space:electrons";
  const Bytes b = encode_header(h);
  REQUIRE(b.size() == kFileHeaderBytes);
  CHECK(std::memcmp(b.data(), "PICB", 4) == 0);
  auto u32 = [&](std::size_t off) {
    std::uint32_t v;
    std::memcpy(&v, b.data() + off, 4);
    return v;
  };
  auto u64 = [&](std::size_t off) {
    std::uint64_t v;
    std::memcpy(&v, b.data() + off, 8);
    return v;
  };
  CHECK(u32(4) == 1);
  CHECK(u32(8) == 0x01020304u);
  CHECK(u32(12) == 1);
  CHECK(u64(16) == 4);
  CHECK(u64(32) == 6);
  CHECK(static_cast<std::int64_t>(u64(40)) == -1);
  CHECK(u64(64) == 99);
  double t;
  std::memcpy(&t, b.data() + 72, 8);
  CHECK(t == 1.25);
  CHECK(u32(80) == 2);
  CHECK(u32(84) == 3);
  CHECK(u32(88) == 17);
  CHECK(u32(92) == 7);
  CHECK(std::string(reinterpret_cast<const char*>(b.data()) + 96) == "phase_space:electrons");
  CHECK(decode_header(b) == h);
}

TEST_CASE("header rejects bad magic, version and endianness") {
  Bytes b = encode_header(FileHeader{});
  Bytes m = b;
  m[0] = std::byte{'X'};
  CHECK_THROWS_AS(decode_header(m), IoError);
  Bytes v = b;
  v[4] = std::byte{9};
  CHECK_THROWS_AS(decode_header(v), IoError);
  Bytes e = b;
  e[8] = std::byte{1};
  e[11] = std::byte{4};
  CHECK_THROWS_AS(decode_header(e), IoError);
  CHECK_THROWS_AS(decode_header(std::span<const std::byte>(b.data(), 100)), IoError);
}

TEST_CASE("single-rank grid round trip") {
  testing::TempDir dir("rt1");
  const auto w = write_grid({8, 8, 8}, {1, 1, 1}, IoTopology::plan(1, 1, 1), dir / "e", kFull);
  REQUIRE(w.files.size() == 1);
  const auto s = read_output(dir / "e");
  CHECK(s.used_index);
  CHECK(s.header.step == 12);
  CHECK(s.header.quantity == "E");
  check_grid(s, kFull);
  CHECK(read_output(w.index).grid->values == s.grid->values);
  CHECK(read_output(w.files[0]).grid->values == s.grid->values);
}

TEST_CASE("reconstruction is identical for every group size and file count") {
  testing::TempDir dir("inv");
  std::vector<double> ref;
  const std::vector<std::pair<int, int>> plans{{1, 1}, {2, 1}, {2, 2}, {4, 1}, {8, 1}, {1, 4}};
  for (auto [g, f] : plans) {
    const std::string name = "g" + std::to_string(g) + "f" + std::to_string(f);
    const auto io = IoTopology::plan(8, g, f);
    const auto w = write_grid({8, 8, 8}, {2, 2, 2}, io, dir / name, kFull);
    CHECK(w.files.size() == static_cast<std::size_t>(f));
    const auto s = read_output(dir / name);
    check_grid(s, kFull);
    if (ref.empty()) ref = s.grid->values;
    CHECK(s.grid->values == ref);
  }
}

TEST_CASE("task-local output reconstructs too") {
  testing::TempDir dir("tl");
  const auto w = write_grid({8, 8, 8}, {2, 2, 2}, IoTopology::task_local(8), dir / "t", kFull);
  CHECK(w.files.size() == 8);
  check_grid(read_output(dir / "t"), kFull);
}

TEST_CASE("without the index a sequential scan recovers the same data") {
  testing::TempDir dir("scan");
  const auto w = write_grid({8, 8, 8}, {2, 2, 2}, IoTopology::plan(8, 2, 2), dir / "s", kFull);
  const auto with_index = read_output(dir / "s");
  fs::remove(w.index);
  const auto scanned = read_output(dir / "s");
  CHECK_FALSE(scanned.used_index);
  CHECK(scanned.grid->values == with_index.grid->values);
  CHECK(scan_output(dir / "s").blocks.size() == 8);
}

TEST_CASE("corrupt files are reported, never partially read") {
  testing::TempDir dir("bad");
  const auto w = write_grid({8, 8, 8}, {2, 2, 2}, IoTopology::plan(8, 2, 2), dir / "b", kFull);
  const Bytes good = read_file(w.files[1]);

  SUBCASE("wrong magic") {
    Bytes b = good;
    b[1] = std::byte{'x'};
    write_file(w.files[1], b);
    CHECK_THROWS_AS(read_output(dir / "b"), IoError);
    fs::remove(w.index);
    CHECK_THROWS_AS(read_output(dir / "b"), IoError);
  }
  SUBCASE("truncated file") {
    write_file(w.files[1], Bytes(good.begin(), good.end() - 100));
    CHECK_THROWS_AS(read_output(dir / "b"), IoError);
    fs::remove(w.index);
    CHECK_THROWS_AS(read_output(dir / "b"), IoError);
  }
  SUBCASE("trailing garbage") {
    Bytes b = good;
    b.push_back(std::byte{0});
    write_file(w.files[1], b);
    fs::remove(w.index);
    CHECK_THROWS_AS(read_output(dir / "b"), IoError);
  }
  SUBCASE("bad block magic") {
    Bytes b = good;
    b[kFileHeaderBytes] = std::byte{'Q'};
    write_file(w.files[1], b);
    CHECK_THROWS_AS(read_output(dir / "b"), IoError);
  }
  SUBCASE("missing data file") {
    fs::remove(w.files[1]);
    CHECK_THROWS_AS(read_output(dir / "b"), IoError);
  }
  SUBCASE("malformed index") {
    std::ofstream(w.index) << "{ not json";
    CHECK_THROWS_AS(read_output(dir / "b"), IoError);
  }
}

TEST_CASE("shared-file writes equal aggregated writes") {
  testing::TempDir dir("legacy");
  write_grid({8, 8, 8}, {2, 2, 2}, IoTopology::plan(8, 4, 1), dir / "a", kFull);
  const auto l = write_grid({8, 8, 8}, {2, 2, 2}, IoTopology::shared_file(8), dir / "l", kFull, true);
  CHECK(l.files.size() == 1);
  CHECK(read_output(dir / "l").grid->values == read_output(dir / "a").grid->values);
}

TEST_CASE("one rank: aggregated and shared-file data files are byte-identical") {
  testing::TempDir dir("n1");
  write_grid({8, 8, 8}, {1, 1, 1}, IoTopology::plan(1, 1, 1), dir / "a", kFull);
  write_grid({8, 8, 8}, {1, 1, 1}, IoTopology::shared_file(1), dir / "l", kFull, true);
  CHECK(read_file(data_file_path(dir / "a", 0)) == read_file(data_file_path(dir / "l", 0)));
}

TEST_CASE("file sizes follow the block arithmetic") {
  testing::TempDir dir("size");
  const auto w = write_grid({8, 8, 8}, {2, 2, 2}, IoTopology::plan(8, 2, 2), dir / "z", kFull);
  // each rank owns 4^3 cells of 3 components; four blocks per file
  const std::uint64_t block = kGridBlockHeaderBytes + 3 * 64 * 8;
  for (const auto& f : w.files) CHECK(fs::file_size(f) == kFileHeaderBytes + 4 * block);
  CHECK(w.total_bytes == 2 * (kFileHeaderBytes + 4 * block));
}

TEST_CASE("written files never exceed F + 1 per output") {
  testing::TempDir dir("count");
  write_grid({8, 8, 8}, {2, 2, 2}, IoTopology::plan(8, 2, 2), dir / "c", kFull);
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir.path())) {
    (void)e;
    ++n;
  }
  CHECK(n == 3);
}

TEST_CASE("plane output: only intersecting ranks contribute and the plane is covered") {
  testing::TempDir dir("plane");
  OutputRegion r;
  r.kind = RegionKind::Plane;
  r.axis = 2;
  r.coordinate = 1.3;
  const IndexBox box = region_box(r, {8, 8, 8}, {0.5, 0.5, 0.5});
  CHECK(box == IndexBox{{0, 0, 2}, {8, 8, 3}});
  const auto w = write_grid({8, 8, 8}, {2, 2, 2}, IoTopology::plan(8, 2, 1), dir / "p", box);
  const auto s = read_output(dir / "p");
  CHECK(s.blocks.size() == 4);
  for (const auto& b : s.blocks) CHECK(b.box.lo[2] == 2);
  check_grid(s, box);
  const auto idx = nlohmann::json::parse(std::ifstream(w.index));
  CHECK(idx["blocks"].size() == 4);
  CHECK(idx["files"].size() == 1);
}

TEST_CASE("region boxes") {
  const Int3 cells{10, 10, 10};
  const Real3 d{0.1, 0.1, 0.1};
  OutputRegion full;
  CHECK(region_box(full, cells, d) == IndexBox{{0, 0, 0}, cells});
  OutputRegion b;
  b.kind = RegionKind::Box;
  b.lo = {0.15, 0.0, 0.5};
  b.hi = {0.35, 1.0, 0.6};
  const auto bb = region_box(b, cells, d);
  CHECK(bb.lo == Int3{1, 0, 5});
  CHECK(bb.hi == Int3{4, 10, 6});
  OutputRegion p;
  p.kind = RegionKind::Plane;
  p.axis = 0;
  p.coordinate = 5.0;  // beyond the box clamps to the last layer
  CHECK(region_box(p, cells, d) == IndexBox{{9, 0, 0}, {10, 10, 10}});
  OutputRegion l;
  l.kind = RegionKind::Line;
  l.fixed_axes = {0, 1};
  l.fixed_coordinates = {0.05, 0.25, 0.0};
  CHECK(region_box(l, cells, d) == IndexBox{{0, 2, 0}, {1, 3, 10}});
}

TEST_CASE("emission schedule") {
  SimulationConfig c = testing::two_stream({8, 8, 8}, {1, 1, 1}, 2, 0);
  const RunPlan plan = resolve(c);
  const DomainTopology t({1, 1, 1}, {8, 8, 8}, 2, 0);
  OutputRequest r;
  r.every_n_steps = 5;
  r.t_start = 0.2;
  r.t_end = 0.5;
  CHECK_FALSE(should_emit(r, plan, t, 5, 0.1).emit);  // before the window
  CHECK(should_emit(r, plan, t, 5, 0.2).emit);
  CHECK_FALSE(should_emit(r, plan, t, 6, 0.3).emit);
  CHECK(should_emit(r, plan, t, 10, 0.5).emit);
  CHECK_FALSE(should_emit(r, plan, t, 15, 0.50001).emit);
  CHECK(should_emit(r, plan, t, 10, 0.5).clip == IndexBox{{0, 0, 0}, {8, 8, 8}});
}

TEST_CASE("particle output keeps records in buffer order per rank") {
  testing::TempDir dir("parts");
  const YeeLayout y{{1, 1, 1}};
  for (Layout layout : {Layout::AoS, Layout::SoA}) {
    const std::string name = layout == Layout::AoS ? "aos" : "soa";
    testing::run_ranks(2, [&](Communicator& comm) {
      const DomainTopology t({2, 1, 1}, {8, 4, 4}, 2, comm.rank());
      const auto io = IoTopology::plan(2, 2, 1);
      ParticleBuffer b(layout);
      const double x0 = t.origin()[0];
      for (int i = 0; i < 5; ++i) b.push_back({x0 + 0.5 + i * 0.5, 1.5, 2.5, 0.1 * i, -0.1 * i, comm.rank(), 1.0 + i});
      const auto block = make_particle_block(b, 0, IndexBox{{0, 0, 0}, {8, 4, 4}}, y, t, io);
      OutputDescriptor d{"phase_space:e", BlockKind::Particles, IndexBox{{0, 0, 0}, {8, 4, 4}}, 0, 0.0, 7};
      write_output(d, encode_block(block), io, comm, dir / name);
    });
    const auto s = read_output(dir / name);
    REQUIRE(s.particle_count() == 10);
    for (std::size_t p = 0; p < 10; ++p) {
      const int rank = static_cast<int>(p / 5), i = static_cast<int>(p % 5);
      CHECK(s.particles[p * 7 + 0] == 4.0 * rank + 0.5 + i * 0.5);
      CHECK(s.particles[p * 7 + 5] == rank);
      CHECK(s.particles[p * 7 + 6] == 1.0 + i);
    }
  }
  CHECK(read_file(data_file_path(dir / "aos", 0)) == read_file(data_file_path(dir / "soa", 0)));
}

TEST_CASE("particle selection by region") {
  const YeeLayout y{{0.5, 0.5, 0.5}};
  const DomainTopology t({1, 1, 1}, {8, 8, 8}, 2, 0);
  ParticleBuffer b(Layout::SoA);
  b.push_back({0.1, 0.1, 0.1, 0, 0, 0, 1});
  b.push_back({1.9, 3.9, 2.0, 0, 0, 0, 2});
  b.push_back({1.0, 3.0, 0.9, 0, 0, 0, 3});
  const auto blk = make_particle_block(b, 1, IndexBox{{2, 0, 0}, {4, 8, 8}}, y, t, IoTopology::plan(1, 1, 1));
  REQUIRE(blk.records.size() == 14);
  CHECK(blk.records[6] == 2);
  CHECK(blk.records[13] == 3);
  CHECK(blk.species == 1);
}

TEST_CASE("repeated writes are bitwise deterministic") {
  testing::TempDir dir("det");
  write_grid({8, 8, 8}, {2, 2, 2}, IoTopology::plan(8, 2, 2), dir / "one", kFull);
  write_grid({8, 8, 8}, {2, 2, 2}, IoTopology::plan(8, 2, 2), dir / "two", kFull);
  for (int f = 0; f < 2; ++f)
    CHECK(read_file(data_file_path(dir / "one", f)) == read_file(data_file_path(dir / "two", f)));
}

TEST_CASE("reference files from an independent encoder read back and re-encode identically") {
  const fs::path data = PIC_TEST_DATA_DIR;
  testing::TempDir dir("golden");
  fs::copy_file(data / "golden_grid.0.picb", dir / "g.0.picb");
  fs::copy_file(data / "golden_particles.0.picb", dir / "p.0.picb");

  const auto g = read_output(dir / "g");
  REQUIRE(g.grid.has_value());
  CHECK(g.header.step == 7);
  CHECK(g.header.time == 0.35);
  CHECK(g.header.quantity == "E");
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) CHECK(g.grid->at(c, i, j, k) == c * 100.0 + i * 10.0 + j + 0.5 * k);

  const auto p = read_output(dir / "p");
  REQUIRE(p.particle_count() == 3);
  CHECK(p.particles[7] == 2.5);
  CHECK(p.particles[20] == 0.5);
  CHECK(p.header.quantity == "phase_space:ions");

  // the same content written by the library
  const IndexBox region{{0, 0, 0}, {3, 2, 2}};
  const auto io = IoTopology::plan(2, 1, 1);
  testing::run_ranks(2, [&](Communicator& comm) {
    const int r = comm.rank();
    GridBlock gb;
    gb.rank = r;
    gb.group = r;
    gb.box = r == 0 ? IndexBox{{0, 0, 0}, {2, 2, 2}} : IndexBox{{2, 0, 0}, {3, 2, 2}};
    gb.components = 3;
    for (int c = 0; c < 3; ++c)
      for (int i = gb.box.lo[0]; i < gb.box.hi[0]; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) gb.values.push_back(c * 100.0 + i * 10.0 + j + 0.5 * k);
    write_output({"E", BlockKind::Grid, region, 7, 0.35, 3}, encode_block(gb), io, comm, dir / "g2");
    ParticleBlock pb;
    pb.rank = r;
    pb.group = r;
    for (std::size_t q = r == 0 ? 0 : 7; q < (r == 0 ? 7u : 21u); ++q) pb.records.push_back(p.particles[q]);
    write_output({"phase_space:ions", BlockKind::Particles, region, 7, 0.35, 7}, encode_block(pb), io, comm,
                 dir / "p2");
  });
  CHECK(read_file(dir / "g2.0.picb") == read_file(data / "golden_grid.0.picb"));
  CHECK(read_file(dir / "p2.0.picb") == read_file(data / "golden_particles.0.picb"));
}

TEST_CASE("index describes topology, blocks and provenance") {
  testing::TempDir dir("index");
  std::string prov;
  testing::run_ranks(4, [&](Communicator& comm) {
    const auto io = IoTopology::plan(4, 2, 1);
    GridBlock gb;
    gb.rank = comm.rank();
    gb.group = io.group_of(comm.rank());
    gb.box = IndexBox{{comm.rank(), 0, 0}, {comm.rank() + 1, 1, 1}};
    gb.components = 1;
    gb.values = {1.0 * comm.rank()};
    write_output({"density:e", BlockKind::Grid, IndexBox{{0, 0, 0}, {4, 1, 1}}, 3, 0.1, 1}, encode_block(gb), io,
                 comm, dir / "i", R"({"n_steps": 3})");
  });
  const auto idx = nlohmann::json::parse(std::ifstream(index_file_path(dir / "i")));
  CHECK(idx["format"] == "PICB");
  CHECK(idx["io_topology"]["group_size"] == 2);
  CHECK(idx["io_topology"]["masters"] == 2);
  CHECK(idx["blocks"].size() == 4);
  CHECK(idx["blocks"][2]["offset"] == kFileHeaderBytes + 2 * (kGridBlockHeaderBytes + 8));
  CHECK(idx["config"]["n_steps"] == 3);
  CHECK(read_output(dir / "i").grid->values == std::vector<double>{0, 1, 2, 3});
}

}
