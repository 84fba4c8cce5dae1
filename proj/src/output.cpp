#include "pic/output.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pic/error.hpp"
#include "pic/profiler.hpp"

static_assert(std::endian::native == std::endian::little,
              "the PICB writer emits native byte order and assumes a little-endian host");

namespace pic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kFileMagic[4] = {'P', 'I', 'C', 'B'};
constexpr char kGridMagic[4] = {'P', 'G', 'R', 'D'};
constexpr char kParticleMagic[4] = {'P', 'P', 'R', 'T'};
constexpr std::size_t kQuantityBytes = 32;

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve = 0) { out_.reserve(reserve); }
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::byte*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void put_doubles(const std::vector<double>& v) { put_raw(v.data(), v.size() * sizeof(double)); }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::byte> data, std::string context)
      : data_(data), context_(std::move(context)) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw IoError(context_ + ": truncated data");
  }
  std::span<const std::byte> data_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::string errno_text() { return std::strerror(errno); }

Bytes read_range(const fs::path& path, std::uint64_t offset, std::uint64_t length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  if (offset + length > size) {
    throw IoError(path.string() + ": truncated (need bytes up to " +
                  std::to_string(offset + length) + ", file has " + std::to_string(size) + ")");
  }
  Bytes b(length);
  in.seekg(static_cast<std::streamoff>(offset));
  in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(length));
  if (!in) throw IoError(path.string() + ": read failed at offset " + std::to_string(offset));
  return b;
}

std::uint64_t size_of(const fs::path& path) {
  std::error_code ec;
  const auto s = fs::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string() + ": " + ec.message());
  return s;
}

void pwrite_all(int fd, const std::byte* data, std::uint64_t length, std::uint64_t offset,
                const fs::path& path) {
  std::uint64_t done = 0;
  while (done < length) {
    const ssize_t n = ::pwrite(fd, data + done, length - done, static_cast<off_t>(offset + done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("write to " + path.string() + " at offset " + std::to_string(offset + done) +
                    " failed: " + errno_text());
    }
    done += static_cast<std::uint64_t>(n);
  }
}

class FileDescriptor {
 public:
  FileDescriptor(const fs::path& path, int flags) : path_(path) {
    fd_ = ::open(path.c_str(), flags, 0644);
    if (fd_ < 0) throw IoError("cannot open " + path.string() + " for writing: " + errno_text());
  }
  ~FileDescriptor() {
    if (fd_ >= 0) ::close(fd_);
  }
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;
  int get() const { return fd_; }
  void close() {
    if (fd_ >= 0 && ::close(fd_) != 0) {
      fd_ = -1;
      throw IoError("close of " + path_.string() + " failed: " + errno_text());
    }
    fd_ = -1;
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

constexpr Tag kIoGather{Channel::Io, 1};

}  // namespace

Bytes encode_header(const FileHeader& h) {
  ByteWriter w(kFileHeaderBytes);
  w.put_raw(kFileMagic, 4);
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint32_t>(kEndianMarker);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(h.kind));
  for (auto d : h.dims) w.put<std::uint64_t>(d);
  for (auto o : h.origin) w.put<std::int64_t>(o);
  w.put<std::uint64_t>(h.step);
  w.put<double>(h.time);
  w.put<std::uint32_t>(h.file_index);
  w.put<std::uint32_t>(h.file_count);
  w.put<std::uint32_t>(h.block_count);
  w.put<std::uint32_t>(h.components);
  char q[kQuantityBytes] = {};
  std::memcpy(q, h.quantity.data(), std::min(h.quantity.size(), kQuantityBytes - 1));
  w.put_raw(q, kQuantityBytes);
  return w.take();
}

FileHeader decode_header(std::span<const std::byte> bytes) {
  ByteReader r(bytes, "file header");
  char magic[4];
  r.get_raw(magic, 4);
  if (std::memcmp(magic, kFileMagic, 4) != 0) throw IoError("bad magic: not a PICB file");
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw IoError("unsupported PICB version " + std::to_string(version));
  }
  if (r.get<std::uint32_t>() != kEndianMarker) throw IoError("endianness marker mismatch");
  FileHeader h;
  const auto kind = r.get<std::uint32_t>();
  if (kind > 1) throw IoError("unknown data kind " + std::to_string(kind));
  h.kind = static_cast<BlockKind>(kind);
  for (auto& d : h.dims) d = r.get<std::uint64_t>();
  for (auto& o : h.origin) o = r.get<std::int64_t>();
  h.step = r.get<std::uint64_t>();
  h.time = r.get<double>();
  h.file_index = r.get<std::uint32_t>();
  h.file_count = r.get<std::uint32_t>();
  h.block_count = r.get<std::uint32_t>();
  h.components = r.get<std::uint32_t>();
  char q[kQuantityBytes];
  r.get_raw(q, kQuantityBytes);
  q[kQuantityBytes - 1] = '\0';
  h.quantity = q;
  return h;
}

Bytes encode_block(const GridBlock& b) {
  const Int3 n = b.box.count();
  const auto expected = static_cast<std::size_t>(b.components) * product(n);
  if (b.values.size() != expected) throw SimulationError("grid block payload size mismatch");
  ByteWriter w(kGridBlockHeaderBytes + expected * sizeof(double));
  w.put_raw(kGridMagic, 4);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(BlockKind::Grid));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(b.rank));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(b.group));
  for (int a = 0; a < 3; ++a) w.put<std::int64_t>(b.box.lo[a]);
  for (int a = 0; a < 3; ++a) w.put<std::uint64_t>(static_cast<std::uint64_t>(n[a]));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(b.components));
  w.put<std::uint32_t>(0);
  w.put_doubles(b.values);
  return w.take();
}

Bytes encode_block(const ParticleBlock& b) {
  if (b.records.size() % kAttrs != 0) throw SimulationError("particle block is not whole records");
  ByteWriter w(kParticleBlockHeaderBytes + b.records.size() * sizeof(double));
  w.put_raw(kParticleMagic, 4);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(BlockKind::Particles));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(b.rank));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(b.group));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(b.species));
  w.put<std::uint32_t>(0);
  w.put<std::uint64_t>(b.records.size() / kAttrs);
  w.put_doubles(b.records);
  return w.take();
}

fs::path data_file_path(const fs::path& prefix, int file) {
  return fs::path(prefix.string() + "." + std::to_string(file) + ".picb");
}

fs::path index_file_path(const fs::path& prefix) {
  return fs::path(prefix.string() + ".index.json");
}

WriteResult write_output(const OutputDescriptor& desc, const Bytes& block, const IoTopology& io,
                         Communicator& comm, const fs::path& prefix, const std::string& provenance) {
  Profiler* prof = comm.profiler();
  ScopedRegion region(prof, "output.write", RegionClass::Com);
  const int rank = comm.rank();
  if (io.ranks() != comm.size()) throw SimulationError("I/O topology does not match rank count");

  const auto lengths = comm.allgather(block.size());
  const auto placements = io.place_blocks(lengths, kFileHeaderBytes);

  std::vector<std::uint64_t> file_bytes(io.files(), kFileHeaderBytes);
  std::vector<std::uint32_t> file_blocks(io.files(), 0);
  for (const auto& p : placements) {
    file_bytes[p.file] += p.length;
    if (p.length > 0) file_blocks[p.file] += 1;
  }

  // Phase 1: funnel blocks to group masters.
  Bytes group_bytes;
  if (io.is_master(rank)) {
    group_bytes = block;
    const auto members = io.group_members(io.group_of(rank));
    for (int member : members) {
      if (member == rank) continue;
      Bytes part = comm.recv(member, kIoGather);
      if (part.size() != lengths[member]) throw SimulationError("aggregated block length mismatch");
      group_bytes.insert(group_bytes.end(), part.begin(), part.end());
    }
  } else {
    comm.send(io.master_of(rank), kIoGather, block);
  }

  // Phase 2: file leaders create and size their files.
  const int my_file = io.file_of(rank);
  const fs::path my_path = data_file_path(prefix, my_file);
  if (io.is_master(rank) && io.file_leader(my_file) == rank) {
    ScopedRegion w(prof, "io.create", RegionClass::Usr);
    std::error_code ec;
    if (!prefix.parent_path().empty()) fs::create_directories(prefix.parent_path(), ec);
    FileHeader h;
    h.kind = desc.kind;
    const Int3 n = desc.region.count();
    for (int a = 0; a < 3; ++a) {
      h.dims[a] = static_cast<std::uint64_t>(n[a]);
      h.origin[a] = desc.region.lo[a];
    }
    h.step = desc.step;
    h.time = desc.time;
    h.file_index = static_cast<std::uint32_t>(my_file);
    h.file_count = static_cast<std::uint32_t>(io.files());
    h.block_count = file_blocks[my_file];
    h.components = static_cast<std::uint32_t>(desc.components);
    h.quantity = desc.quantity;
    FileDescriptor fd(my_path, O_WRONLY | O_CREAT | O_TRUNC);
    const Bytes header = encode_header(h);
    pwrite_all(fd.get(), header.data(), header.size(), 0, my_path);
    if (::ftruncate(fd.get(), static_cast<off_t>(file_bytes[my_file])) != 0) {
      throw IoError("cannot size " + my_path.string() + ": " + errno_text());
    }
    fd.close();
  }
  comm.barrier();

  // Phase 3: masters write their group's blocks at the precomputed offset.
  if (io.is_master(rank) && !group_bytes.empty()) {
    ScopedRegion w(prof, "io.pwrite", RegionClass::Usr);
    FileDescriptor fd(my_path, O_WRONLY);
    pwrite_all(fd.get(), group_bytes.data(), group_bytes.size(), placements[rank].offset, my_path);
    fd.close();
  }
  comm.barrier();

  WriteResult result;
  result.placements = placements;
  result.index = index_file_path(prefix);
  for (int f = 0; f < io.files(); ++f) {
    result.files.push_back(data_file_path(prefix, f));
    result.total_bytes += file_bytes[f];
  }

  // Phase 4: the index, written once all data is in place.
  if (rank == 0) {
    ScopedRegion w(prof, "io.index", RegionClass::Usr);
    json doc;
    doc["format"] = "PICB";
    doc["version"] = kFormatVersion;
    doc["kind"] = desc.kind == BlockKind::Grid ? "grid" : "particles";
    doc["quantity"] = desc.quantity;
    doc["step"] = desc.step;
    doc["time"] = desc.time;
    doc["components"] = desc.components;
    doc["region"] = {{"lo", desc.region.lo}, {"count", desc.region.count()}};
    doc["io_topology"] = {{"strategy", to_string(io.strategy())},
                          {"ranks", io.ranks()},
                          {"group_size", io.group_size()},
                          {"masters", io.masters()},
                          {"files", io.files()}};
    doc["files"] = json::array();
    for (const auto& f : result.files) doc["files"].push_back(f.filename().string());
    doc["blocks"] = json::array();
    for (const auto& p : placements) {
      if (p.length == 0) continue;
      doc["blocks"].push_back({{"rank", p.rank},
                               {"group", p.group},
                               {"file", p.file},
                               {"offset", p.offset},
                               {"length", p.length}});
    }
    if (!provenance.empty()) doc["config"] = json::parse(provenance);
    std::ofstream out(result.index);
    out << doc.dump(2) << '\n';
    out.close();
    if (!out) throw IoError("cannot write index " + result.index.string());
  }
  comm.barrier();
  return result;
}

WriteResult legacy_write_all(const OutputDescriptor& desc, const Bytes& block, Communicator& comm,
                             const fs::path& prefix, const std::string& provenance) {
  return write_output(desc, block, IoTopology::shared_file(comm.size()), comm, prefix, provenance);
}

namespace {

struct ParsedBlock {
  BlockInfo info;
  IndexBox box;
  int components = 0;
  std::vector<double> values;   // grid payload or particle records
};

ParsedBlock parse_block(std::span<const std::byte> bytes, const std::string& context,
                        BlockKind expected) {
  ByteReader r(bytes, context);
  char magic[4];
  r.get_raw(magic, 4);
  ParsedBlock b;
  const auto kind = r.get<std::uint32_t>();
  b.info.rank = static_cast<int>(r.get<std::uint32_t>());
  b.info.group = static_cast<int>(r.get<std::uint32_t>());
  if (expected == BlockKind::Grid) {
    if (std::memcmp(magic, kGridMagic, 4) != 0 || kind != 0) throw IoError(context + ": not a grid block");
    std::uint64_t count[3];
    for (int a = 0; a < 3; ++a) b.box.lo[a] = static_cast<int>(r.get<std::int64_t>());
    for (int a = 0; a < 3; ++a) count[a] = r.get<std::uint64_t>();
    for (int a = 0; a < 3; ++a) b.box.hi[a] = b.box.lo[a] + static_cast<int>(count[a]);
    b.components = static_cast<int>(r.get<std::uint32_t>());
    r.get<std::uint32_t>();
    const std::uint64_t n = count[0] * count[1] * count[2] * b.components;
    b.values.resize(n);
    r.get_raw(b.values.data(), n * sizeof(double));
  } else {
    if (std::memcmp(magic, kParticleMagic, 4) != 0 || kind != 1) throw IoError(context + ": not a particle block");
    b.info.species = static_cast<int>(r.get<std::uint32_t>());
    r.get<std::uint32_t>();
    const auto count = r.get<std::uint64_t>();
    b.values.resize(count * kAttrs);
    r.get_raw(b.values.data(), b.values.size() * sizeof(double));
  }
  b.info.length = r.pos();
  if (r.pos() != bytes.size()) throw IoError(context + ": block length does not match its contents");
  return b;
}

/// Size of the block starting at `head`, from its header alone.
std::uint64_t peek_block_length(std::span<const std::byte> head, BlockKind kind,
                                const std::string& context) {
  ByteReader r(head, context);
  r.get<std::uint32_t>();
  r.get<std::uint32_t>();
  r.get<std::uint32_t>();
  r.get<std::uint32_t>();
  if (kind == BlockKind::Grid) {
    for (int a = 0; a < 3; ++a) r.get<std::int64_t>();
    std::uint64_t n = 1;
    for (int a = 0; a < 3; ++a) n *= r.get<std::uint64_t>();
    n *= r.get<std::uint32_t>();
    return kGridBlockHeaderBytes + n * sizeof(double);
  }
  r.get<std::uint32_t>();
  r.get<std::uint32_t>();
  return kParticleBlockHeaderBytes + r.get<std::uint64_t>() * kAttrs * sizeof(double);
}

fs::path prefix_from(const fs::path& path) {
  const std::string s = path.string();
  const std::string suffix = ".index.json";
  if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return fs::path(s.substr(0, s.size() - suffix.size()));
  }
  const std::string data_suffix = ".picb";
  if (s.size() > data_suffix.size() &&
      s.compare(s.size() - data_suffix.size(), data_suffix.size(), data_suffix) == 0) {
    // <prefix>.<file>.picb
    const auto stem = s.substr(0, s.size() - data_suffix.size());
    const auto dot = stem.rfind('.');
    if (dot != std::string::npos) return fs::path(stem.substr(0, dot));
  }
  return path;
}

FileSet assemble(const FileHeader& first, std::vector<ParsedBlock>&& blocks, bool used_index) {
  FileSet set;
  set.header = first;
  set.used_index = used_index;
  set.header.block_count = static_cast<std::uint32_t>(blocks.size());
  IndexBox region;
  for (int a = 0; a < 3; ++a) {
    region.lo[a] = static_cast<int>(first.origin[a]);
    region.hi[a] = region.lo[a] + static_cast<int>(first.dims[a]);
  }
  if (first.kind == BlockKind::Grid) {
    GridField g;
    g.region = region;
    g.components = static_cast<int>(first.components);
    const Int3 n = region.count();
    const auto cells = static_cast<std::size_t>(product(n));
    g.values.assign(cells * g.components, 0.0);
    std::vector<char> covered(cells, 0);
    std::size_t filled = 0;
    for (const auto& b : blocks) {
      if (b.components != g.components) throw IoError("grid block component count differs from header");
      if (b.box.intersect(region) != b.box) throw IoError("grid block extends outside the output region");
      const Int3 bn = b.box.count();
      std::size_t p = 0;
      for (int c = 0; c < g.components; ++c) {
        for (int i = 0; i < bn[0]; ++i)
          for (int j = 0; j < bn[1]; ++j)
            for (int k = 0; k < bn[2]; ++k) {
              const std::size_t cell =
                  (static_cast<std::size_t>(b.box.lo[0] + i - region.lo[0]) * n[1] +
                   (b.box.lo[1] + j - region.lo[1])) * n[2] + (b.box.lo[2] + k - region.lo[2]);
              if (c == 0) {
                if (covered[cell]) throw IoError("grid blocks overlap");
                covered[cell] = 1;
                ++filled;
              }
              g.values[c * cells + cell] = b.values[p++];
            }
      }
    }
    if (filled != cells) throw IoError("grid blocks do not cover the output region");
    set.grid = std::move(g);
  } else {
    for (const auto& b : blocks) set.particles.insert(set.particles.end(), b.values.begin(), b.values.end());
  }
  for (auto& b : blocks) {
    b.info.box = b.box;
    set.blocks.push_back(b.info);
  }
  return set;
}

void check_same_output(const FileHeader& first, const FileHeader& h, const fs::path& path) {
  if (h.kind != first.kind || h.dims != first.dims || h.origin != first.origin ||
      h.step != first.step || h.time != first.time || h.file_count != first.file_count ||
      h.components != first.components || h.quantity != first.quantity) {
    throw IoError(path.string() + ": header disagrees with the rest of the fileset");
  }
}

}  // namespace

FileSet scan_output(const fs::path& path) {
  const fs::path prefix = prefix_from(path);
  const fs::path first_path = data_file_path(prefix, 0);
  const FileHeader first = decode_header(read_range(first_path, 0, kFileHeaderBytes));
  std::vector<ParsedBlock> blocks;
  for (std::uint32_t f = 0; f < first.file_count; ++f) {
    const fs::path p = data_file_path(prefix, static_cast<int>(f));
    const FileHeader h = decode_header(read_range(p, 0, kFileHeaderBytes));
    check_same_output(first, h, p);
    if (h.file_index != f) throw IoError(p.string() + ": file index mismatch");
    const std::uint64_t size = size_of(p);
    std::uint64_t offset = kFileHeaderBytes;
    const std::uint64_t head_bytes =
        first.kind == BlockKind::Grid ? kGridBlockHeaderBytes : kParticleBlockHeaderBytes;
    for (std::uint32_t b = 0; b < h.block_count; ++b) {
      const std::string ctx = p.string() + " block at offset " + std::to_string(offset);
      const Bytes head = read_range(p, offset, head_bytes);
      const std::uint64_t length = peek_block_length(head, first.kind, ctx);
      const Bytes bytes = read_range(p, offset, length);
      ParsedBlock pb = parse_block(bytes, ctx, first.kind);
      pb.info.file = static_cast<int>(f);
      pb.info.offset = offset;
      blocks.push_back(std::move(pb));
      offset += length;
    }
    if (offset != size) throw IoError(p.string() + ": trailing bytes after the last block");
  }
  return assemble(first, std::move(blocks), false);
}

FileSet read_output(const fs::path& path) {
  const fs::path prefix = prefix_from(path);
  const fs::path index = index_file_path(prefix);
  if (!fs::exists(index)) return scan_output(prefix);

  json doc;
  try {
    std::ifstream in(index);
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(index.string() + ": unreadable index: " + e.what());
  }
  try {
    if (doc.at("format") != "PICB") throw IoError(index.string() + ": not a PICB index");
    const auto files = doc.at("files").get<std::vector<std::string>>();
    std::vector<FileHeader> headers;
    for (std::size_t f = 0; f < files.size(); ++f) {
      const fs::path p = data_file_path(prefix, static_cast<int>(f));
      if (p.filename().string() != files[f]) throw IoError(index.string() + ": file list mismatch");
      headers.push_back(decode_header(read_range(p, 0, kFileHeaderBytes)));
      check_same_output(headers.front(), headers.back(), p);
      if (headers.back().file_count != files.size()) throw IoError(p.string() + ": file count disagrees with the index");
    }
    if (headers.empty()) throw IoError(index.string() + ": index lists no files");
    std::vector<ParsedBlock> blocks;
    std::vector<std::uint32_t> per_file(files.size(), 0);
    for (const auto& jb : doc.at("blocks")) {
      const int f = jb.at("file").get<int>();
      if (f < 0 || f >= static_cast<int>(files.size())) throw IoError(index.string() + ": block refers to unknown file");
      const auto offset = jb.at("offset").get<std::uint64_t>();
      const auto length = jb.at("length").get<std::uint64_t>();
      const fs::path p = data_file_path(prefix, f);
      const std::string ctx = p.string() + " block at offset " + std::to_string(offset);
      ParsedBlock pb = parse_block(read_range(p, offset, length), ctx, headers.front().kind);
      if (pb.info.rank != jb.at("rank").get<int>()) throw IoError(ctx + ": rank disagrees with the index");
      pb.info.file = f;
      pb.info.offset = offset;
      per_file[f] += 1;
      blocks.push_back(std::move(pb));
    }
    for (std::size_t f = 0; f < files.size(); ++f) {
      if (per_file[f] != headers[f].block_count) {
        throw IoError(data_file_path(prefix, static_cast<int>(f)).string() +
                      ": block count disagrees with the index");
      }
    }
    return assemble(headers.front(), std::move(blocks), true);
  } catch (const json::exception& e) {
    throw IoError(index.string() + ": malformed index: " + e.what());
  }
}

IndexBox region_box(const OutputRegion& region, const Int3& cells, const Real3& d) {
  IndexBox box{{0, 0, 0}, cells};
  auto index_at = [&](int a, double x) {
    return std::clamp(static_cast<int>(std::floor(x / d[a])), 0, cells[a] - 1);
  };
  switch (region.kind) {
    case RegionKind::Full:
      break;
    case RegionKind::Plane: {
      const int i = index_at(region.axis, region.coordinate);
      box.lo[region.axis] = i;
      box.hi[region.axis] = i + 1;
      break;
    }
    case RegionKind::Box:
      for (int a = 0; a < 3; ++a) {
        box.lo[a] = index_at(a, region.lo[a]);
        box.hi[a] = std::clamp(static_cast<int>(std::ceil(region.hi[a] / d[a])), box.lo[a] + 1, cells[a]);
      }
      break;
    case RegionKind::Line:
      for (int a : region.fixed_axes) {
        const int i = index_at(a, region.fixed_coordinates[a]);
        box.lo[a] = i;
        box.hi[a] = i + 1;
      }
      break;
  }
  return box;
}

Emission should_emit(const OutputRequest& request, const RunPlan& plan, const DomainTopology& topo,
                     std::uint64_t step, double time) {
  Emission e;
  e.emit = time >= request.t_start && time <= request.t_end &&
           step % static_cast<std::uint64_t>(request.every_n_steps) == 0;
  e.region = region_box(request.region, plan.config.grid_cells, plan.cell_size);
  e.clip = e.region.intersect(topo.owned_box());
  return e;
}

GridBlock make_grid_block(std::span<const Array3* const> arrays, const IndexBox& clip,
                          const DomainTopology& topo, const IoTopology& io) {
  GridBlock b;
  b.rank = topo.rank();
  b.group = io.group_of(topo.rank());
  b.box = clip;
  b.components = static_cast<int>(arrays.size());
  if (clip.empty()) {
    b.box = IndexBox{};
    return b;
  }
  const Int3 o = topo.origin();
  b.values.reserve(arrays.size() * product(clip.count()));
  for (const Array3* a : arrays) {
    for (int i = clip.lo[0]; i < clip.hi[0]; ++i)
      for (int j = clip.lo[1]; j < clip.hi[1]; ++j)
        for (int k = clip.lo[2]; k < clip.hi[2]; ++k) b.values.push_back((*a)(i - o[0], j - o[1], k - o[2]));
  }
  return b;
}

ParticleBlock make_particle_block(const ParticleBuffer& buf, int species, const IndexBox& region,
                                  const YeeLayout& layout, const DomainTopology& topo,
                                  const IoTopology& io) {
  ParticleBlock b;
  b.rank = topo.rank();
  b.group = io.group_of(topo.rank());
  b.species = species;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    bool inside = true;
    for (int a = 0; a < 3 && inside; ++a) {
      const int c = static_cast<int>(std::floor(buf.get(i, a) / layout.cell_size[a]));
      inside = c >= region.lo[a] && c < region.hi[a];
    }
    if (!inside) continue;
    const ParticleRecord r = buf.record(i);
    b.records.insert(b.records.end(), r.begin(), r.end());
  }
  return b;
}

}  // namespace pic
