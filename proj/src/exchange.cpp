#include "pic/exchange.hpp"

#include <cmath>
#include <sstream>

#include "pic/error.hpp"

namespace pic {

namespace {

/// Index range along each axis; `axis` is restricted to [lo, hi), the others
/// span the padded array.
struct Slab {
  Int3 lo;
  Int3 hi;
};

Slab make_slab(const Array3& a, int axis, int lo, int hi) {
  const int g = a.ghost();
  const Int3 n = a.interior();
  Slab s{{-g, -g, -g}, {n[0] + g, n[1] + g, n[2] + g}};
  s.lo[axis] = lo;
  s.hi[axis] = hi;
  return s;
}

template <typename F>
void for_slab(const Slab& s, F&& f) {
  for (int i = s.lo[0]; i < s.hi[0]; ++i)
    for (int j = s.lo[1]; j < s.hi[1]; ++j)
      for (int k = s.lo[2]; k < s.hi[2]; ++k) f(i, j, k);
}

std::vector<double> pack(std::span<Array3* const> arrays, int axis, int lo, int hi) {
  std::vector<double> out;
  for (const Array3* a : arrays) {
    for_slab(make_slab(*a, axis, lo, hi), [&](int i, int j, int k) { out.push_back((*a)(i, j, k)); });
  }
  return out;
}

template <typename Op>
void unpack(std::span<Array3* const> arrays, int axis, int lo, int hi, const std::vector<double>& in,
            Op&& op) {
  std::size_t p = 0;
  for (Array3* a : arrays) {
    for_slab(make_slab(*a, axis, lo, hi), [&](int i, int j, int k) {
      if (p >= in.size()) throw TransportError("halo message shorter than its slab");
      op((*a)(i, j, k), in[p++]);
    });
  }
  if (p != in.size()) throw TransportError("halo message longer than its slab");
}

void zero(std::span<Array3* const> arrays, int axis, int lo, int hi) {
  for (Array3* a : arrays) {
    for_slab(make_slab(*a, axis, lo, hi), [&](int i, int j, int k) { (*a)(i, j, k) = 0.0; });
  }
}

// Tag ids: direction of travel, 2 * axis + (0 toward -, 1 toward +).
constexpr std::uint32_t toward_minus(int axis) { return 2u * axis; }
constexpr std::uint32_t toward_plus(int axis) { return 2u * axis + 1u; }

}  // namespace

void exchange_field_halos(std::span<Array3* const> arrays, const DomainTopology& topo,
                          Communicator& comm) {
  if (arrays.empty()) return;
  ScopedRegion region(comm.profiler(), "exchange.halo", RegionClass::Com);
  const int g = arrays.front()->ghost();
  const Int3 n = arrays.front()->interior();
  for (int a = 0; a < 3; ++a) {
    const int minus = topo.neighbor(a, -1);
    const int plus = topo.neighbor(a, +1);
    std::vector<double> low, high;
    {
      ScopedRegion pack_region(comm.profiler(), "exchange.pack", RegionClass::Usr);
      low = pack(arrays, a, 0, g);
      high = pack(arrays, a, n[a] - g, n[a]);
    }
    comm.send_values<double>(minus, {Channel::Halo, toward_minus(a)}, low);
    comm.send_values<double>(plus, {Channel::Halo, toward_plus(a)}, high);
    const auto from_minus = comm.recv_values<double>(minus, {Channel::Halo, toward_plus(a)});
    const auto from_plus = comm.recv_values<double>(plus, {Channel::Halo, toward_minus(a)});
    ScopedRegion unpack_region(comm.profiler(), "exchange.pack", RegionClass::Usr);
    unpack(arrays, a, -g, 0, from_minus, [](double& dst, double v) { dst = v; });
    unpack(arrays, a, n[a], n[a] + g, from_plus, [](double& dst, double v) { dst = v; });
  }
}

void reduce_current_halos(std::span<Array3* const> arrays, const DomainTopology& topo,
                          Communicator& comm) {
  if (arrays.empty()) return;
  {
    ScopedRegion region(comm.profiler(), "exchange.reduce", RegionClass::Com);
    const int g = arrays.front()->ghost();
    const Int3 n = arrays.front()->interior();
    for (int a = 0; a < 3; ++a) {
      const int minus = topo.neighbor(a, -1);
      const int plus = topo.neighbor(a, +1);
      std::vector<double> low, high;
      {
        ScopedRegion pack_region(comm.profiler(), "exchange.pack", RegionClass::Usr);
        low = pack(arrays, a, -g, 0);
        high = pack(arrays, a, n[a], n[a] + g);
        zero(arrays, a, -g, 0);
        zero(arrays, a, n[a], n[a] + g);
      }
      comm.send_values<double>(minus, {Channel::Current, toward_minus(a)}, low);
      comm.send_values<double>(plus, {Channel::Current, toward_plus(a)}, high);
      const auto from_minus = comm.recv_values<double>(minus, {Channel::Current, toward_plus(a)});
      const auto from_plus = comm.recv_values<double>(plus, {Channel::Current, toward_minus(a)});
      ScopedRegion unpack_region(comm.profiler(), "exchange.pack", RegionClass::Usr);
      unpack(arrays, a, 0, g, from_minus, [](double& dst, double v) { dst += v; });
      unpack(arrays, a, n[a] - g, n[a], from_plus, [](double& dst, double v) { dst += v; });
    }
  }
  exchange_field_halos(arrays, topo, comm);
}

double wrap_periodic(double x, double length, double inv_cell, int cells) {
  if (x >= length) x -= length;
  if (x < 0.0) x += length;
  // x within rounding of `length` folds onto the lower boundary
  if (std::floor(x * inv_cell) >= cells || x < 0.0) x = 0.0;
  return x;
}

void migrate_particles(std::span<ParticleBuffer* const> buffers, const DomainTopology& topo,
                       const YeeLayout& layout, Communicator& comm) {
  ScopedRegion region(comm.profiler(), "exchange.migrate", RegionClass::Com);
  const int g = topo.ghost_width();
  const Int3 cells = topo.global_cells();
  for (int a = 0; a < 3; ++a) {
    const double inv = 1.0 / layout.cell_size[a];
    const double length = layout.cell_size[a] * cells[a];
    const Extent ext = topo.extent(a);
    const int minus = topo.neighbor(a, -1);
    const int plus = topo.neighbor(a, +1);

    // Packet layout: per species [count, count x 7 doubles].
    std::vector<double> to_minus, to_plus;
    {
      ScopedRegion pack_region(comm.profiler(), "migrate.pack", RegionClass::Usr);
      for (ParticleBuffer* buf : buffers) {
        std::vector<double> out_minus, out_plus;
        std::vector<char> leaving(buf->size(), 0);
        for (std::size_t i = 0; i < buf->size(); ++i) {
          const double x = buf->get(i, a);
          const double cell = std::floor(x * inv);
          if (cell >= ext.start && cell < ext.end()) continue;
          if (cell < ext.start - g || cell >= ext.end() + g) {
            std::ostringstream msg;
            msg << "rank " << topo.rank() << ": particle at " << x << " on axis " << a
                << " is more than one ghost layer outside cells [" << ext.start << ", "
                << ext.end() << ")";
            throw SimulationError(msg.str());
          }
          ParticleRecord r = buf->record(i);
          const int dir = cell < ext.start ? -1 : 1;
          if (topo.at_global_boundary(a, dir)) r[a] = wrap_periodic(r[a], length, inv, cells[a]);
          auto& dst = dir < 0 ? out_minus : out_plus;
          dst.insert(dst.end(), r.begin(), r.end());
          leaving[i] = 1;
        }
        buf->retain([&](std::size_t i) { return leaving[i] == 0; });
        to_minus.push_back(static_cast<double>(out_minus.size() / kAttrs));
        to_minus.insert(to_minus.end(), out_minus.begin(), out_minus.end());
        to_plus.push_back(static_cast<double>(out_plus.size() / kAttrs));
        to_plus.insert(to_plus.end(), out_plus.begin(), out_plus.end());
      }
    }
    comm.send_values<double>(minus, {Channel::Migration, toward_minus(a)}, to_minus);
    comm.send_values<double>(plus, {Channel::Migration, toward_plus(a)}, to_plus);
    const auto from_minus = comm.recv_values<double>(minus, {Channel::Migration, toward_plus(a)});
    const auto from_plus = comm.recv_values<double>(plus, {Channel::Migration, toward_minus(a)});

    ScopedRegion unpack_region(comm.profiler(), "migrate.pack", RegionClass::Usr);
    for (const auto* packet : {&from_minus, &from_plus}) {
      std::size_t p = 0;
      for (ParticleBuffer* buf : buffers) {
        if (p >= packet->size()) throw TransportError("migration packet truncated");
        const auto count = static_cast<std::size_t>((*packet)[p++]);
        if (p + count * kAttrs > packet->size()) throw TransportError("migration packet truncated");
        for (std::size_t i = 0; i < count; ++i) {
          ParticleRecord r;
          for (int c = 0; c < kAttrs; ++c) r[c] = (*packet)[p++];
          buf->push_back(r);
        }
      }
      if (p != packet->size()) throw TransportError("migration packet has trailing data");
    }
  }
}

}  // namespace pic
