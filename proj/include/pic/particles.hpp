#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pic/config.hpp"
#include "pic/grid.hpp"

namespace pic {

/// Seven doubles per macro-particle, in this order.
enum Attr : int { X = 0, Y, Z, PX, PY, PZ, W };
inline constexpr int kAttrs = 7;

using ParticleRecord = std::array<double, kAttrs>;

struct Species {
  std::string name;
  double q = -1.0;
  double m = 1.0;
};

/// Record-major view: [x1,y1,z1,px1,py1,pz1,w1, x2,...].
struct AosView {
  double* base;
  double& operator()(std::size_t i, int a) const { return base[i * kAttrs + a]; }
};

/// Attribute-major view: one contiguous array per attribute.
struct SoaView {
  std::array<double*, kAttrs> cols;
  double& operator()(std::size_t i, int a) const { return cols[a][i]; }
};

/// Macro-particle storage for one species on one rank, in either layout.
/// Logical content (the ordered list of 7-tuples) does not depend on layout.
class ParticleBuffer {
 public:
  explicit ParticleBuffer(Layout layout = Layout::SoA) : layout_(layout) {}

  Layout layout() const { return layout_; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  void reserve(std::size_t n);
  void clear();
  void push_back(const ParticleRecord& r);
  ParticleRecord record(std::size_t i) const;
  void set_record(std::size_t i, const ParticleRecord& r);
  double get(std::size_t i, int attr) const;

  /// Keeps particles for which keep(i) is true, preserving their order.
  template <typename Pred>
  void retain(Pred&& keep);

  /// Calls f(view) with the layout-specific accessor.
  template <typename F>
  decltype(auto) visit(F&& f) {
    if (layout_ == Layout::AoS) return f(AosView{aos_.data()});
    SoaView v;
    for (int a = 0; a < kAttrs; ++a) v.cols[a] = soa_[a].data();
    return f(v);
  }

  /// Raw bytes of the active layout, for bitwise comparisons.
  std::vector<double> raw() const;
  /// All records as a record-major array regardless of layout.
  std::vector<double> to_records() const;

  friend ParticleBuffer convert_layout(const ParticleBuffer& buf, Layout target);

 private:
  Layout layout_;
  std::size_t count_ = 0;
  std::vector<double> aos_;
  std::array<std::vector<double>, kAttrs> soa_;
};

ParticleBuffer convert_layout(const ParticleBuffer& buf, Layout target);

template <typename Pred>
void ParticleBuffer::retain(Pred&& keep) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < count_; ++i) {
    if (!keep(i)) continue;
    if (out != i) {
      if (layout_ == Layout::AoS) {
        for (int a = 0; a < kAttrs; ++a) aos_[out * kAttrs + a] = aos_[i * kAttrs + a];
      } else {
        for (int a = 0; a < kAttrs; ++a) soa_[a][out] = soa_[a][i];
      }
    }
    ++out;
  }
  count_ = out;
  if (layout_ == Layout::AoS) {
    aos_.resize(count_ * kAttrs);
  } else {
    for (auto& col : soa_) col.resize(count_);
  }
}

/// Lorentz factor for momentum p (per unit weight, in m_e c) and mass m.
inline double lorentz_gamma(double px, double py, double pz, double m) {
  return std::sqrt(1.0 + (px * px + py * py + pz * pz) / (m * m));
}

/// Sum of w m (gamma - 1) over the buffer.
double kinetic_energy(const ParticleBuffer& buf, const Species& sp);

/// Sum of q w over the buffer.
double total_charge(const ParticleBuffer& buf, const Species& sp);

/// Sum of w p over the buffer.
Vec3 total_momentum(const ParticleBuffer& buf);

/// Sites of a regular sub-lattice of `n` points per cell, as factors (a,b,c)
/// with a*b*c = n, the largest factor on x.
Int3 sublattice(int n);

/// Loads the species into the rank's owned cells. Every cell draws from its own
/// generator seeded by (seed, species index, global cell index), so the global
/// particle set does not depend on the decomposition.
///
/// two_stream places particles_per_cell/2 lattice sites per cell, each holding
/// one particle at +p0 and one at -p0 along x (plus the seeded kick on px and
/// optional thermal spread). uniform places particles_per_cell sites with the
/// thermal spread only. Weights make sum(w) per cell equal density * volume.
ParticleBuffer init_species(const SpeciesSpec& spec, int species_index, const DomainTopology& topo,
                            const YeeLayout& layout, std::uint64_t seed, Layout storage);

/// Deterministic 64-bit mix of the inputs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace pic
