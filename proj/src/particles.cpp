#include "pic/particles.hpp"

#include <cmath>
#include <random>

#include "pic/error.hpp"

namespace pic {

void ParticleBuffer::reserve(std::size_t n) {
  if (layout_ == Layout::AoS) {
    aos_.reserve(n * kAttrs);
  } else {
    for (auto& col : soa_) col.reserve(n);
  }
}

void ParticleBuffer::clear() {
  count_ = 0;
  aos_.clear();
  for (auto& col : soa_) col.clear();
}

void ParticleBuffer::push_back(const ParticleRecord& r) {
  if (layout_ == Layout::AoS) {
    aos_.insert(aos_.end(), r.begin(), r.end());
  } else {
    for (int a = 0; a < kAttrs; ++a) soa_[a].push_back(r[a]);
  }
  ++count_;
}

ParticleRecord ParticleBuffer::record(std::size_t i) const {
  ParticleRecord r;
  for (int a = 0; a < kAttrs; ++a) r[a] = get(i, a);
  return r;
}

void ParticleBuffer::set_record(std::size_t i, const ParticleRecord& r) {
  for (int a = 0; a < kAttrs; ++a) {
    if (layout_ == Layout::AoS) aos_[i * kAttrs + a] = r[a];
    else soa_[a][i] = r[a];
  }
}

double ParticleBuffer::get(std::size_t i, int attr) const {
  return layout_ == Layout::AoS ? aos_[i * kAttrs + attr] : soa_[attr][i];
}

std::vector<double> ParticleBuffer::raw() const {
  if (layout_ == Layout::AoS) return aos_;
  std::vector<double> out;
  out.reserve(count_ * kAttrs);
  for (const auto& col : soa_) out.insert(out.end(), col.begin(), col.end());
  return out;
}

std::vector<double> ParticleBuffer::to_records() const {
  if (layout_ == Layout::AoS) return aos_;
  std::vector<double> out(count_ * kAttrs);
  for (std::size_t i = 0; i < count_; ++i)
    for (int a = 0; a < kAttrs; ++a) out[i * kAttrs + a] = soa_[a][i];
  return out;
}

ParticleBuffer convert_layout(const ParticleBuffer& buf, Layout target) {
  ParticleBuffer out(target);
  out.count_ = buf.count_;
  if (buf.layout_ == target) {
    out.aos_ = buf.aos_;
    out.soa_ = buf.soa_;
  } else if (target == Layout::AoS) {
    out.aos_ = buf.to_records();
  } else {
    for (int a = 0; a < kAttrs; ++a) {
      out.soa_[a].resize(buf.count_);
      for (std::size_t i = 0; i < buf.count_; ++i) out.soa_[a][i] = buf.aos_[i * kAttrs + a];
    }
  }
  return out;
}

double kinetic_energy(const ParticleBuffer& buf, const Species& sp) {
  double sum = 0.0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const double g = lorentz_gamma(buf.get(i, PX), buf.get(i, PY), buf.get(i, PZ), sp.m);
    sum += buf.get(i, W) * sp.m * (g - 1.0);
  }
  return sum;
}

double total_charge(const ParticleBuffer& buf, const Species& sp) {
  double sum = 0.0;
  for (std::size_t i = 0; i < buf.size(); ++i) sum += sp.q * buf.get(i, W);
  return sum;
}

Vec3 total_momentum(const ParticleBuffer& buf) {
  Vec3 p;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const double w = buf.get(i, W);
    p = p + Vec3{buf.get(i, PX), buf.get(i, PY), buf.get(i, PZ)} * w;
  }
  return p;
}

Int3 sublattice(int n) {
  Int3 best{n, 1, 1};
  int best_spread = n;
  for (int a = 1; a <= n; ++a) {
    if (n % a) continue;
    for (int b = 1; b <= n / a; ++b) {
      if ((n / a) % b) continue;
      const int c = n / a / b;
      if (a < b || b < c) continue;
      const int spread = a - c;
      if (spread < best_spread) {
        best_spread = spread;
        best = {a, b, c};
      }
    }
  }
  return best;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer applied to a running combination
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ b);
}

namespace {

double uniform_pm1(std::mt19937_64& rng) {
  // 53-bit mantissa from the raw output; avoids library-specific distributions
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

double gaussian(std::mt19937_64& rng) {
  // Box-Muller on (0,1]
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

ParticleBuffer init_species(const SpeciesSpec& spec, int species_index, const DomainTopology& topo,
                            const YeeLayout& layout, std::uint64_t seed, Layout storage) {
  if (spec.init == InitKind::TwoStream && spec.particles_per_cell % 2 != 0) {
    throw ConfigError("two_stream requires an even particles_per_cell");
  }
  const bool two_stream = spec.init == InitKind::TwoStream;
  const int sites = two_stream ? spec.particles_per_cell / 2 : spec.particles_per_cell;
  const Int3 sub = sublattice(sites);
  const Real3& d = layout.cell_size;
  const double weight = spec.density * d[0] * d[1] * d[2] / spec.particles_per_cell;
  const Int3 gc = topo.global_cells();
  const IndexBox owned = topo.owned_box();

  ParticleBuffer buf(storage);
  buf.reserve(static_cast<std::size_t>(product(topo.local_cells())) * spec.particles_per_cell);
  for (int i = owned.lo[0]; i < owned.hi[0]; ++i) {
    for (int j = owned.lo[1]; j < owned.hi[1]; ++j) {
      for (int k = owned.lo[2]; k < owned.hi[2]; ++k) {
        const std::uint64_t cell = (static_cast<std::uint64_t>(i) * gc[1] + j) * gc[2] + k;
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(species_index), cell));
        for (int a = 0; a < sub[0]; ++a) {
          for (int b = 0; b < sub[1]; ++b) {
            for (int c = 0; c < sub[2]; ++c) {
              const double x = (i + (a + 0.5) / sub[0]) * d[0];
              const double y = (j + (b + 0.5) / sub[1]) * d[1];
              const double z = (k + (c + 0.5) / sub[2]) * d[2];
              const int copies = two_stream ? 2 : 1;
              for (int beam = 0; beam < copies; ++beam) {
                double px = 0.0, py = 0.0, pz = 0.0;
                if (two_stream) {
                  px = (beam == 0 ? 1.0 : -1.0) * spec.drift_momentum;
                  if (spec.perturbation != 0.0) px += spec.perturbation * uniform_pm1(rng);
                }
                if (spec.thermal_momentum > 0.0) {
                  px += spec.thermal_momentum * gaussian(rng);
                  py += spec.thermal_momentum * gaussian(rng);
                  pz += spec.thermal_momentum * gaussian(rng);
                }
                buf.push_back({x, y, z, px, py, pz, weight});
              }
            }
          }
        }
      }
    }
  }
  return buf;
}

}  // namespace pic
