#pragma once

#include "pic/fields.hpp"
#include "pic/grid.hpp"
#include "pic/particles.hpp"
#include "pic/types.hpp"

namespace pic {

/// Maps physical positions to local lattice coordinates of one subdomain:
/// u = x / dx - origin, so u in [0, n) on the owned cells.
struct LocalFrame {
  Real3 inv_cell{1.0, 1.0, 1.0};
  Real3 origin{0.0, 0.0, 0.0};

  LocalFrame() = default;
  LocalFrame(const YeeLayout& layout, const Int3& origin_cells);

  double to_local(int axis, double x) const { return x * inv_cell[axis] - origin[axis]; }
  Real3 to_local(double x, double y, double z) const {
    return {to_local(0, x), to_local(1, y), to_local(2, z)};
  }
};

/// Linear (cloud-in-cell) shape: node weights 1 - f and f for u = i + f.
struct CicWeights {
  int i = 0;
  double w0 = 1.0;
  double w1 = 0.0;
};

inline CicWeights cic(double u) {
  const double fl = std::floor(u);
  const double f = u - fl;
  return {static_cast<int>(fl), 1.0 - f, f};
}

struct GatheredFields {
  Vec3 e;
  Vec3 b;
};

/// Interpolates every staggered component with CIC weights taken at that
/// component's own Yee offsets. `u` is the local lattice position.
GatheredFields gather_fields(const FieldLattice& lat, const Real3& u);

/// Relativistic Boris step: half electric kick, magnetic rotation, half kick.
Vec3 boris_push(const Vec3& p, const Vec3& e, const Vec3& b, double q, double m, double dt);

/// Velocity p / sqrt(m^2 + p^2).
Vec3 velocity(const Vec3& p, double m);

/// x + v dt. Throws SimulationError if the displacement exceeds one cell on
/// any axis, since the halo and migration scheme relies on it.
Vec3 advance_position(const Vec3& x, const Vec3& p, double m, double dt, const Real3& cell_size);

/// Charge-conserving (Esirkepov) CIC deposit of one particle's move from local
/// position u0 to u1 into lat.J. `qw` is charge times weight. The move must be
/// shorter than one cell per axis.
void deposit_current(FieldLattice& lat, const Real3& u0, const Real3& u1, double qw, double dt);

/// Adds q w S(node) / V at the 8 CIC nodes around local position u.
void deposit_charge(Array3& rho, const Real3& u, double qw, double cell_volume);

/// Deposits the charge density of a whole buffer into rho (ghosts included;
/// reduce halos afterwards).
void deposit_charge(Array3& rho, const ParticleBuffer& buf, const Species& sp,
                    const LocalFrame& frame, double cell_volume);

struct PushResult {
  /// Kinetic energy time-centred on the step: mean of the values before and
  /// after the momentum update.
  double kinetic_energy = 0.0;
};

/// Gathers, pushes, moves and deposits every particle of a buffer, in index
/// order. Particles may end up to one cell outside the subdomain; migrate
/// afterwards.
PushResult push_and_deposit(ParticleBuffer& buf, const Species& sp, FieldLattice& lat,
                            const LocalFrame& frame, double dt);

/// Moves momenta from t = 0 to t = -dt/2 with a backward half Boris push in
/// the current fields.
void rewind_momenta(ParticleBuffer& buf, const Species& sp, const FieldLattice& lat,
                    const LocalFrame& frame, double dt);

}  // namespace pic
