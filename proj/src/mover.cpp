#include "pic/mover.hpp"

#include <cmath>
#include <sstream>

#include "pic/error.hpp"

namespace pic {

LocalFrame::LocalFrame(const YeeLayout& layout, const Int3& origin_cells) {
  for (int a = 0; a < 3; ++a) {
    inv_cell[a] = 1.0 / layout.cell_size[a];
    origin[a] = static_cast<double>(origin_cells[a]);
  }
}

namespace {

inline double interpolate(const Array3& f, const CicWeights& wx, const CicWeights& wy,
                          const CicWeights& wz) {
  const double* d = f.data().data();
  const auto sx = f.stride(0);
  const auto sy = f.stride(1);
  const auto p = f.index(wx.i, wy.i, wz.i);
  const double z00 = wz.w0 * d[p] + wz.w1 * d[p + 1];
  const double z01 = wz.w0 * d[p + sy] + wz.w1 * d[p + sy + 1];
  const double z10 = wz.w0 * d[p + sx] + wz.w1 * d[p + sx + 1];
  const double z11 = wz.w0 * d[p + sx + sy] + wz.w1 * d[p + sx + sy + 1];
  return wx.w0 * (wy.w0 * z00 + wy.w1 * z01) + wx.w1 * (wy.w0 * z10 + wy.w1 * z11);
}

}  // namespace

GatheredFields gather_fields(const FieldLattice& lat, const Real3& u) {
  const CicWeights nx = cic(u[0]), ny = cic(u[1]), nz = cic(u[2]);
  const CicWeights hx = cic(u[0] - 0.5), hy = cic(u[1] - 0.5), hz = cic(u[2] - 0.5);
  GatheredFields g;
  g.e.x = interpolate(lat.E[0], hx, ny, nz);
  g.e.y = interpolate(lat.E[1], nx, hy, nz);
  g.e.z = interpolate(lat.E[2], nx, ny, hz);
  g.b.x = interpolate(lat.B[0], nx, hy, hz);
  g.b.y = interpolate(lat.B[1], hx, ny, hz);
  g.b.z = interpolate(lat.B[2], hx, hy, nz);
  return g;
}

Vec3 boris_push(const Vec3& p, const Vec3& e, const Vec3& b, double q, double m, double dt) {
  const double kick = 0.5 * q * dt;
  const Vec3 p_minus = p + e * kick;
  const double gamma = std::sqrt(1.0 + p_minus.norm2() / (m * m));
  const Vec3 t = b * (kick / (m * gamma));
  const Vec3 s = t * (2.0 / (1.0 + t.norm2()));
  const Vec3 p_prime = p_minus + p_minus.cross(t);
  const Vec3 p_plus = p_minus + p_prime.cross(s);
  return p_plus + e * kick;
}

Vec3 velocity(const Vec3& p, double m) { return p * (1.0 / std::sqrt(m * m + p.norm2())); }

Vec3 advance_position(const Vec3& x, const Vec3& p, double m, double dt, const Real3& cell_size) {
  const Vec3 dx = velocity(p, m) * dt;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dx[a]) > cell_size[a]) {
      std::ostringstream msg;
      msg << "particle displacement " << dx[a] << " exceeds the cell size " << cell_size[a]
          << " on axis " << a << " (CFL contract broken)";
      throw SimulationError(msg.str());
    }
  }
  return x + dx;
}

namespace {

/// Old and new 1D shape factors on the 3-node window starting at `base`.
struct Shape1D {
  int base = 0;
  double s0[3] = {0.0, 0.0, 0.0};
  double ds[3] = {0.0, 0.0, 0.0};
};

inline Shape1D shape_pair(double u0, double u1) {
  const CicWeights a = cic(u0);
  const CicWeights b = cic(u1);
  Shape1D s;
  s.base = std::min(a.i, b.i);
  double s1[3] = {0.0, 0.0, 0.0};
  const int o0 = a.i - s.base;
  const int o1 = b.i - s.base;
  s.s0[o0] = a.w0;
  s.s0[o0 + 1] = a.w1;
  s1[o1] = b.w0;
  s1[o1 + 1] = b.w1;
  for (int l = 0; l < 3; ++l) s.ds[l] = s1[l] - s.s0[l];
  return s;
}

}  // namespace

void deposit_current(FieldLattice& lat, const Real3& u0, const Real3& u1, double qw, double dt) {
  const Shape1D sx = shape_pair(u0[0], u1[0]);
  const Shape1D sy = shape_pair(u0[1], u1[1]);
  const Shape1D sz = shape_pair(u0[2], u1[2]);
  const Real3& d = lat.layout.cell_size;
  const double cx = qw / (d[1] * d[2] * dt);
  const double cy = qw / (d[0] * d[2] * dt);
  const double cz = qw / (d[0] * d[1] * dt);
  constexpr double third = 1.0 / 3.0;

  Array3& jx = lat.J[0];
  Array3& jy = lat.J[1];
  Array3& jz = lat.J[2];

  // Jx: running sum along x of -cx * Wx, for each (y, z) node of the window.
  for (int m = 0; m < 3; ++m) {
    for (int n = 0; n < 3; ++n) {
      const double transverse = sy.s0[m] * sz.s0[n] + 0.5 * sy.ds[m] * sz.s0[n] +
                                0.5 * sy.s0[m] * sz.ds[n] + third * sy.ds[m] * sz.ds[n];
      if (transverse == 0.0) continue;
      double acc = 0.0;
      for (int l = 0; l < 2; ++l) {
        acc -= cx * sx.ds[l] * transverse;
        jx(sx.base + l, sy.base + m, sz.base + n) += acc;
      }
    }
  }
  for (int l = 0; l < 3; ++l) {
    for (int n = 0; n < 3; ++n) {
      const double transverse = sx.s0[l] * sz.s0[n] + 0.5 * sx.ds[l] * sz.s0[n] +
                                0.5 * sx.s0[l] * sz.ds[n] + third * sx.ds[l] * sz.ds[n];
      if (transverse == 0.0) continue;
      double acc = 0.0;
      for (int m = 0; m < 2; ++m) {
        acc -= cy * sy.ds[m] * transverse;
        jy(sx.base + l, sy.base + m, sz.base + n) += acc;
      }
    }
  }
  for (int l = 0; l < 3; ++l) {
    for (int m = 0; m < 3; ++m) {
      const double transverse = sx.s0[l] * sy.s0[m] + 0.5 * sx.ds[l] * sy.s0[m] +
                                0.5 * sx.s0[l] * sy.ds[m] + third * sx.ds[l] * sy.ds[m];
      if (transverse == 0.0) continue;
      double acc = 0.0;
      for (int n = 0; n < 2; ++n) {
        acc -= cz * sz.ds[n] * transverse;
        jz(sx.base + l, sy.base + m, sz.base + n) += acc;
      }
    }
  }
}

void deposit_charge(Array3& rho, const Real3& u, double qw, double cell_volume) {
  const CicWeights wx = cic(u[0]), wy = cic(u[1]), wz = cic(u[2]);
  const double c = qw / cell_volume;
  const double ax[2] = {wx.w0, wx.w1};
  const double ay[2] = {wy.w0, wy.w1};
  const double az[2] = {wz.w0, wz.w1};
  for (int l = 0; l < 2; ++l)
    for (int m = 0; m < 2; ++m)
      for (int n = 0; n < 2; ++n) rho(wx.i + l, wy.i + m, wz.i + n) += c * ax[l] * ay[m] * az[n];
}

void deposit_charge(Array3& rho, const ParticleBuffer& buf, const Species& sp,
                    const LocalFrame& frame, double cell_volume) {
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const Real3 u = frame.to_local(buf.get(i, X), buf.get(i, Y), buf.get(i, Z));
    deposit_charge(rho, u, sp.q * buf.get(i, W), cell_volume);
  }
}

namespace {

template <typename View>
PushResult push_loop(View v, std::size_t count, const Species& sp, FieldLattice& lat,
                     const LocalFrame& frame, double dt) {
  const Real3& cell = lat.layout.cell_size;
  const double m = sp.m;
  double ke = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const Vec3 x{v(i, X), v(i, Y), v(i, Z)};
    const Vec3 p{v(i, PX), v(i, PY), v(i, PZ)};
    const double w = v(i, W);
    const Real3 u0 = frame.to_local(x.x, x.y, x.z);
    const GatheredFields f = gather_fields(lat, u0);
    const Vec3 pn = boris_push(p, f.e, f.b, sp.q, m, dt);
    const Vec3 xn = advance_position(x, pn, m, dt, cell);
    const Real3 u1 = frame.to_local(xn.x, xn.y, xn.z);
    deposit_current(lat, u0, u1, sp.q * w, dt);
    const double g0 = std::sqrt(1.0 + p.norm2() / (m * m));
    const double g1 = std::sqrt(1.0 + pn.norm2() / (m * m));
    ke += w * m * (0.5 * (g0 + g1) - 1.0);
    v(i, X) = xn.x;
    v(i, Y) = xn.y;
    v(i, Z) = xn.z;
    v(i, PX) = pn.x;
    v(i, PY) = pn.y;
    v(i, PZ) = pn.z;
  }
  return {ke};
}

}  // namespace

PushResult push_and_deposit(ParticleBuffer& buf, const Species& sp, FieldLattice& lat,
                            const LocalFrame& frame, double dt) {
  const std::size_t n = buf.size();
  return buf.visit([&](auto view) { return push_loop(view, n, sp, lat, frame, dt); });
}

void rewind_momenta(ParticleBuffer& buf, const Species& sp, const FieldLattice& lat,
                    const LocalFrame& frame, double dt) {
  const std::size_t n = buf.size();
  buf.visit([&](auto v) {
    for (std::size_t i = 0; i < n; ++i) {
      const Real3 u = frame.to_local(v(i, X), v(i, Y), v(i, Z));
      const GatheredFields f = gather_fields(lat, u);
      const Vec3 p = boris_push({v(i, PX), v(i, PY), v(i, PZ)}, f.e, f.b, sp.q, sp.m, -0.5 * dt);
      v(i, PX) = p.x;
      v(i, PY) = p.y;
      v(i, PZ) = p.z;
    }
    return 0;
  });
}

}  // namespace pic
