#include "pic/fields.hpp"

#include <algorithm>
#include <cmath>

namespace pic {

Array3::Array3(const Int3& interior, int ghost, double value)
    : n_(interior),
      g_(ghost),
      sy_(interior[1] + 2 * ghost),
      sz_(interior[2] + 2 * ghost),
      data_(static_cast<std::size_t>(interior[0] + 2 * ghost) * sy_ * sz_, value) {}

void Array3::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double Array3::interior_sum() const {
  double s = 0.0;
  for (int i = 0; i < n_[0]; ++i)
    for (int j = 0; j < n_[1]; ++j)
      for (int k = 0; k < n_[2]; ++k) s += (*this)(i, j, k);
  return s;
}

double Array3::interior_max_abs() const {
  double m = 0.0;
  for (int i = 0; i < n_[0]; ++i)
    for (int j = 0; j < n_[1]; ++j)
      for (int k = 0; k < n_[2]; ++k) m = std::max(m, std::abs((*this)(i, j, k)));
  return m;
}

FieldLattice::FieldLattice(const YeeLayout& l, const Int3& interior, int ghost) : layout(l) {
  for (int c = 0; c < 3; ++c) {
    E[c] = Array3(interior, ghost);
    B[c] = Array3(interior, ghost);
    J[c] = Array3(interior, ghost);
  }
  rho = Array3(interior, ghost);
}

void advance_b_half(FieldLattice& lat, double dt) {
  const Int3 n = lat.interior();
  const double h = 0.5 * dt;
  const double cx = h / lat.layout.cell_size[0];
  const double cy = h / lat.layout.cell_size[1];
  const double cz = h / lat.layout.cell_size[2];
  auto& [ex, ey, ez] = lat.E;
  auto& [bx, by, bz] = lat.B;
  const auto sx = ex.stride(0);
  const auto sy = ex.stride(1);
  const double* Ex = ex.data().data();
  const double* Ey = ey.data().data();
  const double* Ez = ez.data().data();
  double* Bx = bx.data().data();
  double* By = by.data().data();
  double* Bz = bz.data().data();
  for (int i = 0; i < n[0]; ++i) {
    for (int j = 0; j < n[1]; ++j) {
      const auto row = ex.index(i, j, 0);
      for (int k = 0; k < n[2]; ++k) {
        const auto p = row + k;
        Bx[p] -= cy * (Ez[p + sy] - Ez[p]) - cz * (Ey[p + 1] - Ey[p]);
        By[p] -= cz * (Ex[p + 1] - Ex[p]) - cx * (Ez[p + sx] - Ez[p]);
        Bz[p] -= cx * (Ey[p + sx] - Ey[p]) - cy * (Ex[p + sy] - Ex[p]);
      }
    }
  }
}

void advance_e(FieldLattice& lat, double dt) {
  const Int3 n = lat.interior();
  const double cx = dt / lat.layout.cell_size[0];
  const double cy = dt / lat.layout.cell_size[1];
  const double cz = dt / lat.layout.cell_size[2];
  auto& [ex, ey, ez] = lat.E;
  const auto sx = ex.stride(0);
  const auto sy = ex.stride(1);
  double* Ex = ex.data().data();
  double* Ey = ey.data().data();
  double* Ez = ez.data().data();
  const double* Bx = lat.B[0].data().data();
  const double* By = lat.B[1].data().data();
  const double* Bz = lat.B[2].data().data();
  const double* Jx = lat.J[0].data().data();
  const double* Jy = lat.J[1].data().data();
  const double* Jz = lat.J[2].data().data();
  for (int i = 0; i < n[0]; ++i) {
    for (int j = 0; j < n[1]; ++j) {
      const auto row = ex.index(i, j, 0);
      for (int k = 0; k < n[2]; ++k) {
        const auto p = row + k;
        Ex[p] += cy * (Bz[p] - Bz[p - sy]) - cz * (By[p] - By[p - 1]) - dt * Jx[p];
        Ey[p] += cz * (Bx[p] - Bx[p - 1]) - cx * (Bz[p] - Bz[p - sx]) - dt * Jy[p];
        Ez[p] += cx * (By[p] - By[p - sx]) - cy * (Bx[p] - Bx[p - sy]) - dt * Jz[p];
      }
    }
  }
}

double field_energy(const FieldLattice& lat) {
  const Int3 n = lat.interior();
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < n[0]; ++i)
      for (int j = 0; j < n[1]; ++j)
        for (int k = 0; k < n[2]; ++k) {
          const double e = lat.E[c](i, j, k);
          const double b = lat.B[c](i, j, k);
          sum += e * e + b * b;
        }
  }
  return 0.5 * sum * lat.cell_volume();
}

Array3 edge_divergence(const std::array<Array3, 3>& v, const Real3& d) {
  const Int3 n = v[0].interior();
  Array3 out(n, 0);
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k) {
        out(i, j, k) = (v[0](i, j, k) - v[0](i - 1, j, k)) / d[0] +
                       (v[1](i, j, k) - v[1](i, j - 1, k)) / d[1] +
                       (v[2](i, j, k) - v[2](i, j, k - 1)) / d[2];
      }
  return out;
}

Array3 gauss_residual(const FieldLattice& lat) {
  Array3 out = edge_divergence(lat.E, lat.layout.cell_size);
  const Int3 n = lat.interior();
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k) out(i, j, k) -= lat.rho(i, j, k);
  return out;
}

Array3 div_b(const FieldLattice& lat) {
  const Int3 n = lat.interior();
  const Real3& d = lat.layout.cell_size;
  Array3 out(n, 0);
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k) {
        out(i, j, k) = (lat.B[0](i + 1, j, k) - lat.B[0](i, j, k)) / d[0] +
                       (lat.B[1](i, j + 1, k) - lat.B[1](i, j, k)) / d[1] +
                       (lat.B[2](i, j, k + 1) - lat.B[2](i, j, k)) / d[2];
      }
  return out;
}

}  // namespace pic
