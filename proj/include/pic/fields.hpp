#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "pic/grid.hpp"
#include "pic/types.hpp"

namespace pic {

/// Scalar array over a subdomain's interior plus `ghost` layers on every side,
/// addressed by local index in [-ghost, n + ghost). z is the fastest index.
class Array3 {
 public:
  Array3() = default;
  Array3(const Int3& interior, int ghost, double value = 0.0);

  const Int3& interior() const { return n_; }
  int ghost() const { return g_; }
  Int3 padded() const { return {n_[0] + 2 * g_, n_[1] + 2 * g_, n_[2] + 2 * g_}; }

  std::ptrdiff_t index(int i, int j, int k) const {
    return (static_cast<std::ptrdiff_t>(i + g_) * sy_ + (j + g_)) * sz_ + (k + g_);
  }
  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

  std::ptrdiff_t stride(int axis) const {
    return axis == 0 ? static_cast<std::ptrdiff_t>(sy_) * sz_ : (axis == 1 ? sz_ : 1);
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  void fill(double v);

  /// Sum of the interior values only.
  double interior_sum() const;
  double interior_max_abs() const;

  bool operator==(const Array3&) const = default;

 private:
  Int3 n_{0, 0, 0};
  int g_ = 0;
  int sy_ = 0;  // padded extent along y
  int sz_ = 0;  // padded extent along z
  std::vector<double> data_;
};

/// E, B and J on one subdomain's Yee lattice, plus nodal rho for diagnostics.
///
/// B is held at integer time between the two half-step updates of a cycle,
/// so it is the average of its neighbouring half-step values.
struct FieldLattice {
  YeeLayout layout;
  std::array<Array3, 3> E;
  std::array<Array3, 3> B;
  std::array<Array3, 3> J;
  Array3 rho;

  FieldLattice() = default;
  FieldLattice(const YeeLayout& layout, const Int3& interior, int ghost);

  const Int3& interior() const { return rho.interior(); }
  int ghost() const { return rho.ghost(); }
  double cell_volume() const {
    return layout.cell_size[0] * layout.cell_size[1] * layout.cell_size[2];
  }
};

/// B <- B - (dt/2) curl E over the interior. Needs one layer of current E ghosts.
void advance_b_half(FieldLattice& lat, double dt);

/// E <- E + dt (curl B - J) over the interior. Needs one layer of current B ghosts.
void advance_e(FieldLattice& lat, double dt);

/// Interior electromagnetic energy, 1/2 sum (E^2 + B^2) dV.
double field_energy(const FieldLattice& lat);

/// Discrete div E - rho at interior nodes (interior-shaped, no ghosts).
Array3 gauss_residual(const FieldLattice& lat);

/// Discrete div B at interior cell centres.
Array3 div_b(const FieldLattice& lat);

/// Node-centred divergence of an edge-staggered vector (E or J layout).
Array3 edge_divergence(const std::array<Array3, 3>& v, const Real3& cell_size);

}  // namespace pic
