#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace pic {

using Int3 = std::array<int, 3>;
using Real3 = std::array<double, 3>;

inline constexpr int kDims = 3;

/// Small value type for momenta and fields at a particle.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline constexpr std::int64_t product(const Int3& n) {
  return std::int64_t{n[0]} * n[1] * n[2];
}

}  // namespace pic
