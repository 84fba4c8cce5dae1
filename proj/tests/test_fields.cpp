#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pic/exchange.hpp"
#include "pic/fields.hpp"
#include "support.hpp"

using namespace pic;

namespace {

/// A single periodic subdomain with loopback halo exchange.
struct Box {
  DomainTopology topo;
  FieldLattice lat;
  LoopbackTransport transport;
  Communicator comm{transport};

  Box(Int3 n, Real3 d) : topo({1, 1, 1}, n, 2, 0), lat(YeeLayout{d}, n, 2) {}

  void exchange(std::array<Array3, 3>& a) {
    Array3* p[] = {&a[0], &a[1], &a[2]};
    exchange_field_halos(p, topo, comm);
  }
  void sync() {
    exchange(lat.E);
    exchange(lat.B);
  }
  void step(double dt) {
    advance_b_half(lat, dt);
    exchange(lat.B);
    advance_e(lat, dt);
    exchange(lat.E);
    advance_b_half(lat, dt);
    exchange(lat.B);
  }
  template <typename F>
  void set(Array3& a, Component c, F&& f) {
    const Int3 n = lat.interior();
    for (int i = 0; i < n[0]; ++i)
      for (int j = 0; j < n[1]; ++j)
        for (int k = 0; k < n[2]; ++k) a(i, j, k) = f(lat.layout.position(c, {i, j, k}));
  }
};

double max_diff(const Array3& a, const Array3& b) {
  const Int3 n = a.interior();
  double m = 0.0;
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k) m = std::max(m, std::abs(a(i, j, k) - b(i, j, k)));
  return m;
}

/// Sets up a +x travelling plane wave Ey = Bz = sin(k x - w t) with B
/// started from the t = -dt/2 value, so the stored B is at t = 0.
void plane_wave(Box& b, double k, double w, double dt) {
  b.set(b.lat.E[1], Component::Ey, [&](Real3 x) { return std::sin(k * x[0]); });
  b.set(b.lat.B[2], Component::Bz, [&](Real3 x) { return std::sin(k * x[0] + 0.5 * w * dt); });
  b.sync();
  advance_b_half(b.lat, dt);
  b.exchange(b.lat.B);
}

}  // namespace

TEST_SUITE("fields") {

TEST_CASE("zero and uniform E leave B unchanged") {
  Box b({6, 5, 4}, {0.3, 0.2, 0.1});
  advance_b_half(b.lat, 0.05);
  CHECK(b.lat.B[0].interior_max_abs() == 0.0);
  for (int c = 0; c < 3; ++c) b.lat.E[c].fill(0.7 + c);
  advance_b_half(b.lat, 0.05);
  for (int c = 0; c < 3; ++c) CHECK(b.lat.B[c].interior_max_abs() == 0.0);
}

TEST_CASE("zero B and J leave E unchanged") {
  Box b({6, 5, 4}, {0.3, 0.2, 0.1});
  b.set(b.lat.E[0], Component::Ex, [](Real3 x) { return std::cos(x[1]); });
  b.sync();
  const Array3 before = b.lat.E[0];
  advance_e(b.lat, 0.05);
  CHECK(b.lat.E[0] == before);
}

TEST_CASE("constant J with B = 0 drives E = -J t") {
  Box b({4, 4, 4}, {0.5, 0.5, 0.5});
  const Real3 j{0.3, -0.2, 0.125};
  for (int c = 0; c < 3; ++c) b.lat.J[c].fill(j[c]);
  const double dt = 0.1;
  for (int n = 0; n < 100; ++n) b.step(dt);
  for (int c = 0; c < 3; ++c) {
    CHECK(b.lat.B[c].interior_max_abs() == 0.0);
    CHECK(b.lat.E[c](1, 2, 3) == doctest::Approx(-j[c] * 100 * dt).epsilon(1e-13));
  }
}

TEST_CASE("Faraday stencil: dBz/dt matches -k cos(kx) at second order") {
  std::vector<double> h, err;
  for (int n : {16, 32, 64, 128}) {
    const double dx = 2 * std::numbers::pi / n;
    Box b({n, 4, 4}, {dx, dx, dx});
    b.set(b.lat.E[1], Component::Ey, [](Real3 x) { return std::sin(x[0]); });
    b.sync();
    const double dt = 1e-3;
    advance_b_half(b.lat, dt);
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = b.lat.layout.position(Component::Bz, {i, 0, 0})[0];
      e = std::max(e, std::abs(b.lat.B[2](i, 1, 1) / (0.5 * dt) + std::cos(x)));
    }
    h.push_back(dx);
    err.push_back(e);
  }
  CHECK(testing::log_slope(h, err) >= 1.99);
}

TEST_CASE("plane wave follows the discrete Yee dispersion relation") {
  const int n = 32;
  const double dx = 0.25;
  Box b({n, 4, 4}, {dx, dx, dx});
  const double dt = 0.98 * yee_stable_dt({dx, dx, dx});
  const double k = 2 * std::numbers::pi / (n * dx) * 3;
  // sin(w dt / 2) / dt = sin(k dx / 2) / dx for propagation along x
  const double w = 2.0 / dt * std::asin(dt / dx * std::sin(0.5 * k * dx));
  plane_wave(b, k, w, dt);
  const int steps = static_cast<int>(std::round(2 * std::numbers::pi / w / dt));
  for (int s = 0; s < steps; ++s) b.step(dt);
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = i * dx;
    e = std::max(e, std::abs(b.lat.E[1](i, 2, 1) - std::sin(k * x - w * steps * dt)));
  }
  CHECK(e < 1e-12);
}

TEST_CASE("field energy of simple states") {
  Box b({4, 4, 4}, {0.25, 0.25, 0.25});
  CHECK(field_energy(b.lat) == 0.0);
  b.lat.E[0].fill(1.0);
  CHECK(field_energy(b.lat) == doctest::Approx(0.5).epsilon(1e-15));
  b.lat.B[2].fill(2.0);
  CHECK(field_energy(b.lat) == doctest::Approx(0.5 + 2.0).epsilon(1e-15));
}

TEST_CASE("updates are linear in the fields") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  auto random_box = [&] {
    auto b = std::make_unique<Box>(Int3{6, 6, 6}, Real3{0.2, 0.3, 0.25});
    for (auto* g : {&b->lat.E, &b->lat.B, &b->lat.J})
      for (auto& a : *g) b->set(a, Component::Node, [&](Real3) { return u(rng); });
    b->sync();
    return b;
  };
  auto b1 = random_box();
  auto b2 = random_box();
  const double alpha = 0.75, beta = -1.5;
  Box mix({6, 6, 6}, {0.2, 0.3, 0.25});
  for (int c = 0; c < 3; ++c) {
    for (auto [dst, s1, s2] : {std::tuple{&mix.lat.E[c], &b1->lat.E[c], &b2->lat.E[c]},
                               std::tuple{&mix.lat.B[c], &b1->lat.B[c], &b2->lat.B[c]},
                               std::tuple{&mix.lat.J[c], &b1->lat.J[c], &b2->lat.J[c]}}) {
      for (std::size_t i = 0; i < dst->data().size(); ++i)
        dst->data()[i] = alpha * s1->data()[i] + beta * s2->data()[i];
    }
  }
  const double dt = 0.05;
  for (int s = 0; s < 5; ++s) {
    b1->step(dt);
    b2->step(dt);
    mix.step(dt);
  }
  double e = 0.0;
  for (int c = 0; c < 3; ++c) {
    Array3 lin = b1->lat.E[c];
    for (std::size_t i = 0; i < lin.data().size(); ++i)
      lin.data()[i] = alpha * b1->lat.E[c].data()[i] + beta * b2->lat.E[c].data()[i];
    e = std::max(e, max_diff(lin, mix.lat.E[c]));
  }
  CHECK(e < 1e-13);
}

TEST_CASE("vacuum noise run stays bounded for 1e4 steps") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  Box b({8, 8, 8}, {0.5, 0.5, 0.5});
  for (auto* g : {&b.lat.E, &b.lat.B})
    for (auto& a : *g) b.set(a, Component::Node, [&](Real3) { return u(rng); });
  b.sync();
  const double dt = 0.98 * yee_stable_dt(b.lat.layout.cell_size);

  // Yee invariant: sum E^n . E^n + B^(n-1/2) . B^(n+1/2), B^n being their mean.
  auto invariant = [&] {
    FieldLattice ahead = b.lat;
    advance_b_half(ahead, dt);
    double s = 0.0;
    const Int3 n = b.lat.interior();
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
          for (int k = 0; k < n[2]; ++k) {
            const double bp = ahead.B[c](i, j, k);
            const double bm = 2 * b.lat.B[c](i, j, k) - bp;
            s += b.lat.E[c](i, j, k) * b.lat.E[c](i, j, k) + bm * bp;
          }
    return s;
  };
  const double w0 = invariant();
  const double e0 = field_energy(b.lat);
  double e_max = e0;
  for (int s = 0; s < 10000; ++s) {
    b.step(dt);
    e_max = std::max(e_max, field_energy(b.lat));
  }
  CHECK(invariant() / w0 <= 1 + 1e-6);
  CHECK(invariant() / w0 >= 1 - 1e-6);
  CHECK(e_max < 4 * e0);
  for (auto* g : {&b.lat.E, &b.lat.B})
    for (auto& a : *g) CHECK(std::isfinite(a.interior_max_abs()));
}

TEST_CASE("div B of a curl-generated field is zero to rounding") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Box b({8, 6, 5}, {0.3, 0.4, 0.5});
  for (auto& a : b.lat.E) b.set(a, Component::Node, [&](Real3) { return u(rng); });
  b.sync();
  for (int s = 0; s < 50; ++s) b.step(0.1);
  CHECK(div_b(b.lat).interior_max_abs() < 1e-13);
}

}
