#include <doctest.h>

#include <fstream>

#include "pic/error.hpp"
#include "pic/output.hpp"
#include "pic/simulation.hpp"
#include "support.hpp"

using namespace pic;
namespace fs = std::filesystem;

namespace {

RunOptions quiet() {
  RunOptions o;
  o.write_outputs = false;
  o.collect_state = true;
  return o;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("vacuum with zero fields stays exactly zero") {
  SimulationConfig c = testing::two_stream({8, 8, 8}, {2, 2, 2}, 2, 10);
  c.species.clear();
  c.n_ranks = 8;
  const auto r = run_world(resolve(c), quiet());
  CHECK(r.steps_completed == 10);
  REQUIRE(r.state.has_value());
  for (const auto* g : {&r.state->E, &r.state->B, &r.state->J})
    for (const auto& a : *g)
      for (double v : a) REQUIRE(v == 0.0);
}

TEST_CASE("a cold plasma at rest stays quiescent") {
  // no momentum means no current, so the fields never leave zero
  SimulationConfig c = testing::two_stream({8, 4, 4}, {2, 1, 1}, 4, 20);
  c.species[0].init = InitKind::Uniform;
  c.species[0].drift_momentum = 0.0;
  c.species[0].perturbation = 0.0;
  const auto r = run_world(resolve(c), quiet());
  for (const auto& a : r.state->J)
    for (double v : a) REQUIRE(v == 0.0);
  for (const auto& a : r.state->E)
    for (double v : a) REQUIRE(v == 0.0);
  for (const auto& h : r.history) CHECK(h.kinetic_energy == 0.0);
}

TEST_CASE("reruns are bitwise identical, with and without scheduling jitter") {
  SimulationConfig c = testing::two_stream({8, 8, 8}, {2, 2, 2}, 2, 8);
  c.n_ranks = 8;
  const RunPlan plan = resolve(c);
  RunOptions a = quiet();
  RunOptions b = quiet();
  b.jitter_seed = 99;
  const auto r1 = run_world(plan, a);
  const auto r2 = run_world(plan, b);
  CHECK(r1.state->E == r2.state->E);
  CHECK(r1.state->B == r2.state->B);
  CHECK(r1.state->particles == r2.state->particles);
  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i)
    CHECK(r1.history[i].total_energy() == r2.history[i].total_energy());
}

TEST_CASE("1 rank and 8 ranks agree to rounding") {
  SimulationConfig c = testing::two_stream({8, 8, 8}, {2, 2, 2}, 2, 10);
  const auto one = run_world(resolve(c), quiet());
  c.n_ranks = 8;
  const auto eight = run_world(resolve(c), quiet());
  double worst = 0.0;
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < one.state->E[k].size(); ++i)
      worst = std::max(worst, std::abs(one.state->E[k][i] - eight.state->E[k][i]));
  CHECK(worst <= 1e-12);
  const auto p1 = testing::sorted_records(one.state->particles[0]);
  const auto p8 = testing::sorted_records(eight.state->particles[0]);
  REQUIRE(p1.size() == p8.size());
}

TEST_CASE("conservation diagnostics are recorded per step") {
  SimulationConfig c = testing::two_stream({16, 4, 4}, {4, 1, 1}, 4, 20);
  c.n_ranks = 2;
  RunOptions o = quiet();
  o.check_conservation = true;
  o.check_particle_count = true;
  const auto r = run_world(resolve(c), o);
  REQUIRE(r.history.size() == 20);
  CHECK(r.max_continuity_residual < 1e-10);
  CHECK(r.max_div_b < 1e-12);
  CHECK(r.max_gauss_drift < 1e-10);
  CHECK(r.history.back().particles == 16 * 4 * 4 * 4);
}

TEST_CASE("a raised stop flag ends the run early, cleanly") {
  SimulationConfig c = testing::two_stream({8, 4, 4}, {2, 1, 1}, 2, 1000);
  c.n_ranks = 2;
  std::atomic<bool> stop{true};
  RunOptions o = quiet();
  o.stop_flag = &stop;
  const auto r = run_world(resolve(c), o);
  CHECK(r.stopped);
  CHECK(r.steps_completed == 0);
}

TEST_CASE("outputs are emitted on schedule and read back") {
  testing::TempDir dir("sim");
  SimulationConfig c = testing::two_stream({8, 8, 8}, {2, 2, 2}, 2, 4);
  c.n_ranks = 8;
  c.io.group_size = 2;
  c.io.files = 2;
  c.output_dir = dir.path().string();
  OutputRequest e;
  e.quantity = Quantity::E;
  e.every_n_steps = 2;
  OutputRequest d;
  d.quantity = Quantity::Density;
  d.species = "electrons";
  d.every_n_steps = 4;
  OutputRequest p;
  p.quantity = Quantity::PhaseSpace;
  p.species = "electrons";
  p.every_n_steps = 4;
  p.t_start = 0.01;
  c.outputs = {e, d, p};
  RunOptions o;
  o.collect_state = true;
  o.write_reports = true;
  o.provenance = serialize_config(c);
  const auto r = run_world(resolve(c), o);
  // E at 0, 2, 4; density at 0, 4; particles at 4 only
  REQUIRE(r.outputs.size() == 6);
  const auto last = read_output(dir / "00_E_000004");
  REQUIRE(last.grid.has_value());
  const auto& g = *last.grid;
  for (int comp = 0; comp < 3; ++comp)
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 8; ++k)
          REQUIRE(g.at(comp, i, j, k) == r.state->E[comp][(i * 8 + j) * 8 + k]);
  const auto dens = read_output(dir / "01_density_electrons_000000");
  double sum = 0.0;
  for (double v : dens.grid->values) sum += v;
  CHECK(sum * (0.25 * 0.25 * 0.25) == doctest::Approx(8.0).epsilon(1e-12));  // density 1 over a 2^3 box
  const auto parts = read_output(dir / "02_particle_phase_space_electrons_000004");
  CHECK(parts.particle_count() == 8 * 8 * 8 * 2);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(fs::exists(dir / "diagnostics.csv"));
}

TEST_CASE("failures on one rank surface with rank and step context") {
  // a step far beyond the Courant limit drives particles more than a cell
  SimulationConfig c = testing::two_stream({8, 4, 4}, {2, 1, 1}, 2, 50);
  c.species[0].drift_momentum = 50.0;
  c.n_ranks = 2;
  RunPlan plan = resolve(c);
  plan.dt *= 20;
  try {
    run_world(plan, quiet());
    FAIL("expected a failure");
  } catch (const SimulationError& e) {
    CHECK(std::string(e.what()).find("rank ") != std::string::npos);
    CHECK(std::string(e.what()).find("step ") != std::string::npos);
  }
}

TEST_CASE("loopback transport matches the threaded transport on one rank") {
  SimulationConfig c = testing::two_stream({8, 4, 4}, {2, 1, 1}, 2, 5);
  RunOptions a = quiet();
  RunOptions b = quiet();
  b.transport = TransportKind::Loopback;
  const auto r1 = run_world(resolve(c), a);
  const auto r2 = run_world(resolve(c), b);
  CHECK(r1.state->E == r2.state->E);
  CHECK(r1.state->particles == r2.state->particles);
}

}
