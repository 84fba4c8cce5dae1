#include "pic/simulation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "pic/error.hpp"
#include "pic/exchange.hpp"
#include "pic/output.hpp"

namespace pic {

namespace fs = std::filesystem;

namespace {

constexpr Tag kStateFields{Channel::Io, 100};
constexpr Tag kStateParticles{Channel::Io, 101};

std::array<Array3*, 3> ptrs(std::array<Array3, 3>& a) { return {&a[0], &a[1], &a[2]}; }

/// max |a - b| over the interior of two interior-shaped arrays.
double max_abs_diff(const Array3& a, const Array3& b) {
  const Int3 n = a.interior();
  double m = 0.0;
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k) m = std::max(m, std::abs(a(i, j, k) - b(i, j, k)));
  return m;
}

std::string quantity_label(const OutputRequest& r) {
  std::string s(to_string(r.quantity));
  if (!r.species.empty()) s += ":" + r.species;
  return s;
}

}  // namespace

RankSimulation::RankSimulation(const RunPlan& plan, int rank, Communicator& comm,
                               const RunOptions& options)
    : plan_(plan),
      options_(options),
      comm_(comm),
      topo_(plan.rank_grid, plan.config.grid_cells, plan.ghost_width, rank),
      layout_{plan.cell_size},
      frame_(layout_, topo_.origin()),
      lat_(layout_, topo_.local_cells(), plan.ghost_width) {
  comm_.restrict_bulk_to(topo_.neighbor_set());
  const auto& cfg = plan.config;
  for (std::size_t s = 0; s < cfg.species.size(); ++s) {
    const auto& spec = cfg.species[s];
    species_.push_back({spec.name, spec.charge, spec.mass});
    buffers_.push_back(init_species(spec, static_cast<int>(s), topo_, layout_, cfg.rng_seed, cfg.layout));
  }
}

void RankSimulation::deposit_rho(Array3& rho, int species) const {
  rho.fill(0.0);
  const double vol = lat_.cell_volume();
  for (std::size_t s = 0; s < buffers_.size(); ++s) {
    if (species >= 0 && static_cast<int>(s) != species) continue;
    Species sp = species_[s];
    if (species >= 0) sp.q = 1.0;  // number density
    deposit_charge(rho, buffers_[s], sp, frame_, vol);
  }
  Array3* one[] = {&rho};
  reduce_current_halos(one, topo_, comm_);
}

void RankSimulation::initialize() {
  Profiler* prof = comm_.profiler();
  ScopedRegion region(prof, "initialize", RegionClass::Com);
  {
    ScopedRegion w(prof, "particles.rewind", RegionClass::Usr);
    for (std::size_t s = 0; s < buffers_.size(); ++s) {
      rewind_momenta(buffers_[s], species_[s], lat_, frame_, plan_.dt);
    }
  }
  if (options_.check_conservation) {
    deposit_rho(lat_.rho, -1);
    ScopedRegion w(prof, "diagnostics", RegionClass::Usr);
    gauss0_ = gauss_residual(lat_);
  }
  if (options_.check_particle_count) {
    std::int64_t n = 0;
    for (const auto& b : buffers_) n += static_cast<std::int64_t>(b.size());
    initial_count_ = comm_.sum(n);
  }
}

StepRecord RankSimulation::advance() {
  Profiler* prof = comm_.profiler();
  ScopedRegion region(prof, "step", RegionClass::Com);
  const double dt = plan_.dt;
  StepRecord rec;
  rec.step = step_;
  rec.time = time();

  double local_fe = 0.0;
  if (options_.record_history) {
    ScopedRegion w(prof, "diagnostics", RegionClass::Usr);
    local_fe = field_energy(lat_);
  }

  double local_ke = 0.0;
  {
    ScopedRegion w(prof, "particles.push", RegionClass::Usr);
    for (auto& j : lat_.J) j.fill(0.0);
    for (std::size_t s = 0; s < buffers_.size(); ++s) {
      local_ke += push_and_deposit(buffers_[s], species_[s], lat_, frame_, dt).kinetic_energy;
    }
  }
  auto J = ptrs(lat_.J);
  auto E = ptrs(lat_.E);
  auto B = ptrs(lat_.B);
  reduce_current_halos(J, topo_, comm_);

  {
    ScopedRegion w(prof, "fields.advance", RegionClass::Usr);
    advance_b_half(lat_, dt);
  }
  exchange_field_halos(B, topo_, comm_);
  {
    ScopedRegion w(prof, "fields.advance", RegionClass::Usr);
    advance_e(lat_, dt);
  }
  exchange_field_halos(E, topo_, comm_);
  {
    ScopedRegion w(prof, "fields.advance", RegionClass::Usr);
    advance_b_half(lat_, dt);
  }
  exchange_field_halos(B, topo_, comm_);

  std::vector<ParticleBuffer*> bufs;
  for (auto& b : buffers_) bufs.push_back(&b);
  migrate_particles(bufs, topo_, layout_, comm_);
  ++step_;

  if (options_.record_history) {
    const double v[2] = {local_fe, local_ke};
    const auto g = comm_.sum(std::span<const double>(v, 2));
    rec.field_energy = g[0];
    rec.kinetic_energy = g[1];
  }

  if (options_.check_conservation) {
    Array3 rho_prev = lat_.rho;
    deposit_rho(lat_.rho, -1);
    double local[3];
    {
      ScopedRegion w(prof, "diagnostics", RegionClass::Usr);
      const Array3 divj = edge_divergence(lat_.J, layout_.cell_size);
      const Int3 n = topo_.local_cells();
      double cont = 0.0;
      for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
          for (int k = 0; k < n[2]; ++k) {
            const double r = (lat_.rho(i, j, k) - rho_prev(i, j, k)) / dt + divj(i, j, k);
            cont = std::max(cont, std::abs(r));
          }
      local[0] = cont;
      local[1] = div_b(lat_).interior_max_abs();
      local[2] = max_abs_diff(gauss_residual(lat_), gauss0_);
    }
    rec.continuity_residual = comm_.max(local[0]);
    rec.div_b = comm_.max(local[1]);
    rec.gauss_drift = comm_.max(local[2]);
  }

  if (options_.check_particle_count || options_.record_history) {
    std::int64_t n = 0;
    for (const auto& b : buffers_) n += static_cast<std::int64_t>(b.size());
    rec.particles = comm_.sum(n);
    if (options_.check_particle_count && rec.particles != initial_count_) {
      throw SimulationError("global particle count changed from " + std::to_string(initial_count_) +
                            " to " + std::to_string(rec.particles) + " at step " +
                            std::to_string(step_));
    }
  }
  return rec;
}

fs::path RankSimulation::output_prefix(std::size_t request, std::uint64_t step) const {
  char name[96];
  const auto& r = plan_.config.outputs[request];
  std::string q(to_string(r.quantity));
  if (!r.species.empty()) q += "_" + r.species;
  std::snprintf(name, sizeof name, "%02zu_%s_%06llu", request, q.c_str(),
                static_cast<unsigned long long>(step));
  return fs::path(plan_.config.output_dir) / name;
}

std::vector<fs::path> RankSimulation::emit_outputs() {
  std::vector<fs::path> written;
  const auto& outputs = plan_.config.outputs;
  if (outputs.empty()) return written;
  Profiler* prof = comm_.profiler();
  ScopedRegion region(prof, "output", RegionClass::Com);
  const IoTopology& io = plan_.io;
  for (std::size_t r = 0; r < outputs.size(); ++r) {
    const auto& req = outputs[r];
    const Emission em = should_emit(req, plan_, topo_, step_, time());
    if (!em.emit) continue;
    int species = -1;
    for (std::size_t s = 0; s < species_.size(); ++s) {
      if (species_[s].name == req.species) species = static_cast<int>(s);
    }
    OutputDescriptor desc;
    desc.quantity = quantity_label(req);
    desc.region = em.region;
    desc.step = step_;
    desc.time = time();
    Bytes block;
    if (req.quantity == Quantity::PhaseSpace) {
      desc.kind = BlockKind::Particles;
      desc.components = kAttrs;
      ScopedRegion w(prof, "output.pack", RegionClass::Usr);
      block = encode_block(make_particle_block(buffers_[species], species, em.region, layout_, topo_, io));
    } else {
      desc.kind = BlockKind::Grid;
      Array3 density;
      std::vector<const Array3*> arrays;
      if (req.quantity == Quantity::Density) {
        density = Array3(topo_.local_cells(), plan_.ghost_width);
        deposit_rho(density, species);
        arrays.push_back(&density);
      } else {
        const auto& src = req.quantity == Quantity::E ? lat_.E : (req.quantity == Quantity::B ? lat_.B : lat_.J);
        for (const auto& a : src) arrays.push_back(&a);
      }
      desc.components = static_cast<int>(arrays.size());
      ScopedRegion w(prof, "output.pack", RegionClass::Usr);
      block = encode_block(make_grid_block(arrays, em.clip, topo_, io));
    }
    const fs::path prefix = output_prefix(r, step_);
    write_output(desc, block, io, comm_, prefix, options_.provenance);
    written.push_back(prefix);
  }
  return written;
}

std::optional<GlobalState> RankSimulation::gather_state() {
  ScopedRegion region(comm_.profiler(), "gather_state", RegionClass::Com);
  // Fields: interior values of E, B, J in component order.
  const Int3 n = topo_.local_cells();
  std::vector<double> mine;
  mine.reserve(9 * static_cast<std::size_t>(product(n)));
  for (const auto* group : {&lat_.E, &lat_.B, &lat_.J})
    for (const auto& a : *group)
      for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
          for (int k = 0; k < n[2]; ++k) mine.push_back(a(i, j, k));
  std::vector<std::vector<double>> my_particles;
  for (const auto& b : buffers_) my_particles.push_back(b.to_records());

  if (comm_.rank() != 0) {
    comm_.send_values<double>(0, kStateFields, mine);
    for (const auto& p : my_particles) comm_.send_values<double>(0, kStateParticles, p);
    return std::nullopt;
  }
  GlobalState g;
  g.cells = plan_.config.grid_cells;
  const auto total = static_cast<std::size_t>(product(g.cells));
  for (auto* group : {&g.E, &g.B, &g.J})
    for (auto& a : *group) a.assign(total, 0.0);
  g.particles.resize(buffers_.size());
  for (int r = 0; r < comm_.size(); ++r) {
    std::vector<double> vals = r == 0 ? mine : comm_.recv_values<double>(r, kStateFields);
    const DomainTopology t(plan_.rank_grid, g.cells, plan_.ghost_width, r);
    const Int3 o = t.origin();
    const Int3 m = t.local_cells();
    if (vals.size() != 9 * static_cast<std::size_t>(product(m))) throw SimulationError("state gather size mismatch");
    std::size_t p = 0;
    for (auto* group : {&g.E, &g.B, &g.J})
      for (auto& a : *group)
        for (int i = 0; i < m[0]; ++i)
          for (int j = 0; j < m[1]; ++j)
            for (int k = 0; k < m[2]; ++k) {
              a[(static_cast<std::size_t>(o[0] + i) * g.cells[1] + (o[1] + j)) * g.cells[2] + (o[2] + k)] = vals[p++];
            }
    for (std::size_t s = 0; s < buffers_.size(); ++s) {
      std::vector<double> recs = r == 0 ? my_particles[s] : comm_.recv_values<double>(r, kStateParticles);
      g.particles[s].insert(g.particles[s].end(), recs.begin(), recs.end());
    }
  }
  return g;
}

void write_history_csv(const std::vector<StepRecord>& history, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,time,field_energy,kinetic_energy,total_energy,continuity_residual,div_b,gauss_drift,particles\n";
  out.precision(17);
  for (const auto& r : history) {
    out << r.step << ',' << r.time << ',' << r.field_energy << ',' << r.kinetic_energy << ','
        << r.total_energy() << ',' << r.continuity_residual << ',' << r.div_b << ','
        << r.gauss_drift << ',' << r.particles << '\n';
  }
  if (!out) throw IoError("write to " + path.string() + " failed");
}

namespace {

struct RankOutcome {
  RankReport report;
  std::vector<StepRecord> history;
  std::optional<GlobalState> state;
  std::vector<fs::path> outputs;
  std::uint64_t steps = 0;
  bool stopped = false;
};

RankOutcome run_rank(const RunPlan& plan, const RunOptions& options, Transport& transport) {
  const int rank = transport.rank();
  Profiler prof(options.instrument, rank);
  prof.start();
  Communicator comm(transport, options.instrument ? &prof : nullptr);
  RankOutcome out;
  std::uint64_t at_step = 0;
  const auto context = [&] { return "rank " + std::to_string(rank) + ", step " + std::to_string(at_step) + ": "; };
  try {
    RankSimulation sim(plan, rank, comm, options);
    sim.initialize();
    const auto n_steps = static_cast<std::uint64_t>(plan.config.n_steps);
    for (;;) {
      if (options.write_outputs) {
        auto w = sim.emit_outputs();
        out.outputs.insert(out.outputs.end(), w.begin(), w.end());
      }
      if (sim.step() >= n_steps) break;
      if (options.stop_flag) {
        const double stop = comm.max(options.stop_flag->load() ? 1.0 : 0.0);
        if (stop > 0.0) {
          out.stopped = true;
          break;
        }
      }
      at_step = sim.step();
      StepRecord rec = sim.advance();
      if (options.record_history || options.check_conservation) out.history.push_back(rec);
    }
    out.steps = sim.step();
    if (options.collect_state) out.state = sim.gather_state();
  } catch (const IoError& e) {
    throw IoError(context() + e.what());
  } catch (const SimulationError& e) {
    throw SimulationError(context() + e.what());
  }
  prof.stop();
  out.report = prof.report();
  return out;
}

}  // namespace

RunResult run_world(const RunPlan& plan, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = plan.n_ranks;
  std::vector<RankOutcome> outcomes(n);

  if (options.transport == TransportKind::Loopback) {
    if (n != 1) throw ConfigError("the loopback transport supports exactly one rank");
    LoopbackTransport t;
    outcomes[0] = run_rank(plan, options, t);
  } else {
    Hub hub(n, options.jitter_seed);
    std::vector<std::unique_ptr<Transport>> endpoints;
    for (int r = 0; r < n; ++r) endpoints.push_back(hub.endpoint(r));
    std::mutex mu;
    std::exception_ptr first;       // the root cause
    std::exception_ptr first_any;   // any failure, transport aborts included
    std::vector<std::thread> workers;
    for (int r = 0; r < n; ++r) {
      workers.emplace_back([&, r] {
        try {
          outcomes[r] = run_rank(plan, options, *endpoints[r]);
        } catch (const TransportError& e) {
          std::lock_guard lock(mu);
          if (!first_any) first_any = std::current_exception();
          hub.abort(std::string("rank ") + std::to_string(r) + ": " + e.what());
        } catch (const std::exception& e) {
          {
            std::lock_guard lock(mu);
            if (!first) first = std::current_exception();
            if (!first_any) first_any = std::current_exception();
          }
          hub.abort(std::string("rank ") + std::to_string(r) + ": " + e.what());
        }
      });
    }
    for (auto& w : workers) w.join();
    if (first) std::rethrow_exception(first);
    if (first_any) std::rethrow_exception(first_any);
  }

  RunResult result;
  result.steps_completed = outcomes[0].steps;
  result.stopped = outcomes[0].stopped;
  result.history = std::move(outcomes[0].history);
  result.state = std::move(outcomes[0].state);
  result.outputs = std::move(outcomes[0].outputs);
  for (auto& o : outcomes) result.report.ranks.push_back(std::move(o.report));
  for (const auto& h : result.history) {
    result.max_continuity_residual = std::max(result.max_continuity_residual, h.continuity_residual);
    result.max_div_b = std::max(result.max_div_b, h.div_b);
    result.max_gauss_drift = std::max(result.max_gauss_drift, h.gauss_drift);
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (options.write_reports) {
    std::error_code ec;
    fs::create_directories(plan.config.output_dir, ec);
    const fs::path dir(plan.config.output_dir);
    write_history_csv(result.history, dir / "diagnostics.csv");
    std::ofstream(dir / "report.json") << result.report.to_json() << '\n';
    std::ofstream(dir / "report.csv") << result.report.to_csv();
  }
  return result;
}

}  // namespace pic
