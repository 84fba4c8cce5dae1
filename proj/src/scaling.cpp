#include "pic/scaling.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <json.hpp>

#include "pic/error.hpp"
#include "pic/simulation.hpp"

namespace pic {

namespace fs = std::filesystem;

std::string_view to_string(ScalingMode mode) { return mode == ScalingMode::Strong ? "strong" : "weak"; }

SimulationConfig weak_scaled_config(const SimulationConfig& base, int base_ranks, int ranks) {
  if (base_ranks < 1 || ranks < base_ranks || ranks % base_ranks != 0) {
    throw ConfigError("weak scaling needs rank counts that are multiples of the first count");
  }
  int factor = ranks / base_ranks;
  if ((factor & (factor - 1)) != 0) {
    throw ConfigError("weak scaling needs power-of-two multiples of the first rank count");
  }
  SimulationConfig cfg = base;
  Int3 grid = base.rank_grid ? *base.rank_grid
                             : auto_rank_grid(base_ranks, base.grid_cells, kGhostWidth).value_or(Int3{base_ranks, 1, 1});
  int axis = 0;
  while (factor > 1) {
    cfg.grid_cells[axis] *= 2;
    cfg.box_size[axis] *= 2.0;
    grid[axis] *= 2;
    factor /= 2;
    axis = (axis + 1) % 3;
  }
  cfg.rank_grid = grid;
  cfg.n_ranks = ranks;
  return cfg;
}

namespace {

ScalingPoint measure(const RunPlan& plan, int repeats) {
  RunOptions opt;
  opt.instrument = true;
  opt.record_history = false;
  opt.write_outputs = false;
  ScalingPoint best;
  for (int rep = 0; rep < std::max(1, repeats); ++rep) {
    const RunResult res = run_world(plan, opt);
    ScalingPoint p;
    p.ranks = plan.n_ranks;
    p.rank_grid = plan.rank_grid;
    p.cells = plan.config.grid_cells;
    p.cells_per_rank = product(plan.config.grid_cells) / plan.n_ranks;
    p.all_s = res.report.max_all_seconds();
    p.comm_s = res.report.max_seconds(RegionClass::Comm);
    p.usr_s = res.report.max_seconds(RegionClass::Usr);
    p.com_s = res.report.max_seconds(RegionClass::Com);
    p.top = res.report.top(3);
    if (rep == 0 || p.all_s < best.all_s) best = p;
  }
  return best;
}

IoTiming measure_io(const SimulationConfig& base, int ranks, Quantity q, const std::string& species) {
  SimulationConfig cfg = base;
  cfg.n_steps = 0;
  OutputRequest req;
  req.quantity = q;
  req.species = species;
  cfg.outputs = {req};
  const fs::path dir = fs::temp_directory_path() /
                       ("picsim_io_" + std::to_string(::getpid()) + "_" + std::to_string(ranks));
  cfg.output_dir = dir.string();

  IoTiming t;
  t.ranks = ranks;
  t.quantity = std::string(to_string(q));
  for (IoStrategy s : {IoStrategy::LegacyShared, IoStrategy::Aggregated}) {
    cfg.io.strategy = s;
    const RunPlan plan = resolve(cfg);
    RunOptions opt;
    opt.record_history = false;
    const RunResult res = run_world(plan, opt);
    const double secs = res.report.region_max_inclusive_seconds("output.write");
    if (s == IoStrategy::LegacyShared) {
      t.legacy_s = secs;
    } else {
      t.aggregated_s = secs;
      t.group_size = plan.io.group_size();
      t.files = plan.io.files();
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return t;
}

}  // namespace

ScalingTable run_scaling_suite(const SimulationConfig& base, const std::vector<int>& rank_counts,
                               ScalingMode mode, const ScalingOptions& options) {
  if (rank_counts.empty()) throw ConfigError("no rank counts given");
  ScalingTable table;
  table.mode = mode;
  table.hardware_threads = std::max(1u, std::thread::hardware_concurrency());
  for (int n : rank_counts) {
    SimulationConfig cfg = base;
    if (mode == ScalingMode::Weak) {
      cfg = weak_scaled_config(base, rank_counts.front(), n);
    } else {
      cfg.n_ranks = n;
      cfg.rank_grid.reset();
    }
    cfg.outputs.clear();
    const RunPlan plan = resolve(cfg);
    if (static_cast<unsigned>(n) > table.hardware_threads) table.oversubscribed = true;
    ScalingPoint p = measure(plan, options.repeats);
    if (mode == ScalingMode::Weak && !table.points.empty() &&
        p.cells_per_rank != table.points.front().cells_per_rank) {
      throw SimulationError("weak scaling changed the per-rank cell count");
    }
    if (!table.points.empty()) {
      const auto& first = table.points.front();
      p.speedup_all = p.all_s > 0.0 ? first.all_s / p.all_s : 0.0;
      p.speedup_usr = p.usr_s > 0.0 ? first.usr_s / p.usr_s : 0.0;
    }
    table.points.push_back(p);
    if (options.measure_io) {
      std::string species = cfg.species.empty() ? std::string{} : cfg.species.front().name;
      if (!species.empty()) table.io.push_back(measure_io(cfg, n, Quantity::PhaseSpace, species));
      table.io.push_back(measure_io(cfg, n, Quantity::E, {}));
    }
  }
  return table;
}

std::string ScalingTable::to_json() const {
  using nlohmann::json;
  json doc;
  doc["mode"] = to_string(mode);
  doc["hardware_threads"] = hardware_threads;
  doc["oversubscribed"] = oversubscribed;
  doc["points"] = json::array();
  for (const auto& p : points) {
    json top = json::array();
    for (const auto& a : p.top) top.push_back({{"name", a.name}, {"class", to_string(a.cls)}, {"self_s", a.self_ns * 1e-9}});
    doc["points"].push_back({{"ranks", p.ranks},
                             {"rank_grid", p.rank_grid},
                             {"cells", p.cells},
                             {"cells_per_rank", p.cells_per_rank},
                             {"ALL_s", p.all_s},
                             {"COMM_s", p.comm_s},
                             {"USR_s", p.usr_s},
                             {"COM_s", p.com_s},
                             {"speedup_all", p.speedup_all},
                             {"speedup_usr", p.speedup_usr},
                             {"top_regions", top}});
  }
  doc["io"] = json::array();
  for (const auto& t : io) {
    doc["io"].push_back({{"ranks", t.ranks},
                         {"quantity", t.quantity},
                         {"group_size", t.group_size},
                         {"files", t.files},
                         {"legacy_s", t.legacy_s},
                         {"aggregated_s", t.aggregated_s},
                         {"ratio", t.ratio()}});
  }
  return doc.dump(2);
}

std::string ScalingTable::to_csv() const {
  std::ostringstream out;
  out << "mode,ranks,cells_per_rank,ALL_s,COMM_s,USR_s,COM_s,speedup_all,speedup_usr\n";
  char buf[256];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%s,%d,%lld,%.9f,%.9f,%.9f,%.9f,%.4f,%.4f\n",
                  std::string(to_string(mode)).c_str(), p.ranks, static_cast<long long>(p.cells_per_rank),
                  p.all_s, p.comm_s, p.usr_s, p.com_s, p.speedup_all, p.speedup_usr);
    out << buf;
  }
  return out.str();
}

std::string ScalingTable::to_table() const {
  std::ostringstream out;
  char buf[256];
  out << to_string(mode) << " scaling (" << hardware_threads << " hardware threads"
      << (oversubscribed ? ", oversubscribed" : "") << ")\n";
  out << " ranks  cells/rank      ALL[s]     COMM[s]      USR[s]      COM[s]  speedup  USR speedup  top regions\n";
  for (const auto& p : points) {
    std::string top;
    for (const auto& a : p.top) top += (top.empty() ? "" : ", ") + a.name;
    std::snprintf(buf, sizeof buf, "%6d  %10lld  %10.4f  %10.4f  %10.4f  %10.4f  %7.2f  %11.2f  ", p.ranks,
                  static_cast<long long>(p.cells_per_rank), p.all_s, p.comm_s, p.usr_s, p.com_s,
                  p.speedup_all, p.speedup_usr);
    out << buf << top << '\n';
  }
  if (!io.empty()) {
    out << "\noutput write time\n ranks  quantity              G    F   legacy[s]  aggregated[s]  legacy/aggr\n";
    for (const auto& t : io) {
      std::snprintf(buf, sizeof buf, "%6d  %-20s %3d  %3d  %10.6f  %13.6f  %11.2f\n", t.ranks, t.quantity.c_str(),
                    t.group_size, t.files, t.legacy_s, t.aggregated_s, t.ratio());
      out << buf;
    }
  }
  return out.str();
}

}  // namespace pic
