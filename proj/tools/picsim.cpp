// picsim: run, validate, benchmark and inspect PIC simulations.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pic/config.hpp"
#include "pic/error.hpp"
#include "pic/output.hpp"
#include "pic/scaling.hpp"
#include "pic/simulation.hpp"
#include "pic/transport.hpp"

namespace {

using namespace pic;
using nlohmann::json;

enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kRuntime = 4, kIo = 5 };

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct Overrides {
  std::string ranks;
  std::optional<int> steps;
  std::string io_strategy;
  std::optional<int> io_group_size;
  std::optional<int> io_files;
  std::string layout;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--ranks", o.ranks, "Rank grid Px,Py,Pz, or a rank count");
  cmd->add_option("--steps", o.steps, "Number of time steps");
  cmd->add_option("--io-strategy", o.io_strategy, "aggregated, legacy-shared or task-local");
  cmd->add_option("--io-group-size", o.io_group_size, "Ranks per I/O group (G)");
  cmd->add_option("--io-files", o.io_files, "Output files per emission (F)");
  cmd->add_option("--layout", o.layout, "Particle layout: aos or soa");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--output-dir", o.output_dir, "Directory for outputs and reports");
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not an integer list: '" + s + "'");
    }
  }
  return out;
}

SimulationConfig apply_overrides(SimulationConfig cfg, const Overrides& o) {
  if (!o.ranks.empty()) {
    const auto v = parse_int_list(o.ranks);
    if (v.size() == 3) {
      cfg.rank_grid = Int3{v[0], v[1], v[2]};
      cfg.n_ranks = v[0] * v[1] * v[2];
    } else if (v.size() == 1) {
      cfg.rank_grid.reset();
      cfg.n_ranks = v[0];
    } else {
      throw ConfigError("--ranks takes Px,Py,Pz or a single rank count");
    }
  }
  if (o.steps) cfg.n_steps = *o.steps;
  if (!o.io_strategy.empty()) {
    const auto s = strategy_from_string(o.io_strategy);
    if (!s) throw ConfigError("unknown I/O strategy '" + o.io_strategy + "'");
    cfg.io.strategy = *s;
  }
  if (o.io_group_size) cfg.io.group_size = *o.io_group_size;
  if (o.io_files) cfg.io.files = *o.io_files;
  if (!o.layout.empty()) {
    const auto l = layout_from_string(o.layout);
    if (!l) throw ConfigError("unknown layout '" + o.layout + "'");
    cfg.layout = *l;
  }
  if (o.seed) cfg.rng_seed = *o.seed;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + path);
}

void write_report(const std::string& path, const RegionReport& report) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) {
    write_text(path, report.to_csv());
  } else {
    write_text(path, report.to_json() + "\n");
  }
}

int cmd_run(const std::string& config_path, const Overrides& o, bool dry_run, bool validate_only,
            const std::string& report_path, const std::string& transport, bool check) {
  const SimulationConfig cfg = apply_overrides(load_config(config_path), o);
  const RunPlan plan = resolve(cfg);
  if (dry_run || validate_only) {
    std::cout << describe_plan(plan) << '\n';
    return kOk;
  }
  RunOptions opt;
  opt.stop_flag = &g_stop;
  opt.check_conservation = check;
  opt.check_particle_count = check;
  opt.write_reports = true;
  opt.provenance = serialize_config(plan.config);
  if (transport == "loopback") {
    opt.transport = TransportKind::Loopback;
  } else if (transport != "threads") {
    throw ConfigError("unknown transport '" + transport + "' (threads or loopback)");
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const RunResult res = run_world(plan, opt);
  if (!report_path.empty()) write_report(report_path, res.report);

  std::cout << "steps " << res.steps_completed << (res.stopped ? " (stopped by signal)" : "") << ", ranks "
            << plan.n_ranks << ", wall " << res.wall_seconds << " s, outputs " << res.outputs.size() << '\n';
  if (!res.history.empty()) {
    const auto& a = res.history.front();
    const auto& b = res.history.back();
    std::printf("total energy %.12e -> %.12e (relative change %.3e)\n", a.total_energy(), b.total_energy(),
                a.total_energy() != 0.0 ? (b.total_energy() - a.total_energy()) / a.total_energy() : 0.0);
  }
  if (check) {
    std::printf("max continuity residual %.3e, max |div B| %.3e, max Gauss drift %.3e\n",
                res.max_continuity_residual, res.max_div_b, res.max_gauss_drift);
  }
  std::cout << res.report.to_table();
  return res.stopped ? kRuntime : kOk;
}

int cmd_validate(const std::string& path) {
  const ValidationResult v = validate(load_config(path));
  if (!v.ok()) throw ValidationError(v.errors);
  std::cout << describe_plan(*v.plan) << '\n';
  return kOk;
}

int cmd_bench_scaling(const std::string& config_path, const Overrides& o, const std::string& mode,
                      const std::string& ranks, int repeats, bool no_io, const std::string& report_path) {
  SimulationConfig cfg = apply_overrides(load_config(config_path), o);
  ScalingMode m;
  if (mode == "strong") m = ScalingMode::Strong;
  else if (mode == "weak") m = ScalingMode::Weak;
  else throw ConfigError("--mode must be strong or weak");
  ScalingOptions opt;
  opt.repeats = repeats;
  opt.measure_io = !no_io;
  const ScalingTable t = run_scaling_suite(cfg, parse_int_list(ranks), m, opt);
  if (t.oversubscribed) {
    std::cerr << "warning: more ranks than hardware threads (" << t.hardware_threads
              << "); timings are oversubscribed\n";
  }
  std::cout << t.to_table();
  if (!report_path.empty()) {
    if (report_path.size() >= 4 && report_path.compare(report_path.size() - 4, 4, ".csv") == 0) {
      write_text(report_path, t.to_csv());
    } else {
      write_text(report_path, t.to_json() + "\n");
    }
  }
  return kOk;
}

int cmd_bench_layout(const std::string& config_path, const Overrides& o, const std::string& report_path) {
  SimulationConfig base = apply_overrides(load_config(config_path), o);
  base.outputs.clear();
  json doc;
  std::optional<GlobalState> ref;
  for (Layout l : {Layout::AoS, Layout::SoA}) {
    SimulationConfig cfg = base;
    cfg.layout = l;
    const RunPlan plan = resolve(cfg);
    RunOptions opt;
    opt.record_history = false;
    opt.collect_state = true;
    const RunResult res = run_world(plan, opt);
    const double push = res.report.region_mean_seconds("particles.push");
    const double per_step = plan.config.n_steps > 0 ? push / plan.config.n_steps : 0.0;
    std::printf("%-3s  push %.6f s total, %.6f s/step, run %.3f s\n", std::string(to_string(l)).c_str(), push,
                per_step, res.wall_seconds);
    doc[std::string(to_string(l))] = {{"push_s", push}, {"push_s_per_step", per_step}, {"wall_s", res.wall_seconds}};
    if (!ref) {
      ref = res.state;
    } else if (ref->E != res.state->E || ref->B != res.state->B || ref->J != res.state->J ||
               ref->particles != res.state->particles) {
      throw SimulationError("AoS and SoA runs diverged: layout neutrality violated");
    }
  }
  std::cout << "AoS and SoA states are bitwise identical\n";
  doc["bitwise_identical"] = true;
  if (!report_path.empty()) write_text(report_path, doc.dump(2) + "\n");
  return kOk;
}

int cmd_inspect(const std::string& path, bool as_json, bool scan) {
  const FileSet set = scan ? scan_output(path) : read_output(path);
  const FileHeader& h = set.header;
  if (as_json) {
    json doc;
    doc["kind"] = h.kind == BlockKind::Grid ? "grid" : "particles";
    doc["quantity"] = h.quantity;
    doc["step"] = h.step;
    doc["time"] = h.time;
    doc["dims"] = h.dims;
    doc["origin"] = h.origin;
    doc["components"] = h.components;
    doc["file_count"] = h.file_count;
    doc["used_index"] = set.used_index;
    doc["blocks"] = json::array();
    for (const auto& b : set.blocks) {
      json jb = {{"rank", b.rank}, {"group", b.group}, {"file", b.file}, {"offset", b.offset}, {"length", b.length}};
      if (h.kind == BlockKind::Grid) jb["box"] = {{"lo", b.box.lo}, {"hi", b.box.hi}};
      else jb["species"] = b.species;
      doc["blocks"].push_back(jb);
    }
    if (set.grid) doc["values"] = set.grid->values;
    else doc["particles"] = set.particles;
    std::cout << doc.dump() << '\n';
    return kOk;
  }
  std::cout << "quantity   " << h.quantity << '\n'
            << "kind       " << (h.kind == BlockKind::Grid ? "grid" : "particles") << '\n'
            << "step       " << h.step << "  time " << h.time << '\n'
            << "dims       " << h.dims[0] << " x " << h.dims[1] << " x " << h.dims[2] << "  origin (" << h.origin[0]
            << ", " << h.origin[1] << ", " << h.origin[2] << ")\n"
            << "files      " << h.file_count << "  blocks " << set.blocks.size()
            << (set.used_index ? "  (via index)" : "  (sequential scan)") << '\n';
  if (set.grid) {
    const auto& v = set.grid->values;
    const std::size_t cells = v.size() / std::max(1, set.grid->components);
    for (int c = 0; c < set.grid->components; ++c) {
      double lo = 0.0, hi = 0.0, sum = 0.0;
      for (std::size_t i = 0; i < cells; ++i) {
        const double x = v[c * cells + i];
        if (i == 0 || x < lo) lo = x;
        if (i == 0 || x > hi) hi = x;
        sum += x;
      }
      std::printf("component %d  min %.6e  max %.6e  mean %.6e\n", c, lo, hi, cells ? sum / cells : 0.0);
    }
  } else {
    std::cout << "particles  " << set.particle_count() << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel electromagnetic particle-in-cell simulator"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path, report_path, transport = "threads";
  bool dry_run = false, validate_only = false, check = false;
  auto* run = app.add_subcommand("run", "Run a simulation");
  run->add_option("--config,config", config_path, "JSON configuration file")->required();
  add_overrides(run, o);
  run->add_option("--report", report_path, "Write the region report (.json or .csv)");
  run->add_flag("--dry-run", dry_run, "Print the resolved plan and exit");
  run->add_flag("--validate-only", validate_only, "Print the resolved plan and exit");
  run->add_option("--transport", transport, "threads or loopback");
  run->add_flag("--check", check, "Check charge, div B and particle count every step");

  std::string validate_path;
  auto* val = app.add_subcommand("validate-config", "Validate a configuration and print the plan");
  val->add_option("config", validate_path, "JSON configuration file")->required();

  std::string mode = "strong", rank_list = "1,2,4,8", scaling_config, scaling_report;
  int repeats = 1;
  bool no_io = false;
  Overrides so;
  auto* scal = app.add_subcommand("bench-scaling", "Strong or weak scaling runs");
  scal->add_option("--config,config", scaling_config, "JSON configuration file")->required();
  scal->add_option("--mode", mode, "strong or weak");
  scal->add_option("--rank-counts", rank_list, "Comma-separated rank counts");
  scal->add_option("--repeats", repeats, "Best of this many runs per point");
  scal->add_flag("--no-io", no_io, "Skip the output-strategy timings");
  scal->add_option("--report", scaling_report, "Write the tables (.json or .csv)");
  add_overrides(scal, so);

  std::string layout_config, layout_report;
  Overrides lo;
  auto* lay = app.add_subcommand("bench-layout", "Time the mover in AoS and SoA layouts");
  lay->add_option("--config,config", layout_config, "JSON configuration file")->required();
  lay->add_option("--report", layout_report, "Write timings as JSON");
  add_overrides(lay, lo);

  std::string inspect_path;
  bool as_json = false, scan = false;
  auto* ins = app.add_subcommand("inspect", "Summarize or dump an output fileset");
  ins->add_option("path", inspect_path, "Index, data file or prefix")->required();
  ins->add_flag("--json", as_json, "Dump header, blocks and values as JSON");
  ins->add_flag("--scan", scan, "Ignore the index and scan the data files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(config_path, o, dry_run, validate_only, report_path, transport, check);
    if (*val) return cmd_validate(validate_path);
    if (*scal) return cmd_bench_scaling(scaling_config, so, mode, rank_list, repeats, no_io, scaling_report);
    if (*lay) return cmd_bench_layout(layout_config, lo, layout_report);
    if (*ins) return cmd_inspect(inspect_path, as_json, scan);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.category()) {
      case ErrorCategory::Config: return kConfig;
      case ErrorCategory::Io: return kIo;
      case ErrorCategory::Runtime: return kRuntime;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
