#include "pic/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pic/error.hpp"

namespace pic {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 3> kAxisNames{"x", "y", "z"};

/// Accumulates schema problems with a JSON-pointer-like path for each.
class Reader {
 public:
  std::vector<std::string> problems;

  void fail(const std::string& path, const std::string& what) {
    problems.push_back(path + ": " + what);
  }

  void check_keys(const json& obj, const std::string& path, std::set<std::string_view> allowed) {
    for (const auto& [key, _] : obj.items()) {
      if (!allowed.contains(key)) fail(path, "unknown key \"" + key + "\"");
    }
  }

  bool is_object(const json& v, const std::string& path) {
    if (v.is_object()) return true;
    fail(path, "expected an object");
    return false;
  }

  const json* find(const json& obj, const std::string& key, const std::string& path,
                   bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(path, "missing required key \"" + key + "\"");
      return nullptr;
    }
    return &*it;
  }

  std::optional<std::int64_t> integer(const json& v, const std::string& path) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    fail(path, "expected an integer");
    return std::nullopt;
  }

  std::optional<double> real(const json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    fail(path, "expected a number");
    return std::nullopt;
  }

  std::optional<std::string> string(const json& v, const std::string& path) {
    if (v.is_string()) return v.get<std::string>();
    fail(path, "expected a string");
    return std::nullopt;
  }

  template <typename T, typename F>
  std::optional<std::array<T, 3>> triple(const json& v, const std::string& path, F&& elem) {
    if (!v.is_array() || v.size() != 3) {
      fail(path, "expected an array of 3 values");
      return std::nullopt;
    }
    std::array<T, 3> out{};
    bool ok = true;
    for (int a = 0; a < 3; ++a) {
      auto e = elem(v[a], path + "/" + std::to_string(a));
      if (e) out[a] = static_cast<T>(*e); else ok = false;
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::optional<int> axis(const json& v, const std::string& path) {
    auto s = string(v, path);
    if (!s) return std::nullopt;
    for (int a = 0; a < 3; ++a) {
      if (*s == kAxisNames[a]) return a;
    }
    fail(path, "expected one of \"x\", \"y\", \"z\"");
    return std::nullopt;
  }

  template <typename T>
  void read_int(const json& obj, const std::string& key, const std::string& path, T& out,
                bool required) {
    if (const json* v = find(obj, key, path, required)) {
      if (auto i = integer(*v, path + "/" + key)) out = static_cast<T>(*i);
    }
  }

  void read_real(const json& obj, const std::string& key, const std::string& path, double& out,
                 bool required) {
    if (const json* v = find(obj, key, path, required)) {
      if (auto r = real(*v, path + "/" + key)) out = *r;
    }
  }
};

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1;
  int column = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

void parse_species(Reader& r, const json& v, const std::string& path, SpeciesSpec& s) {
  if (!r.is_object(v, path)) return;
  r.check_keys(v, path, {"name", "charge", "mass", "particles_per_cell", "init"});
  if (const json* n = r.find(v, "name", path, true)) {
    if (auto str = r.string(*n, path + "/name")) s.name = *str;
  }
  r.read_real(v, "charge", path, s.charge, false);
  r.read_real(v, "mass", path, s.mass, false);
  r.read_int(v, "particles_per_cell", path, s.particles_per_cell, true);
  const json* init = r.find(v, "init", path, true);
  if (!init) return;
  const std::string ipath = path + "/init";
  if (!r.is_object(*init, ipath)) return;
  std::string type;
  if (const json* t = r.find(*init, "type", ipath, true)) {
    if (auto str = r.string(*t, ipath + "/type")) type = *str;
  }
  if (type == "two_stream") {
    s.init = InitKind::TwoStream;
    r.check_keys(*init, ipath,
                 {"type", "drift_momentum", "density", "perturbation", "thermal_momentum"});
    r.read_real(*init, "drift_momentum", ipath, s.drift_momentum, true);
    r.read_real(*init, "density", ipath, s.density, false);
    r.read_real(*init, "perturbation", ipath, s.perturbation, false);
    r.read_real(*init, "thermal_momentum", ipath, s.thermal_momentum, false);
  } else if (type == "uniform") {
    s.init = InitKind::Uniform;
    r.check_keys(*init, ipath, {"type", "thermal_momentum", "density"});
    r.read_real(*init, "thermal_momentum", ipath, s.thermal_momentum, false);
    r.read_real(*init, "density", ipath, s.density, false);
  } else if (!type.empty()) {
    r.fail(ipath + "/type", "expected \"two_stream\" or \"uniform\"");
  }
}

void parse_region(Reader& r, const json& v, const std::string& path, OutputRegion& region) {
  if (!r.is_object(v, path)) return;
  std::string type;
  if (const json* t = r.find(v, "type", path, true)) {
    if (auto str = r.string(*t, path + "/type")) type = *str;
  }
  if (type == "full") {
    region.kind = RegionKind::Full;
    r.check_keys(v, path, {"type"});
  } else if (type == "plane") {
    region.kind = RegionKind::Plane;
    r.check_keys(v, path, {"type", "axis", "coordinate"});
    if (const json* a = r.find(v, "axis", path, true)) {
      if (auto ax = r.axis(*a, path + "/axis")) region.axis = *ax;
    }
    r.read_real(v, "coordinate", path, region.coordinate, true);
  } else if (type == "box") {
    region.kind = RegionKind::Box;
    r.check_keys(v, path, {"type", "lo", "hi"});
    auto real = [&](const json& e, const std::string& p) { return r.real(e, p); };
    if (const json* lo = r.find(v, "lo", path, true)) {
      if (auto t = r.triple<double>(*lo, path + "/lo", real)) region.lo = *t;
    }
    if (const json* hi = r.find(v, "hi", path, true)) {
      if (auto t = r.triple<double>(*hi, path + "/hi", real)) region.hi = *t;
    }
  } else if (type == "line") {
    region.kind = RegionKind::Line;
    r.check_keys(v, path, {"type", "fixed_axes", "coordinates"});
    const json* axes = r.find(v, "fixed_axes", path, true);
    const json* coords = r.find(v, "coordinates", path, true);
    if (axes && (!axes->is_array() || axes->size() != 2)) {
      r.fail(path + "/fixed_axes", "expected an array of 2 axis names");
      axes = nullptr;
    }
    if (coords && (!coords->is_array() || coords->size() != 2)) {
      r.fail(path + "/coordinates", "expected an array of 2 numbers");
      coords = nullptr;
    }
    if (axes && coords) {
      for (int i = 0; i < 2; ++i) {
        auto ax = r.axis((*axes)[i], path + "/fixed_axes/" + std::to_string(i));
        auto c = r.real((*coords)[i], path + "/coordinates/" + std::to_string(i));
        if (ax && c) {
          region.fixed_axes[i] = *ax;
          region.fixed_coordinates[*ax] = *c;
        }
      }
      if (region.fixed_axes[0] == region.fixed_axes[1]) {
        r.fail(path + "/fixed_axes", "the two fixed axes must differ");
      }
      if (region.fixed_axes[0] > region.fixed_axes[1]) {
        std::swap(region.fixed_axes[0], region.fixed_axes[1]);
      }
    }
  } else if (!type.empty()) {
    r.fail(path + "/type", "expected one of \"full\", \"plane\", \"box\", \"line\"");
  }
}

void parse_output(Reader& r, const json& v, const std::string& path, OutputRequest& out) {
  if (!r.is_object(v, path)) return;
  r.check_keys(v, path, {"quantity", "species", "region", "time_window", "every_n_steps"});
  if (const json* q = r.find(v, "quantity", path, true)) {
    if (auto s = r.string(*q, path + "/quantity")) {
      if (*s == "E") out.quantity = Quantity::E;
      else if (*s == "B") out.quantity = Quantity::B;
      else if (*s == "J") out.quantity = Quantity::J;
      else if (*s == "density") out.quantity = Quantity::Density;
      else if (*s == "particle_phase_space") out.quantity = Quantity::PhaseSpace;
      else r.fail(path + "/quantity", "unknown quantity \"" + *s + "\"");
    }
  }
  if (const json* s = r.find(v, "species", path, false)) {
    if (auto str = r.string(*s, path + "/species")) out.species = *str;
  }
  if (const json* reg = r.find(v, "region", path, false)) {
    parse_region(r, *reg, path + "/region", out.region);
  }
  if (const json* w = r.find(v, "time_window", path, false)) {
    if (!w->is_array() || w->size() != 2) {
      r.fail(path + "/time_window", "expected [t_start, t_end] (t_end may be null)");
    } else {
      if (auto t0 = r.real((*w)[0], path + "/time_window/0")) out.t_start = *t0;
      if (!(*w)[1].is_null()) {
        if (auto t1 = r.real((*w)[1], path + "/time_window/1")) out.t_end = *t1;
      }
    }
  }
  r.read_int(v, "every_n_steps", path, out.every_n_steps, false);
}

void parse_io(Reader& r, const json& v, const std::string& path, IoSpec& io) {
  if (!r.is_object(v, path)) return;
  r.check_keys(v, path, {"group_size", "files", "strategy"});
  auto int_or_auto = [&](const char* key, std::optional<int>& out) {
    const json* e = r.find(v, key, path, false);
    if (!e) return;
    if (e->is_string() && e->get<std::string>() == "auto") {
      out.reset();
    } else if (auto i = r.integer(*e, path + "/" + key)) {
      out = static_cast<int>(*i);
    }
  };
  int_or_auto("group_size", io.group_size);
  int_or_auto("files", io.files);
  if (const json* s = r.find(v, "strategy", path, false)) {
    if (auto str = r.string(*s, path + "/strategy")) {
      if (auto st = strategy_from_string(*str)) io.strategy = *st;
      else r.fail(path + "/strategy", "unknown I/O strategy \"" + *str + "\"");
    }
  }
}

json region_to_json(const OutputRegion& region) {
  switch (region.kind) {
    case RegionKind::Full:
      return {{"type", "full"}};
    case RegionKind::Plane:
      return {{"type", "plane"}, {"axis", kAxisNames[region.axis]},
              {"coordinate", region.coordinate}};
    case RegionKind::Box:
      return {{"type", "box"}, {"lo", region.lo}, {"hi", region.hi}};
    case RegionKind::Line: {
      const auto [a, b] = region.fixed_axes;
      return {{"type", "line"},
              {"fixed_axes", {kAxisNames[a], kAxisNames[b]}},
              {"coordinates", {region.fixed_coordinates[a], region.fixed_coordinates[b]}}};
    }
  }
  return {};
}

json io_to_json(const IoTopology& io) {
  return {{"strategy", to_string(io.strategy())},
          {"ranks", io.ranks()},
          {"group_size", io.group_size()},
          {"masters", io.masters()},
          {"files", io.files()},
          {"masters_per_file", io.masters_per_file()}};
}

}  // namespace

double yee_stable_dt(const Real3& d) {
  return 1.0 / std::sqrt(1.0 / (d[0] * d[0]) + 1.0 / (d[1] * d[1]) + 1.0 / (d[2] * d[2]));
}

std::string_view to_string(Layout layout) { return layout == Layout::AoS ? "aos" : "soa"; }

std::string_view to_string(IoStrategy strategy) {
  switch (strategy) {
    case IoStrategy::Aggregated: return "aggregated";
    case IoStrategy::LegacyShared: return "legacy-shared";
    case IoStrategy::TaskLocal: return "task-local";
  }
  return "aggregated";
}

std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::E: return "E";
    case Quantity::B: return "B";
    case Quantity::J: return "J";
    case Quantity::Density: return "density";
    case Quantity::PhaseSpace: return "particle_phase_space";
  }
  return "E";
}

std::optional<Layout> layout_from_string(std::string_view s) {
  if (s == "aos" || s == "AoS") return Layout::AoS;
  if (s == "soa" || s == "SoA") return Layout::SoA;
  return std::nullopt;
}

std::optional<IoStrategy> strategy_from_string(std::string_view s) {
  if (s == "aggregated") return IoStrategy::Aggregated;
  if (s == "legacy-shared") return IoStrategy::LegacyShared;
  if (s == "task-local") return IoStrategy::TaskLocal;
  return std::nullopt;
}

SimulationConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ", column " +
                      std::to_string(column) + ": " + e.what());
  }

  Reader r;
  SimulationConfig c;
  const std::string root;
  if (!doc.is_object()) throw ValidationError({"/: top level must be an object"});
  r.check_keys(doc, "/", {"grid_cells", "box_size", "cfl_factor", "n_steps", "species",
                          "outputs", "io", "rank_grid", "n_ranks", "rng_seed", "layout",
                          "output_dir"});

  auto integer = [&](const json& e, const std::string& p) { return r.integer(e, p); };
  auto real = [&](const json& e, const std::string& p) { return r.real(e, p); };

  if (const json* v = r.find(doc, "grid_cells", "/", true)) {
    if (auto t = r.triple<int>(*v, "/grid_cells", integer)) c.grid_cells = *t;
  }
  if (const json* v = r.find(doc, "box_size", "/", true)) {
    if (auto t = r.triple<double>(*v, "/box_size", real)) c.box_size = *t;
  }
  r.read_real(doc, "cfl_factor", "/", c.cfl_factor, false);
  r.read_int(doc, "n_steps", "/", c.n_steps, true);

  if (const json* v = r.find(doc, "species", "/", true)) {
    if (!v->is_array()) {
      r.fail("/species", "expected an array");
    } else {
      for (std::size_t i = 0; i < v->size(); ++i) {
        SpeciesSpec s;
        parse_species(r, (*v)[i], "/species/" + std::to_string(i), s);
        c.species.push_back(std::move(s));
      }
    }
  }
  if (const json* v = r.find(doc, "outputs", "/", false)) {
    if (!v->is_array()) {
      r.fail("/outputs", "expected an array");
    } else {
      for (std::size_t i = 0; i < v->size(); ++i) {
        OutputRequest o;
        parse_output(r, (*v)[i], "/outputs/" + std::to_string(i), o);
        c.outputs.push_back(std::move(o));
      }
    }
  }
  if (const json* v = r.find(doc, "io", "/", false)) parse_io(r, *v, "/io", c.io);
  if (const json* v = r.find(doc, "rank_grid", "/", false)) {
    if (v->is_string() && v->get<std::string>() == "auto") {
      c.rank_grid.reset();
    } else if (auto t = r.triple<int>(*v, "/rank_grid", integer)) {
      c.rank_grid = *t;
    }
  }
  r.read_int(doc, "n_ranks", "/", c.n_ranks, false);
  if (const json* v = r.find(doc, "rng_seed", "/", false)) {
    if (v->is_number_unsigned()) c.rng_seed = v->get<std::uint64_t>();
    else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) c.rng_seed = v->get<std::uint64_t>();
    else r.fail("/rng_seed", "expected a non-negative 64-bit integer");
  }
  if (const json* v = r.find(doc, "layout", "/", false)) {
    if (auto s = r.string(*v, "/layout")) {
      if (auto l = layout_from_string(*s)) c.layout = *l;
      else r.fail("/layout", "expected \"aos\" or \"soa\"");
    }
  }
  if (const json* v = r.find(doc, "output_dir", "/", false)) {
    if (auto s = r.string(*v, "/output_dir")) c.output_dir = *s;
  }

  if (!r.problems.empty()) throw ValidationError(std::move(r.problems));
  return c;
}

SimulationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const SimulationConfig& c) {
  json doc;
  doc["grid_cells"] = c.grid_cells;
  doc["box_size"] = c.box_size;
  doc["cfl_factor"] = c.cfl_factor;
  doc["n_steps"] = c.n_steps;
  doc["species"] = json::array();
  for (const auto& s : c.species) {
    json init;
    if (s.init == InitKind::TwoStream) {
      init = {{"type", "two_stream"},
              {"drift_momentum", s.drift_momentum},
              {"density", s.density},
              {"perturbation", s.perturbation},
              {"thermal_momentum", s.thermal_momentum}};
    } else {
      init = {{"type", "uniform"},
              {"thermal_momentum", s.thermal_momentum},
              {"density", s.density}};
    }
    doc["species"].push_back({{"name", s.name},
                              {"charge", s.charge},
                              {"mass", s.mass},
                              {"particles_per_cell", s.particles_per_cell},
                              {"init", init}});
  }
  doc["outputs"] = json::array();
  for (const auto& o : c.outputs) {
    json out = {{"quantity", to_string(o.quantity)},
                {"region", region_to_json(o.region)},
                {"every_n_steps", o.every_n_steps}};
    if (!o.species.empty()) out["species"] = o.species;
    out["time_window"] = {o.t_start, std::isinf(o.t_end) ? json(nullptr) : json(o.t_end)};
    doc["outputs"].push_back(out);
  }
  doc["io"] = {{"group_size", c.io.group_size ? json(*c.io.group_size) : json("auto")},
               {"files", c.io.files ? json(*c.io.files) : json("auto")},
               {"strategy", to_string(c.io.strategy)}};
  doc["rank_grid"] = c.rank_grid ? json(*c.rank_grid) : json("auto");
  doc["n_ranks"] = c.n_ranks;
  doc["rng_seed"] = c.rng_seed;
  doc["layout"] = to_string(c.layout);
  doc["output_dir"] = c.output_dir;
  return doc.dump(2);
}

std::optional<Int3> auto_rank_grid(int n_ranks, const Int3& cells, int ghost_width) {
  std::optional<Int3> best;
  double best_score = -1.0;
  bool best_even = false;
  for (int px = 1; px <= n_ranks; ++px) {
    if (n_ranks % px) continue;
    for (int py = 1; py <= n_ranks / px; ++py) {
      if ((n_ranks / px) % py) continue;
      const int pz = n_ranks / px / py;
      const Int3 p{px, py, pz};
      bool fits = true;
      bool even = true;
      double min_extent = 1e300;
      for (int a = 0; a < 3; ++a) {
        if (cells[a] / p[a] < 2 * ghost_width) fits = false;
        if (cells[a] % p[a]) even = false;
        min_extent = std::min(min_extent, static_cast<double>(cells[a]) / p[a]);
      }
      if (!fits) continue;
      // Prefer even splits, then the largest smallest subdomain extent.
      if (!best || (even && !best_even) || (even == best_even && min_extent > best_score)) {
        best = p;
        best_score = min_extent;
        best_even = even;
      }
    }
  }
  return best;
}

ValidationResult validate(const SimulationConfig& c) {
  std::vector<std::string> errors;
  auto err = [&](std::string s) { errors.push_back(std::move(s)); };

  bool grid_ok = true;
  for (int a = 0; a < 3; ++a) {
    if (c.grid_cells[a] < 1) {
      err(std::string("grid_cells[") + kAxisNames[a] + "] must be >= 1");
      grid_ok = false;
    }
    if (!(c.box_size[a] > 0.0) || !std::isfinite(c.box_size[a])) {
      err(std::string("box_size[") + kAxisNames[a] + "] must be > 0");
      grid_ok = false;
    }
  }
  if (c.n_steps < 0) err("n_steps must be >= 0");
  if (!(c.cfl_factor > 0.0 && c.cfl_factor <= 1.0)) {
    err("CFL violation: cfl_factor must lie in (0, 1]");
  }

  std::set<std::string> names;
  for (const auto& s : c.species) {
    const std::string tag = "species \"" + s.name + "\": ";
    if (s.name.empty()) err("species name must not be empty");
    if (!names.insert(s.name).second) err(tag + "duplicate species name");
    if (!(s.mass > 0.0)) err(tag + "mass must be > 0");
    if (s.particles_per_cell < 1) err(tag + "particles_per_cell must be >= 1");
    if (!(s.density >= 0.0)) err(tag + "density must be >= 0");
    if (s.thermal_momentum < 0.0) err(tag + "thermal_momentum must be >= 0");
    if (s.init == InitKind::TwoStream && s.particles_per_cell % 2 != 0) {
      err(tag + "two_stream requires an even particles_per_cell (equal beams)");
    }
  }

  for (std::size_t i = 0; i < c.outputs.size(); ++i) {
    const auto& o = c.outputs[i];
    const std::string tag = "outputs[" + std::to_string(i) + "]: ";
    const bool needs_species = o.quantity == Quantity::Density || o.quantity == Quantity::PhaseSpace;
    if (needs_species && !names.contains(o.species)) {
      err(tag + "unknown species \"" + o.species + "\"");
    }
    if (!needs_species && !o.species.empty()) err(tag + "species is only valid for density and particle_phase_space");
    if (o.every_n_steps < 1) err(tag + "every_n_steps must be >= 1");
    if (!(o.t_start <= o.t_end)) err(tag + "time window requires t_start <= t_end");
    if (grid_ok) {
      auto inside = [&](int a, double x) { return x >= 0.0 && x <= c.box_size[a]; };
      const auto& reg = o.region;
      switch (reg.kind) {
        case RegionKind::Full:
          break;
        case RegionKind::Plane:
          if (!inside(reg.axis, reg.coordinate)) err(tag + "plane coordinate outside the box");
          break;
        case RegionKind::Box:
          for (int a = 0; a < 3; ++a) {
            if (!inside(a, reg.lo[a]) || !inside(a, reg.hi[a]) || reg.lo[a] >= reg.hi[a]) {
              err(tag + "box region must satisfy 0 <= lo < hi <= box_size on every axis");
              break;
            }
          }
          break;
        case RegionKind::Line:
          for (int ax : reg.fixed_axes) {
            if (!inside(ax, reg.fixed_coordinates[ax])) err(tag + "line coordinate outside the box");
          }
          break;
      }
    }
  }

  RunPlan plan;
  plan.config = c;
  plan.ghost_width = kGhostWidth;

  if (grid_ok) {
    for (int a = 0; a < 3; ++a) plan.cell_size[a] = c.box_size[a] / c.grid_cells[a];
    plan.dt = c.cfl_factor * yee_stable_dt(plan.cell_size);
  }

  bool ranks_ok = true;
  if (c.rank_grid) {
    const Int3& p = *c.rank_grid;
    if (p[0] < 1 || p[1] < 1 || p[2] < 1) {
      err("rank_grid entries must be >= 1");
      ranks_ok = false;
    } else {
      plan.rank_grid = p;
      plan.n_ranks = p[0] * p[1] * p[2];
      if (c.n_ranks != 1 && c.n_ranks != plan.n_ranks) {
        err("n_ranks does not match the product of rank_grid");
      }
      if (grid_ok) {
        for (int a = 0; a < 3; ++a) {
          if (c.grid_cells[a] / p[a] < 2 * plan.ghost_width) {
            err(std::string("rank grid incompatible with cell counts: axis ") + kAxisNames[a] +
                " gives subdomains thinner than " + std::to_string(2 * plan.ghost_width) +
                " cells");
            ranks_ok = false;
          }
        }
      }
    }
  } else if (c.n_ranks < 1) {
    err("n_ranks must be >= 1");
    ranks_ok = false;
  } else if (grid_ok) {
    if (auto p = auto_rank_grid(c.n_ranks, c.grid_cells, plan.ghost_width)) {
      plan.rank_grid = *p;
      plan.n_ranks = c.n_ranks;
    } else {
      err("rank grid incompatible with cell counts: no factorization of " +
          std::to_string(c.n_ranks) + " ranks leaves " + std::to_string(2 * plan.ghost_width) +
          " cells per subdomain axis");
      ranks_ok = false;
    }
  } else {
    ranks_ok = false;
  }

  if (ranks_ok) {
    const int n = plan.n_ranks;
    const int g = c.io.group_size.value_or(largest_divisor_at_most(n, 128));
    if (g < 1) {
      err("group size must be >= 1");
    } else if (n % g != 0) {
      err("group size must divide rank count (G=" + std::to_string(g) + ", N=" +
          std::to_string(n) + ")");
    } else if (c.io.strategy != IoStrategy::Aggregated) {
      plan.io = IoTopology::for_strategy(c.io.strategy, n, g, 1);
    } else {
      const int m = n / g;
      const int f = c.io.files.value_or(largest_divisor_at_most(m, std::max(1, m / 2)));
      if (f < 1) {
        err("file count must be >= 1");
      } else if (m % f != 0) {
        err("file count must divide master count (F=" + std::to_string(f) + ", M=" +
            std::to_string(m) + ")");
      } else if (!(f < m) && !(f == 1 && m == 1)) {
        err("file count must be smaller than master count (F=" + std::to_string(f) + ", M=" +
            std::to_string(m) + ")");
      } else {
        plan.io = IoTopology::plan(n, g, f);
      }
    }
  }

  ValidationResult result;
  result.errors = std::move(errors);
  if (result.errors.empty()) result.plan = std::move(plan);
  return result;
}

RunPlan resolve(const SimulationConfig& config) {
  auto r = validate(config);
  if (!r.ok()) throw ValidationError(std::move(r.errors));
  return std::move(*r.plan);
}

std::string describe_plan(const RunPlan& plan) {
  json doc;
  doc["dt"] = plan.dt;
  doc["cell_size"] = plan.cell_size;
  doc["rank_grid"] = plan.rank_grid;
  doc["n_ranks"] = plan.n_ranks;
  doc["ghost_width"] = plan.ghost_width;
  doc["n_steps"] = plan.config.n_steps;
  doc["io_topology"] = io_to_json(plan.io);
  doc["config"] = json::parse(serialize_config(plan.config));
  return doc.dump(2);
}

}  // namespace pic
