#include "pic/profiler.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "pic/error.hpp"

namespace pic {

std::string_view to_string(RegionClass c) {
  switch (c) {
    case RegionClass::Comm: return "COMM";
    case RegionClass::Usr: return "USR";
    case RegionClass::Com: return "COM";
  }
  return "USR";
}

int Profiler::id_of(std::string_view name, RegionClass cls) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(stats_.size());
  stats_.push_back({std::string(name), cls, 0, 0, 0});
  ids_.emplace(std::string(name), id);
  return id;
}

void Profiler::start() {
  if (running_) throw SimulationError("profiler already running");
  running_ = true;
  stack_.push_back({id_of("main", RegionClass::Com), Clock::now(), 0});
}

void Profiler::stop() {
  if (!running_) return;
  const auto now = Clock::now();
  if (stack_.size() != 1) {
    throw SimulationError("profiler stopped with " + std::to_string(stack_.size() - 1) +
                          " region(s) still open");
  }
  close_top(now);
  running_ = false;
}

void Profiler::enter(std::string_view name, RegionClass cls) {
  const int id = id_of(name, cls);
  stack_.push_back({id, Clock::now(), 0});
}

void Profiler::exit(std::string_view name) {
  const auto now = Clock::now();
  if (stack_.size() <= 1 || stats_[stack_.back().id].name != name) {
    throw SimulationError("unbalanced region exit for \"" + std::string(name) + "\"");
  }
  close_top(now);
}

void Profiler::close_top(Clock::time_point now) {
  const Frame f = stack_.back();
  stack_.pop_back();
  const std::int64_t elapsed =
      std::chrono::duration_cast<std::chrono::nanoseconds>(now - f.start).count();
  RegionStats& s = stats_[f.id];
  s.self_ns += elapsed - f.child_ns;
  s.inclusive_ns += elapsed;
  s.calls += 1;
  if (!stack_.empty()) stack_.back().child_ns += elapsed;
}

RankReport Profiler::report() const {
  RankReport r;
  r.rank = rank_;
  r.regions = stats_;
  for (const auto& s : stats_) {
    if (s.name == "main") r.all_ns = s.inclusive_ns;
    switch (s.cls) {
      case RegionClass::Comm: r.comm_ns += s.self_ns; break;
      case RegionClass::Usr: r.usr_ns += s.self_ns; break;
      case RegionClass::Com: r.com_ns += s.self_ns; break;
    }
  }
  return r;
}

namespace {
constexpr double kNs = 1e-9;
}

double RegionReport::mean_seconds(RegionClass c) const {
  if (ranks.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : ranks) s += r.class_ns(c) * kNs;
  return s / ranks.size();
}

double RegionReport::max_seconds(RegionClass c) const {
  double m = 0.0;
  for (const auto& r : ranks) m = std::max(m, r.class_ns(c) * kNs);
  return m;
}

double RegionReport::mean_all_seconds() const {
  if (ranks.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : ranks) s += r.all_ns * kNs;
  return s / ranks.size();
}

double RegionReport::max_all_seconds() const {
  double m = 0.0;
  for (const auto& r : ranks) m = std::max(m, r.all_ns * kNs);
  return m;
}

std::vector<RegionReport::Aggregate> RegionReport::aggregate() const {
  std::vector<Aggregate> out;
  for (const auto& r : ranks) {
    for (const auto& s : r.regions) {
      auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) { return a.name == s.name; });
      if (it == out.end()) {
        out.push_back({s.name, s.cls, s.self_ns, s.calls});
      } else {
        it->self_ns += s.self_ns;
        it->calls += s.calls;
      }
    }
  }
  return out;
}

std::vector<RegionReport::Aggregate> RegionReport::top(std::size_t k) const {
  auto all = aggregate();
  std::stable_sort(all.begin(), all.end(), [](const Aggregate& a, const Aggregate& b) {
    if (a.self_ns != b.self_ns) return a.self_ns > b.self_ns;
    return a.name < b.name;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

double RegionReport::region_mean_seconds(std::string_view name) const {
  if (ranks.empty()) return 0.0;
  for (const auto& a : aggregate()) {
    if (a.name == name) return a.self_ns * kNs / ranks.size();
  }
  return 0.0;
}

double RegionReport::region_max_inclusive_seconds(std::string_view name) const {
  std::int64_t m = 0;
  for (const auto& r : ranks)
    for (const auto& s : r.regions)
      if (s.name == name) m = std::max(m, s.inclusive_ns);
  return m * kNs;
}

std::string RegionReport::to_json() const {
  using nlohmann::json;
  json doc;
  doc["n_ranks"] = ranks.size();
  doc["classes"] = {{"ALL", {{"mean_s", mean_all_seconds()}, {"max_s", max_all_seconds()}}},
                    {"COMM", {{"mean_s", mean_seconds(RegionClass::Comm)}, {"max_s", max_seconds(RegionClass::Comm)}}},
                    {"USR", {{"mean_s", mean_seconds(RegionClass::Usr)}, {"max_s", max_seconds(RegionClass::Usr)}}},
                    {"COM", {{"mean_s", mean_seconds(RegionClass::Com)}, {"max_s", max_seconds(RegionClass::Com)}}}};
  doc["regions"] = json::array();
  for (const auto& a : aggregate()) {
    doc["regions"].push_back({{"name", a.name},
                              {"class", to_string(a.cls)},
                              {"self_s_total", a.self_ns * kNs},
                              {"self_s_mean", ranks.empty() ? 0.0 : a.self_ns * kNs / ranks.size()},
                              {"calls", a.calls}});
  }
  doc["ranks"] = json::array();
  for (const auto& r : ranks) {
    json jr = {{"rank", r.rank},
               {"ALL_s", r.all_ns * kNs},
               {"COMM_s", r.comm_ns * kNs},
               {"USR_s", r.usr_ns * kNs},
               {"COM_s", r.com_ns * kNs},
               {"regions", json::array()}};
    for (const auto& s : r.regions) {
      jr["regions"].push_back({{"name", s.name},
                               {"class", to_string(s.cls)},
                               {"self_s", s.self_ns * kNs},
                               {"inclusive_s", s.inclusive_ns * kNs},
                               {"calls", s.calls}});
    }
    doc["ranks"].push_back(jr);
  }
  return doc.dump(2);
}

std::string RegionReport::to_csv() const {
  std::ostringstream out;
  out << "rank,region,class,self_s,inclusive_s,calls\n";
  char buf[64];
  for (const auto& r : ranks) {
    for (const auto& s : r.regions) {
      out << r.rank << ',' << s.name << ',' << to_string(s.cls) << ',';
      std::snprintf(buf, sizeof buf, "%.9f,%.9f", s.self_ns * kNs, s.inclusive_ns * kNs);
      out << buf << ',' << s.calls << '\n';
    }
  }
  return out.str();
}

std::string RegionReport::to_table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %12s %12s\n", "class", "mean [s]", "max [s]");
  out << line;
  auto row = [&](const char* name, double mean, double max) {
    std::snprintf(line, sizeof line, "%-8s %12.6f %12.6f\n", name, mean, max);
    out << line;
  };
  row("ALL", mean_all_seconds(), max_all_seconds());
  row("COMM", mean_seconds(RegionClass::Comm), max_seconds(RegionClass::Comm));
  row("USR", mean_seconds(RegionClass::Usr), max_seconds(RegionClass::Usr));
  row("COM", mean_seconds(RegionClass::Com), max_seconds(RegionClass::Com));
  out << '\n';
  std::snprintf(line, sizeof line, "%-32s %-5s %14s %10s\n", "region", "class", "self mean [s]", "calls");
  out << line;
  for (const auto& a : aggregate()) {
    std::snprintf(line, sizeof line, "%-32s %-5s %14.6f %10lld\n", a.name.c_str(),
                  std::string(to_string(a.cls)).c_str(),
                  ranks.empty() ? 0.0 : a.self_ns * kNs / ranks.size(),
                  static_cast<long long>(a.calls));
    out << line;
  }
  return out.str();
}

}  // namespace pic
