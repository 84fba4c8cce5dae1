#include <doctest.h>

#include <chrono>
#include <thread>

#include "pic/error.hpp"
#include "pic/profiler.hpp"

using namespace pic;

namespace {

void busy_ms(int ms) {
  const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
  while (std::chrono::steady_clock::now() < until) {
  }
}

const RegionStats& find(const RankReport& r, std::string_view name) {
  for (const auto& s : r.regions)
    if (s.name == name) return s;
  throw std::runtime_error("missing region");
}

}  // namespace

TEST_SUITE("profiler") {

TEST_CASE("a timed sleep is attributed within 2 ms") {
  Profiler p;
  p.start();
  {
    ScopedRegion r(&p, "sleep", RegionClass::Usr);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  p.stop();
  const auto rep = p.report();
  CHECK(std::abs(find(rep, "sleep").self_ns / 1e6 - 50.0) <= 2.0);
}

TEST_CASE("nested regions: parent self time excludes children") {
  Profiler p;
  p.start();
  {
    ScopedRegion outer(&p, "outer", RegionClass::Usr);
    busy_ms(10);
    {
      ScopedRegion inner(&p, "inner", RegionClass::Comm);
      busy_ms(20);
    }
  }
  p.stop();
  const auto rep = p.report();
  const auto& o = find(rep, "outer");
  const auto& i = find(rep, "inner");
  CHECK(o.self_ns / 1e6 == doctest::Approx(10.0).epsilon(0.2));
  CHECK(i.self_ns / 1e6 == doctest::Approx(20.0).epsilon(0.1));
  CHECK(o.inclusive_ns == o.self_ns + i.inclusive_ns);
  CHECK(rep.comm_ns == i.self_ns);
}

TEST_CASE("class times add up to ALL exactly") {
  Profiler p(true, 3);
  p.start();
  for (int k = 0; k < 50; ++k) {
    ScopedRegion a(&p, "compute", RegionClass::Usr);
    ScopedRegion b(&p, "send", RegionClass::Comm);
  }
  {
    ScopedRegion c(&p, "glue", RegionClass::Com);
    busy_ms(1);
  }
  p.stop();
  const auto rep = p.report();
  CHECK(rep.rank == 3);
  CHECK(rep.comm_ns + rep.usr_ns + rep.com_ns == rep.all_ns);
  CHECK(find(rep, "compute").calls == 50);
  CHECK(find(rep, "main").inclusive_ns == rep.all_ns);
}

TEST_CASE("unbalanced exit throws") {
  Profiler p;
  p.start();
  p.enter("a", RegionClass::Usr);
  p.enter("b", RegionClass::Usr);
  CHECK_THROWS_AS(p.exit("a"), SimulationError);
}

TEST_CASE("top-k ranks by self time across ranks") {
  RegionReport rep;
  for (int r = 0; r < 2; ++r) {
    Profiler p(true, r);
    p.start();
    {
      ScopedRegion a(&p, "big", RegionClass::Usr);
      busy_ms(6);
    }
    {
      ScopedRegion a(&p, "mid", RegionClass::Comm);
      busy_ms(3);
    }
    {
      ScopedRegion a(&p, "small", RegionClass::Usr);
      busy_ms(1);
    }
    p.stop();
    rep.ranks.push_back(p.report());
  }
  const auto top = rep.top(2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].name == "big");
  CHECK(top[1].name == "mid");
  CHECK(rep.aggregate().front().name == "main");
  CHECK(rep.max_all_seconds() >= rep.mean_all_seconds());
  CHECK(rep.to_json().find("\"big\"") != std::string::npos);
  CHECK(rep.to_csv().find("mid") != std::string::npos);
  CHECK(rep.to_table().find("small") != std::string::npos);
}

TEST_CASE("disabled profiler records nothing") {
  Profiler p(false);
  p.start();
  {
    ScopedRegion a(&p, "x", RegionClass::Usr);
  }
  p.stop();
  for (const auto& s : p.report().regions) CHECK(s.name != "x");
}

}
