#include <doctest.h>

#include <map>
#include <set>

#include "pic/error.hpp"
#include "pic/io_topology.hpp"

using namespace pic;

TEST_SUITE("io_topology") {

TEST_CASE("16 ranks, groups of 4, 2 files") {
  const auto io = IoTopology::plan(16, 4, 2);
  CHECK(io.masters() == 4);
  CHECK(io.masters_per_file() == 2);
  std::vector<int> masters;
  for (int r = 0; r < 16; ++r)
    if (io.is_master(r)) masters.push_back(r);
  CHECK(masters == std::vector<int>{0, 4, 8, 12});
  CHECK(io.masters_of_file(0) == std::vector<int>{0, 4});
  CHECK(io.masters_of_file(1) == std::vector<int>{8, 12});
  CHECK(io.group_members(2) == std::vector<int>{8, 9, 10, 11});
  CHECK(io.master_of(7) == 4);
  CHECK(io.file_of(7) == 0);
  CHECK(io.file_of(9) == 1);
  CHECK(io.file_leader(1) == 8);
}

TEST_CASE("2048 ranks, groups of 64, 16 files") {
  const auto io = IoTopology::plan(2048, 64, 16);
  CHECK(io.masters() == 32);
  CHECK(io.masters_per_file() == 2);
  std::set<int> masters;
  std::map<int, std::set<int>> by_file;
  for (int r = 0; r < 2048; ++r) {
    REQUIRE(io.master_of(r) == 64 * (r / 64));
    if (io.is_master(r)) {
      masters.insert(r);
      by_file[io.file_of(r)].insert(r);
    }
  }
  CHECK(masters.size() == 32);
  CHECK(by_file.size() == 16);
  for (const auto& [f, ms] : by_file) CHECK(ms.size() == 2);
}

TEST_CASE("writer and file counts stay fixed as rank count grows") {
  for (int n : {16, 32, 64, 128}) {
    const auto io = IoTopology::plan(n, n / 8, 4);
    int writers = 0;
    std::set<int> files;
    for (int r = 0; r < n; ++r)
      if (io.is_master(r)) {
        ++writers;
        files.insert(io.file_of(r));
      }
    CHECK(writers == 8);
    CHECK(files.size() == 4);
  }
}

TEST_CASE("invalid plans are rejected") {
  CHECK_THROWS_AS(IoTopology::plan(16, 3, 1), ConfigError);   // G does not divide N
  CHECK_THROWS_AS(IoTopology::plan(16, 4, 3), ConfigError);   // F does not divide M
  CHECK_THROWS_AS(IoTopology::plan(16, 4, 4), ConfigError);   // F = M
  CHECK_THROWS_AS(IoTopology::plan(16, 0, 1), ConfigError);
  CHECK_NOTHROW(IoTopology::plan(1, 1, 1));
  CHECK_NOTHROW(IoTopology::plan(4, 4, 1));
}

TEST_CASE("shared-file and task-local are special cases") {
  const auto s = IoTopology::shared_file(8);
  CHECK(s.group_size() == 1);
  CHECK(s.files() == 1);
  CHECK(s.masters() == 8);
  const auto t = IoTopology::task_local(8);
  CHECK(t.group_size() == 1);
  CHECK(t.files() == 8);
  for (int r = 0; r < 8; ++r) CHECK(t.file_of(r) == r);
}

TEST_CASE("block placement is contiguous per file in rank order") {
  const auto io = IoTopology::plan(8, 2, 2);
  std::vector<std::uint64_t> len{10, 20, 30, 40, 0, 60, 70, 80};
  const auto p = io.place_blocks(len, 128);
  REQUIRE(p.size() == 8);
  CHECK(p[0].offset == 128);
  CHECK(p[1].offset == 138);
  CHECK(p[2].offset == 158);
  CHECK(p[3].offset == 188);
  CHECK(p[4].file == 1);
  CHECK(p[4].offset == 128);
  CHECK(p[5].offset == 128);
  CHECK(p[7].offset == 258);
  for (int r = 0; r < 8; ++r) CHECK(p[r].length == len[r]);
}

TEST_CASE("largest divisor helper") {
  CHECK(largest_divisor_at_most(2048, 128) == 128);
  CHECK(largest_divisor_at_most(12, 5) == 4);
  CHECK(largest_divisor_at_most(7, 6) == 1);
  CHECK(largest_divisor_at_most(1, 1) == 1);
}

}
