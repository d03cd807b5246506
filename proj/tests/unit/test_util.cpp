#include <doctest.h>

#include <algorithm>
#include <charconv>
#include <numeric>
#include <set>

#include "culsim/util.hpp"

using namespace culsim;

TEST_SUITE("util") {
  TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(to_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
    CHECK(to_hex(1) == "0000000000000001");
  }

  TEST_CASE("rng is reproducible and its mappings stay in range") {
    Rng a(7), b(7), c(8);
    std::vector<std::uint64_t> da, db, dc;
    for (int i = 0; i < 32; ++i) {
      da.push_back(a.next());
      db.push_back(b.next());
      dc.push_back(c.next());
    }
    CHECK(da == db);
    CHECK(da != dc);

    Rng r(123);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
      const double u = r.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      const auto k = r.below(7);
      REQUIRE(k < 7);
      ++hits[k];
    }
    for (int h : hits) CHECK(h > 800);
  }

  TEST_CASE("shuffle is a permutation") {
    Rng r(5);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    r.shuffle(std::span<int>(v));
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expected(50);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(sorted == expected);
    CHECK(v != expected);
  }

  TEST_CASE("derive_seed separates streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 100; ++s) seen.insert(derive_seed(42, s));
    CHECK(seen.size() == 100);
    CHECK(derive_seed(42, "s01") != derive_seed(42, "s02"));
    CHECK(derive_seed(42, "s01") == derive_seed(42, "s01"));
  }

  TEST_CASE("timestamps and number formatting") {
    CHECK(utc_timestamp_from_epoch(0) == "1970-01-01T00:00:00Z");
    CHECK(utc_timestamp_from_epoch(1700000000) == "2023-11-14T22:13:20Z");
    const auto now = utc_timestamp();
    CHECK(now.size() == 24);
    CHECK(now.back() == 'Z');
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300}) {
      const auto s = format_double(v);
      double back = 0.0;
      std::from_chars(s.data(), s.data() + s.size(), back);
      CHECK(back == v);
    }
    CHECK(trim("  a b \n") == "a b");
    CHECK(trim(" \t ").empty());
  }
}
