#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <vector>

#include <beamlearn/rng.hpp>

using namespace beamlearn;

TEST_CASE("counter rng replays bit-identically") {
  CounterRng a(42, 7);
  CounterRng b(42, 7);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct keys and streams give distinct sequences") {
  CounterRng a(42, 7);
  CounterRng b(42, 8);
  CounterRng c(43, 7);
  int equal_ab = 0, equal_ac = 0;
  for (int i = 0; i < 256; ++i) {
    const auto va = a.next_u64();
    equal_ab += (va == b.next_u64());
    equal_ac += (va == c.next_u64());
  }
  REQUIRE(equal_ab == 0);
  REQUIRE(equal_ac == 0);
}

TEST_CASE("mix64 has no collisions over a contiguous range") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 4096; ++i) seen.insert(mix64(i));
  REQUIRE(seen.size() == 4096);
}

TEST_CASE("next_double stays in the unit interval and fills it") {
  CounterRng rng(1);
  double lo = 1, hi = 0;
  for (int i = 0; i < 20000; ++i) {
    const double x = rng.next_double();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  REQUIRE(lo < 0.01);
  REQUIRE(hi > 0.99);
}

TEST_CASE("next_below covers its range roughly uniformly") {
  CounterRng rng(2);
  std::vector<long> counts(10, 0);
  const long draws = 100000;
  for (long i = 0; i < draws; ++i) ++counts[rng.next_below(10)];
  for (long c : counts) {
    REQUIRE(c > draws / 10 * 0.9);
    REQUIRE(c < draws / 10 * 1.1);
  }
  for (int i = 0; i < 1000; ++i) REQUIRE(rng.next_below(1) == 0);
}

TEST_CASE("split streams are independent of the parent position") {
  CounterRng parent(9);
  CounterRng child_before = parent.split(3);
  (void)parent.next_u64();
  CounterRng child_after = parent.split(3);
  for (int i = 0; i < 64; ++i) REQUIRE(child_before.next_u64() == child_after.next_u64());
}

TEST_CASE("bernoulli matches its probability") {
  CounterRng rng(5);
  long hits = 0;
  const long draws = 100000;
  for (long i = 0; i < draws; ++i) hits += rng.next_bernoulli(0.3);
  const double rate = static_cast<double>(hits) / static_cast<double>(draws);
  REQUIRE(rate > 0.29);
  REQUIRE(rate < 0.31);
}
