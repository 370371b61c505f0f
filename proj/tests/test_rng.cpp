#include <doctest.h>

#include <array>
#include <cmath>
#include <set>

#include "adawls/rng.hpp"

using adawls::RngStream;

TEST_CASE("streams are reproducible from the seed") {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream c(43);
  CHECK(RngStream(42).next_u64() != c.next_u64());
}

TEST_CASE("split derives independent children without advancing the parent") {
  RngStream parent(7);
  const auto before = parent.counter();
  RngStream c1 = parent.split(1);
  RngStream c2 = parent.split(2);
  CHECK(parent.counter() == before);
  CHECK(c1.key() != c2.key());
  CHECK(c1.key() != parent.key());
  CHECK(parent.split(1).next_u64() == RngStream(7).split(1).next_u64());
  std::set<std::uint64_t> firsts;
  for (std::uint64_t id = 0; id < 1000; ++id) firsts.insert(parent.split(id).next_u64());
  CHECK(firsts.size() == 1000);
}

TEST_CASE("uniform lies in the open unit interval and has the right moments") {
  RngStream rng(1);
  const int n = 200000;
  double sum = 0.0;
  double sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sumsq / n - mean * mean - 1.0 / 12.0) < 2e-3);
}

TEST_CASE("below is uniform over its range") {
  RngStream rng(3);
  std::array<int, 7> counts{};
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  CHECK(chi2 < 16.81);  // chi-square(6) at 1%
  CHECK(rng.below(1) == 0);
}
