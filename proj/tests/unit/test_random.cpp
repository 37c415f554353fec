#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "vspec/random.hpp"

using vspec::Rng;

TEST_CASE("same seed gives the same stream") {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform01();
    CHECK(x == b.uniform01());
    differs |= x != c.uniform01();
  }
  CHECK(differs);
}

TEST_CASE("uniform_int stays in range and hits every value") {
  Rng rng(1);
  std::vector<int> hits(6, 0);
  for (int i = 0; i < 6000; ++i) {
    const auto v = rng.uniform_int(-2, 3);
    REQUIRE(v >= -2);
    REQUIRE(v <= 3);
    ++hits[static_cast<std::size_t>(v + 2)];
  }
  for (int h : hits) CHECK(h > 800);
}

TEST_CASE("normal draws have the requested moments") {
  Rng rng(3);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(1.5, 2.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(1.5).epsilon(0.02));
  CHECK(std::sqrt(var) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(9);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  auto copy = v;
  rng.shuffle(std::span<int>(v));
  CHECK(v != copy);
  std::sort(v.begin(), v.end());
  CHECK(v == copy);
}

TEST_CASE("mix_seed separates streams") {
  CHECK(vspec::mix_seed(42, 0) != vspec::mix_seed(42, 1));
  CHECK(vspec::mix_seed(42, 0) != vspec::mix_seed(43, 0));
  CHECK(vspec::mix_seed(42, 5) == vspec::mix_seed(42, 5));
}
