#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fwssr/rng.hpp"

using fwssr::SplitRng;

TEST_CASE("same seed reproduces the exact stream") {
  SplitRng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.uniform_int(17) == b.uniform_int(17));
  }
}

TEST_CASE("child streams with different tags diverge") {
  SplitRng root(7);
  SplitRng a = root.child("probe-set");
  SplitRng b = root.child("task-set");
  CHECK(a.seed() != b.seed());
  CHECK(a.uniform() != b.uniform());
}

TEST_CASE("uniform stays in [0, 1) and uniform_int in range") {
  SplitRng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const int k = rng.uniform_int(5);
    CHECK(k >= 0);
    CHECK(k < 5);
  }
  CHECK_THROWS(rng.uniform_int(0));
}

TEST_CASE("normal has roughly standard moments") {
  SplitRng rng(11);
  const int n = 50000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("random_permutation is a permutation") {
  SplitRng rng(5);
  std::vector<int> p = fwssr::random_permutation(100, rng);
  std::vector<int> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<size_t>(i)] == i);
}
