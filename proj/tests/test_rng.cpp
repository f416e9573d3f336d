#include <doctest.h>

#include <cmath>

#include "kolpinn/parallel.hpp"
#include "kolpinn/rng.hpp"

using namespace kolpinn;

TEST_CASE("counter rng is a pure function of its arguments") {
  CHECK(uniform01(1, 2, 3) == uniform01(1, 2, 3));
  CHECK(normal(7, 11, 13) == normal(7, 11, 13));
  CHECK(uniform01(1, 2, 3) != uniform01(1, 2, 4));
  CHECK(uniform01(1, 2, 3) != uniform01(2, 2, 3));
}

TEST_CASE("uniform draws stay inside the requested interval") {
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double u = uniform(-2.0, 3.0, 42, i);
    CHECK(u > -2.0);
    CHECK(u < 3.0);
  }
}

TEST_CASE("normal draws have standard moments") {
  const std::size_t n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = normal(9, i);
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("parallel map and pairwise sum are thread-count invariant") {
  auto fn = [](std::size_t i) { return normal(3, i) * 1.0000001; };
  const auto a = parallel_map(10000, fn, 1);
  const auto b = parallel_map(10000, fn, 8);
  CHECK(a == b);
  CHECK(pairwise_sum(a) == pairwise_sum(b));
}
