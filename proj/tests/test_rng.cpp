#include <catch2/catch_amalgamated.hpp>

#include <array>

#include "pedprag/rng.hpp"

using namespace pedprag;

TEST_CASE("same seed yields the same stream") {
  Rng a(42), b(42);
  for (int k = 0; k < 1000; ++k) REQUIRE(a.uniform() == b.uniform());
}

TEST_CASE("uniform stays in [0,1) and uniform_int in range") {
  Rng rng(7);
  for (int k = 0; k < 10000; ++k) {
    double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    int i = rng.uniform_int(13);
    REQUIRE(i >= 0);
    REQUIRE(i < 13);
  }
}

TEST_CASE("forked streams are reproducible and do not disturb the parent") {
  Rng parent(99);
  double first = parent.fork(1).uniform();
  double again = parent.fork(1).uniform();
  REQUIRE(first == again);
  REQUIRE(parent.fork(1).uniform() != parent.fork(2).uniform());
  Rng a(99), b(99);
  (void)a.fork(5);
  for (int k = 0; k < 100; ++k) REQUIRE(a.uniform() == b.uniform());
}

TEST_CASE("categorical respects the weights") {
  Rng rng(3);
  std::array<double, 3> w = {0.2, 0.5, 0.3};
  std::array<int, 3> counts = {0, 0, 0};
  const int n = 60000;
  for (int k = 0; k < n; ++k) counts[static_cast<std::size_t>(rng.categorical(w))]++;
  for (int k = 0; k < 3; ++k)
    REQUIRE(std::abs(counts[static_cast<std::size_t>(k)] / static_cast<double>(n) -
                     w[static_cast<std::size_t>(k)]) < 0.01);
  REQUIRE_THROWS_AS(rng.categorical(std::array<double, 2>{0.0, 0.0}), std::invalid_argument);
}
