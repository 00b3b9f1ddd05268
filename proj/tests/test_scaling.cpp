#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tubesim/scaling.hpp"

using tubesim::ScalingLaw;

TEST_CASE("radius law evaluates c * eps^beta") {
  ScalingLaw s({1.0, 2.0}, {0.4, 0.3}, 2);
  CHECK(s.size() == 2);
  CHECK(s.radius(0, 0.01) == Catch::Approx(std::pow(0.01, 0.4)).epsilon(1e-14));
  CHECK(s.radius(1, 0.01) == Catch::Approx(2.0 * std::pow(0.01, 0.3)).epsilon(1e-14));
}

TEST_CASE("exponent window depends on the dimension") {
  // d = 2 admits beta < 1/2, d = 3 admits beta < 2/3
  CHECK_NOTHROW(ScalingLaw({1.0}, {0.49}, 2));
  CHECK_THROWS_AS(ScalingLaw({1.0}, {0.5}, 2), std::invalid_argument);
  CHECK_NOTHROW(ScalingLaw({1.0}, {0.6}, 3));
  CHECK_THROWS_AS(ScalingLaw({1.0}, {2.0 / 3.0}, 3), std::invalid_argument);
  CHECK_THROWS_AS(ScalingLaw({1.0}, {0.0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(ScalingLaw({1.0}, {-0.1}, 2), std::invalid_argument);
}

TEST_CASE("constants must be positive and sized to the vertex set") {
  CHECK_THROWS_AS(ScalingLaw({0.0}, {0.3}, 2), std::invalid_argument);
  CHECK_THROWS_AS(ScalingLaw({-1.0}, {0.3}, 2), std::invalid_argument);
  CHECK_THROWS_AS(ScalingLaw({1.0, 1.0}, {0.3}, 2), std::invalid_argument);
}

TEST_CASE("larger beta gives the smaller radius for small eps") {
  ScalingLaw s({1.0, 1.0}, {0.45, 0.3}, 2);
  for (double eps : {0.04, 0.02, 0.01, 0.001}) {
    CHECK(s.radius(0, eps) < s.radius(1, eps));
  }
}
