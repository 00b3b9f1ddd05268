#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tubesim/rng.hpp"

using tubesim::Philox4x32;
using tubesim::RngStream;

TEST_CASE("philox known-answer vectors") {
  // Reference vectors for the 10-round 4x32 variant, counter words packed
  // little-endian into (ctr_lo, ctr_hi).
  Philox4x32 g0{0, 0};
  auto b0 = g0.encrypt(0, 0);
  CHECK(b0.x[0] == 0x6627e8d5u);
  CHECK(b0.x[1] == 0xe169c58du);
  CHECK(b0.x[2] == 0xbc57ac4cu);
  CHECK(b0.x[3] == 0x9b00dbd8u);

  Philox4x32 g1{0xffffffffu, 0xffffffffu};
  auto b1 = g1.encrypt(0xffffffffffffffffull, 0xffffffffffffffffull);
  CHECK(b1.x[0] == 0x408f276du);
  CHECK(b1.x[1] == 0x41c83b0eu);
  CHECK(b1.x[2] == 0xa20bc7c6u);
  CHECK(b1.x[3] == 0x6d5451fdu);

  Philox4x32 g2{0xa4093822u, 0x299f31d0u};
  auto b2 = g2.encrypt(0x85a308d3243f6a88ull, 0x0370734413198a2eull);
  CHECK(b2.x[0] == 0xd16cfe09u);
  CHECK(b2.x[1] == 0x94fdccebu);
  CHECK(b2.x[2] == 0x5001e420u);
  CHECK(b2.x[3] == 0x24126ea1u);
}

TEST_CASE("streams replay exactly and do not collide") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool all_equal = true, differ_stream = false, differ_seed = false;
  for (int i = 0; i < 1000; ++i) {
    double ua = a.uniform(), ub = b.uniform(), uc = c.uniform(), ud = d.uniform();
    all_equal = all_equal && (ua == ub);
    differ_stream = differ_stream || (ua != uc);
    differ_seed = differ_seed || (ua != ud);
  }
  CHECK(all_equal);
  CHECK(differ_stream);
  CHECK(differ_seed);
}

TEST_CASE("uniforms live strictly inside the unit interval") {
  RngStream r(1, 0);
  double mn = 1.0, mx = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    mn = std::min(mn, u);
    mx = std::max(mx, u);
    sum += u;
  }
  CHECK(mn > 0.0);
  CHECK(mx < 1.0);
  CHECK(std::abs(sum / n - 0.5) < 0.005);  // 6.7 sigma of the mean
}

TEST_CASE("normal pairs have standard moments") {
  RngStream r(2026, 3);
  const int n = 200000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (int i = 0; i < n / 2; ++i) {
    double z0, z1;
    r.normal2(z0, z1);
    for (double z : {z0, z1}) {
      s1 += z;
      s2 += z * z;
      s3 += z * z * z;
      s4 += z * z * z * z;
    }
  }
  double mean = s1 / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
  CHECK(std::abs(s3 / n) < 0.04);
  CHECK(std::abs(s4 / n - 3.0) < 0.12);
}

TEST_CASE("block budget per draw is fixed") {
  RngStream r(5, 0);
  (void)r.uniform();
  CHECK(r.blocks_consumed() == 1);
  double a, b;
  r.uniform2(a, b);
  CHECK(r.blocks_consumed() == 2);
  (void)r.gauss<2>();
  CHECK(r.blocks_consumed() == 3);
  (void)r.gauss<3>();
  CHECK(r.blocks_consumed() == 5);  // two blocks, fourth variate discarded
}

TEST_CASE("exponential draws match the requested rate") {
  RngStream r(9, 1);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += r.exponential(4.0);
  CHECK(std::abs(sum / n - 0.25) < 0.004);  // 5 sigma
}

TEST_CASE("independent normal components across a vector draw") {
  RngStream r(11, 2);
  const int n = 100000;
  double sxy = 0.0, sxz = 0.0, syz = 0.0;
  for (int i = 0; i < n; ++i) {
    auto v = r.gauss<3>();
    sxy += v[0] * v[1];
    sxz += v[0] * v[2];
    syz += v[1] * v[2];
  }
  CHECK(std::abs(sxy / n) < 0.02);
  CHECK(std::abs(sxz / n) < 0.02);
  CHECK(std::abs(syz / n) < 0.02);
}
