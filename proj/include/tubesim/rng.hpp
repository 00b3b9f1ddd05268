#pragma once

#include <cmath>
#include <cstdint>

#include "tubesim/vec.hpp"

namespace tubesim {

// Philox4x32-10 counter-based block cipher used as RNG. A block is a pure
// function of (key, counter), so every draw is replayable in any execution
// order: trajectories own disjoint counter lanes and never share state.
struct Philox4x32 {
  uint32_t key0 = 0;
  uint32_t key1 = 0;

  struct Block {
    uint32_t x[4];
  };

  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

  static inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
  }

  Block encrypt(uint64_t ctr_lo, uint64_t ctr_hi) const {
    uint32_t x0 = static_cast<uint32_t>(ctr_lo);
    uint32_t x1 = static_cast<uint32_t>(ctr_lo >> 32);
    uint32_t x2 = static_cast<uint32_t>(ctr_hi);
    uint32_t x3 = static_cast<uint32_t>(ctr_hi >> 32);
    uint32_t k0 = key0, k1 = key1;
    for (int round = 0; round < 10; ++round) {
      uint32_t hi0, lo0, hi1, lo1;
      mulhilo(kMul0, x0, hi0, lo0);
      mulhilo(kMul1, x2, hi1, lo1);
      uint32_t y0 = hi1 ^ x1 ^ k0;
      uint32_t y1 = lo1;
      uint32_t y2 = hi0 ^ x3 ^ k1;
      uint32_t y3 = lo0;
      x0 = y0;
      x1 = y1;
      x2 = y2;
      x3 = y3;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return Block{{x0, x1, x2, x3}};
  }
};

// One independent stream per (seed, stream_id); stream_id is the trajectory
// index. Consumes one Philox block per pair of doubles.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream_id) : stream_id_(stream_id) {
    gen_.key0 = static_cast<uint32_t>(seed);
    gen_.key1 = static_cast<uint32_t>(seed >> 32);
  }

  // Two independent uniforms in the open interval (0,1), 53-bit resolution.
  void uniform2(double& u0, double& u1) {
    Philox4x32::Block b = gen_.encrypt(ctr_++, stream_id_);
    u0 = to_unit(b.x[0], b.x[1]);
    u1 = to_unit(b.x[2], b.x[3]);
  }

  double uniform() {
    double u0, u1;
    uniform2(u0, u1);
    return u0;
  }

  // Box-Muller pair of standard normals.
  void normal2(double& z0, double& z1) {
    double u0, u1;
    uniform2(u0, u1);
    double r = std::sqrt(-2.0 * std::log(u0));
    double a = 2.0 * M_PI * u1;
    z0 = r * std::cos(a);
    z1 = r * std::sin(a);
  }

  template <int D>
  Vec<D> gauss();

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  uint64_t blocks_consumed() const { return ctr_; }

 private:
  static double to_unit(uint32_t hi, uint32_t lo) {
    uint64_t u = (static_cast<uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
  }

  Philox4x32 gen_;
  uint64_t stream_id_;
  uint64_t ctr_ = 0;
};

template <>
inline Vec<2> RngStream::gauss<2>() {
  Vec<2> z;
  normal2(z[0], z[1]);
  return z;
}

// Three normals cost two blocks; the fourth variate is discarded to keep the
// counter schedule independent of downstream use.
template <>
inline Vec<3> RngStream::gauss<3>() {
  Vec<3> z;
  normal2(z[0], z[1]);
  double z3, waste;
  normal2(z3, waste);
  (void)waste;
  z[2] = z3;
  return z;
}

}  // namespace tubesim
