// SPDX-License-Identifier: Apache-2.0
//
// Philox4x32-10 counter-based generator (Salmon et al., SC 2011) plus a
// complex-Gaussian stream keyed by (seed, sample index, role). Streams are
// splittable by construction, so parallel and serial sampling produce the
// same draws.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "riscap/types.hpp"

namespace riscap {

struct PhiloxCounter {
  std::array<uint32_t, 4> v{0, 0, 0, 0};
};

namespace detail {

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  const uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

}  // namespace detail

/// One Philox4x32 block: 4 x 32 random bits from (counter, key), 10 rounds.
inline std::array<uint32_t, 4> philox4x32(PhiloxCounter ctr, uint64_t key) {
  constexpr uint32_t kMulA = 0xD2511F53u;
  constexpr uint32_t kMulB = 0xCD9E8D57u;
  constexpr uint32_t kWeylA = 0x9E3779B9u;
  constexpr uint32_t kWeylB = 0xBB67AE85u;

  uint32_t k0 = static_cast<uint32_t>(key);
  uint32_t k1 = static_cast<uint32_t>(key >> 32);
  auto& c = ctr.v;
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo(kMulA, c[0], hi0, lo0);
    detail::mulhilo(kMulB, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kWeylA;
    k1 += kWeylB;
  }
  return c;
}

/// Map 32 random bits to the open interval (0, 1).
inline double u01(uint32_t x) {
  return (static_cast<double>(x) + 0.5) * (1.0 / 4294967296.0);
}

/// Deterministic stream of CN(0,1) variates (unit total variance) for one
/// (seed, sample, role) triple. Role packs the matrix identity, e.g. which
/// channel leg and which (k, m) pair it belongs to.
class GaussianStream {
 public:
  GaussianStream(uint64_t seed, uint64_t sample_index, uint32_t role)
      : key_(seed), base_{{static_cast<uint32_t>(sample_index),
                           static_cast<uint32_t>(sample_index >> 32), role, 0}} {}

  cxd next() {
    if (!have_spare_) {
      PhiloxCounter c = base_;
      c.v[3] = block_++;
      const auto r = philox4x32(c, key_);
      spare_ = box_muller(r[2], r[3]);
      have_spare_ = true;
      return box_muller(r[0], r[1]);
    }
    have_spare_ = false;
    return spare_;
  }

  /// Fill a matrix in row-major visit order (fixed so results are layout-independent).
  void fill(MatC& out) {
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = next();
  }

 private:
  static cxd box_muller(uint32_t a, uint32_t b) {
    const double r = std::sqrt(-std::log(u01(a)));
    const double th = 2.0 * pi * u01(b);
    return {r * std::cos(th), r * std::sin(th)};
  }

  uint64_t key_;
  PhiloxCounter base_;
  uint32_t block_ = 0;
  bool have_spare_ = false;
  cxd spare_{};
};

/// Convenience uniform stream for tests and auxiliary sampling.
class UniformStream {
 public:
  UniformStream(uint64_t seed, uint64_t sample_index, uint32_t role)
      : key_(seed), base_{{static_cast<uint32_t>(sample_index),
                           static_cast<uint32_t>(sample_index >> 32), role, 0}} {}

  double next() {
    if (pos_ == 4) {
      PhiloxCounter c = base_;
      c.v[3] = block_++;
      buf_ = philox4x32(c, key_);
      pos_ = 0;
    }
    return u01(buf_[pos_++]);
  }

 private:
  uint64_t key_;
  PhiloxCounter base_;
  uint32_t block_ = 0;
  std::array<uint32_t, 4> buf_{};
  int pos_ = 4;
};

}  // namespace riscap
