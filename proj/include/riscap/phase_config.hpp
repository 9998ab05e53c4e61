// SPDX-License-Identifier: Apache-2.0
//
// Per-RIS reflection phases. Reflection coefficients are exp(i phi), unit
// modulus by construction; only the phases are stored.

#pragma once

#include <optional>
#include <vector>

#include "riscap/types.hpp"

namespace riscap {

struct PhaseConfig {
  std::vector<VecD> phases;  // per k, length ns
  std::optional<int> quantization_bits;

  static PhaseConfig identity(int num_riss, int ns) {
    PhaseConfig p;
    p.phases.assign(num_riss, VecD::Zero(ns));
    return p;
  }

  int num_riss() const { return static_cast<int>(phases.size()); }

  VecC coefficients(int k) const {
    const VecD& ph = phases[k];
    VecC c(ph.size());
    for (Eigen::Index n = 0; n < ph.size(); ++n)
      c[n] = cxd(std::cos(ph[n]), std::sin(ph[n]));
    return c;
  }
};

}  // namespace riscap
