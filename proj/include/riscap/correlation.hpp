// SPDX-License-Identifier: Apache-2.0
//
// Spatial correlation synthesis from angular power spectra: the weight
// function is a Gaussian bump of width sigma around the mean wave vector,
// integrated over the unit sphere of directions. sigma = 0 degenerates to
// the rank-one steering-vector limit.

#pragma once

#include <string>
#include <vector>

#include "riscap/scenario.hpp"
#include "riscap/types.hpp"

namespace riscap {

struct SteeringVector {
  VecC v;   // unit norm, [v]_n = exp(i q . x_n) / sqrt(ns)
  Vec3 q;   // associated wave vector, rad/m
};

SteeringVector steering_vector(const std::vector<Vec3>& positions, const Vec3& q);

/// [S]_ab = int w(k) exp(i k.(x_a - x_b)) dOmega with w a normalized
/// Gaussian weight around mean_direction (|mean_direction| = 2 pi / lambda).
/// Evaluated by product Gauss-Legendre quadrature in rotated spherical
/// coordinates, order-doubled until entrywise change < 1e-8. Diagonal
/// entries are exactly 1, so the trace equals the element count.
MatC correlation_matrix(const std::vector<Vec3>& positions, const Vec3& mean_direction,
                        double sigma_rad, double wavelength_m);

/// One correlation matrix plus cached PSD square root and an identity flag
/// that lets hot paths skip multiplications.
struct CorrMat {
  MatC mat;
  MatC sqrt;
  bool identity = false;

  static CorrMat make_identity(int n);
  static CorrMat from_matrix(MatC m);
  static CorrMat from_matrix_scaled(MatC m, double scale);  // scale applied to mat, sqrt
};

/// All correlation matrices of the channel model. Indexing for per-(k,m)
/// families is m-major: pair index p = m*K + k. The direct-link receive
/// correlations R_dm carry the direct-SNR ratio as a prefactor, so all
/// downstream consumers are snrdir-agnostic.
struct CorrelationSet {
  int num_txs = 0;   // M
  int num_riss = 0;  // K
  int nt = 0;
  int nr = 0;
  int ns = 0;
  double rho_d = 0.0;

  std::vector<CorrMat> r_d;  // per m, nr x nr (scaled by rho_d)
  std::vector<CorrMat> t_d;  // per m, nt x nt
  std::vector<CorrMat> r_k;  // per k, nr x nr
  std::vector<CorrMat> s_r;  // per k, ns x ns
  std::vector<CorrMat> s_t;  // per (k,m) m-major, ns x ns
  std::vector<CorrMat> t_km; // per (k,m) m-major, nt x nt

  int pair(int k, int m) const { return m * num_riss + k; }
};

CorrelationSet build_correlation_set(const ScenarioConfig& config);

/// Binary-exact little-endian container (dims then row-major complex
/// doubles) for regression goldens.
void save_correlation_set(const CorrelationSet& set, const std::string& path);
CorrelationSet load_correlation_set(const std::string& path);

}  // namespace riscap
