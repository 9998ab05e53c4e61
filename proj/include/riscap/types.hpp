// SPDX-License-Identifier: Apache-2.0
//
// riscap: asymptotic sum-rate statistics and phase optimization for
// multi-RIS MIMO multiple-access channels.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace riscap {

using cxd = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatD = Eigen::MatrixXd;
using VecD = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

inline constexpr double pi = std::numbers::pi;

inline constexpr const char* version_string = "0.1.0";

/// Invalid configuration or scenario input (CLI exit code 2).
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: non-convergence, indefinite matrix, NaN (CLI exit code 3).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double deg_to_rad(double deg) { return deg * pi / 180.0; }

inline double rad_to_deg(double rad) { return rad * 180.0 / pi; }

/// Standard normal CDF via erfc (documented: Phi(x) = erfc(-x/sqrt(2))/2).
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace riscap
