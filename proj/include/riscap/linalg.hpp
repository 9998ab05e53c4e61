// SPDX-License-Identifier: Apache-2.0
//
// Small dense linear-algebra helpers shared across modules: Hermitian PSD
// square roots, stable log-determinants, PSD eigenvalue clipping.

#pragma once

#include "riscap/types.hpp"

namespace riscap {

/// Max |A - A^H| entry, as a Hermitian-ness measure.
double hermiticity_defect(const MatC& a);

/// Eigenvalues of a Hermitian matrix, ascending. Negative values within
/// -1e-10 * lambda_max are clipped to zero; anything more negative throws.
VecD psd_eigenvalues(const MatC& a);

/// B with B*B = A for Hermitian PSD A (spectral square root, Hermitian PSD).
MatC matrix_sqrt_hermitian(const MatC& a);

/// log det(I + A) for Hermitian PSD A via Cholesky of I + A.
double logdet_identity_plus_hermitian(const MatC& a);

/// log det of a real matrix together with the sign of the determinant.
/// Returns {log|det|, sign in {-1, 0, +1}}.
std::pair<double, int> logabsdet_real(const MatD& a);

}  // namespace riscap
