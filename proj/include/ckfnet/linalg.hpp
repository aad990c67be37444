#pragma once

#include "ckfnet/matrix.hpp"

namespace ckfnet {

/**
 * @brief Cholesky factorization of a symmetric positive definite matrix.
 *
 * The input is symmetrized as (P + Pᵀ)/2 before factoring; filter covariance
 * updates accumulate asymmetry on the order of 1e-15 per step.
 *
 * Throws NotPositiveDefinite when any pivot falls at or below 1e-12.
 */
SpdFactor cholesky(const Matrix& p);

/// Solves L y = b for lower-triangular L.
Vector solve_lower(const Matrix& l, const Vector& b);

/// Solves Lᵀ y = b for lower-triangular L.
Vector solve_lower_transpose(const Matrix& l, const Vector& b);

/// Solves (L Lᵀ) X = B column by column.
Matrix solve_with_factor(const SpdFactor& factor, const Matrix& b);
Vector solve_with_factor(const SpdFactor& factor, const Vector& b);

/// Solves P X = B for SPD P via Cholesky. Never forms an explicit inverse.
Matrix spd_solve(const Matrix& p, const Matrix& b);
Vector spd_solve(const Matrix& p, const Vector& b);

struct SymmetricEigen {
    Vector values;    ///< eigenvalues, sorted descending
    Matrix vectors;   ///< orthogonal; column k pairs with values[k]
};

/**
 * @brief Symmetric eigendecomposition by cyclic Jacobi sweeps.
 *
 * Suited to the small (≤ ~6x6) covariances used here. Throws NoConvergence
 * after 100 sweeps.
 */
SymmetricEigen jacobi_eigen(const Matrix& p);

/**
 * @brief Rescales each eigenvalue of an SPD matrix by the matching factor.
 *
 * Factors pair with eigenvalues in descending order and must lie in
 * [0.8, 1.2]; the result Q diag(λ ⊙ factors) Qᵀ is symmetric SPD.
 */
Matrix spd_perturb(const Matrix& p, const Vector& factors);

/**
 * @brief Reverse-mode sensitivity of a lower Cholesky factorization.
 *
 * Given L = chol(A) and the loss gradient w.r.t. L, returns a gradient
 * w.r.t. A valid for symmetric perturbations of A.
 */
Matrix cholesky_reverse(const Matrix& l, const Matrix& l_bar);

/// (P + Pᵀ)/2 in place.
void symmetrize(Matrix& p);

}  // namespace ckfnet
