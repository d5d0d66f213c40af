#pragma once

#include "dgpal/errors.hpp"
#include "dgpal/types.hpp"

namespace dgpal {

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
struct CholFactor {
  Matrix lower;

  Index dim() const { return lower.rows(); }
};

/// Factor a symmetric positive definite matrix; throws NotPositiveDefinite.
CholFactor cholesky(const Matrix& a);

/// Factor with the jitter policy for nominally noiseless covariances: on
/// failure add `jitter` to the diagonal and retry once, then fail hard.
CholFactor cholesky_jittered(const Matrix& a, double jitter = kJitter);

/// log |A| from its factor: 2 * sum(log L_ii).
double logdet(const CholFactor& f);

/// Solve A x = b via forward/back substitution.
Vector solve_spd(const CholFactor& f, const Vector& b);
Matrix solve_spd(const CholFactor& f, const Matrix& b);

/// Dense inverse of the factored matrix.
Matrix inverse_spd(const CholFactor& f);

/// Quadratic form b' A^{-1} b.
double invquad(const CholFactor& f, const Vector& b);

/// Rank-one border extension of an inverse covariance.  With
/// C = [[C_n, k], [k', corner]] and base_inv = C_n^{-1}, the inverse of C is
///   [[C_n^{-1} + h h' v, h], [h', 1/v]]
/// where v = corner - k' C_n^{-1} k and h = -C_n^{-1} k / v.
struct PartitionedInverse {
  double v;
  Vector h;

  /// Assemble the full (n+1) x (n+1) inverse from the base inverse.
  Matrix assemble(const Matrix& base_inv) const;
};

/// Throws DegenerateUpdate when v <= 1e-12 (new point numerically duplicates
/// an existing one).
PartitionedInverse extend_inverse(const Matrix& base_inv, const Vector& k,
                                  double corner);

}  // namespace dgpal
