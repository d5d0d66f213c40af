#pragma once

#include "dgpal/errors.hpp"
#include "dgpal/types.hpp"

namespace dgpal {

/// Hyperparameters of one MVN layer under the isotropic Gaussian kernel:
/// lengthscale theta, scale tau2, and nugget g (a proportion of tau2).
struct KernelParams {
  double theta;
  double tau2 = 1.0;
  double g = 0.0;

  void validate() const {
    if (!(theta > 0.0)) throw DomainError("KernelParams: theta must be > 0");
    if (!(tau2 > 0.0)) throw DomainError("KernelParams: tau2 must be > 0");
    if (g < 0.0) throw DomainError("KernelParams: g must be >= 0");
  }
};

/// Pairwise squared Euclidean distances between rows of a and rows of b.
Matrix sq_dist(const Matrix& a, const Matrix& b);

/// Symmetric variant with an exactly zero diagonal.
Matrix sq_dist(const Matrix& a);

/// Covariance of a design with itself: tau2 * (exp(-dist2/theta) + g I).
Matrix cov_matrix(const Matrix& x, const KernelParams& p);

/// Unit-scale, nugget-free correlations exp(-dist2/theta) between two designs.
Matrix cross_cov(const Matrix& a, const Matrix& b, double theta);

/// Correlations between rows of a and a single point.
Vector cross_cov_point(const Matrix& a, const Vector& point, double theta);

}  // namespace dgpal
