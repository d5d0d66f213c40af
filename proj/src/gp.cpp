#include "dgpal/gp.hpp"

#include <cmath>

namespace dgpal {

ProfiledLik outer_loglik(const Vector& y, const CholFactor& chol) {
  const auto n = static_cast<double>(y.size());
  if (y.size() != chol.dim()) {
    throw DimensionMismatch("outer_loglik: y does not match covariance");
  }
  const double tau2hat = invquad(chol, y) / n;
  if (!(tau2hat > 0.0)) {
    throw DomainError("outer_loglik: profiled scale is zero (constant y?)");
  }
  const double loglik =
      -0.5 * n * std::log(n * tau2hat) - 0.5 * logdet(chol);
  return ProfiledLik{loglik, tau2hat};
}

ProfiledLik outer_loglik(const Vector& y, const Matrix& w, double theta_y,
                         double g) {
  Matrix c = cov_matrix(w, KernelParams{theta_y, 1.0, g});
  return outer_loglik(y, cholesky_jittered(c));
}

double latent_node_loglik(const Vector& wi, const CholFactor& chol) {
  if (wi.size() != chol.dim()) {
    throw DimensionMismatch("latent_node_loglik: node does not match design");
  }
  return -0.5 * logdet(chol) - 0.5 * invquad(chol, wi);
}

double latent_node_loglik(const Vector& wi, const Matrix& z, double theta) {
  Matrix k = cov_matrix(z, KernelParams{theta, 1.0, 0.0});
  return latent_node_loglik(wi, cholesky_jittered(k));
}

double latent_loglik(const Matrix& w, const Matrix& z,
                     const Vector& theta_w) {
  if (w.cols() != theta_w.size()) {
    throw DimensionMismatch("latent_loglik: one lengthscale per node required");
  }
  double total = 0.0;
  for (Index i = 0; i < w.cols(); ++i) {
    total += latent_node_loglik(w.col(i), z, theta_w(i));
  }
  return total;
}

PredictiveMoments conditional_moments(const Vector& ytrain,
                                      const Matrix& xtrain,
                                      const Matrix& xtest,
                                      const KernelParams& p,
                                      bool noise_free_test, bool pointwise) {
  p.validate();
  if (ytrain.size() != xtrain.rows()) {
    throw DimensionMismatch("conditional_moments: y does not match design");
  }
  if (xtrain.cols() != xtest.cols()) {
    throw DimensionMismatch("conditional_moments: train/test dim mismatch");
  }

  // Scale cancels in the mean, so all solves run on K + g I.
  Matrix c = cov_matrix(xtrain, KernelParams{p.theta, 1.0, p.g});
  CholFactor chol = cholesky_jittered(c);
  Matrix cross = cross_cov(xtest, xtrain, p.theta);  // n' x n

  PredictiveMoments out;
  out.mean = cross * solve_spd(chol, ytrain);
  out.dof = static_cast<double>(ytrain.size());
  out.pointwise = pointwise;

  const double test_diag = 1.0 + (noise_free_test ? 0.0 : p.g);
  // Half-solve: columns of vhalf are L^{-1} k(x*), so k' C^{-1} k is a
  // column squared norm.
  Matrix vhalf =
      chol.lower.triangularView<Eigen::Lower>().solve(Matrix(cross.transpose()));
  if (pointwise) {
    Vector reduction = vhalf.colwise().squaredNorm().transpose();
    out.variance = p.tau2 * (test_diag - reduction.array()).matrix();
  } else {
    Matrix ktest = cross_cov(xtest, xtest, p.theta);
    ktest.diagonal().array() = test_diag;
    Matrix cov = p.tau2 * (ktest - vhalf.transpose() * vhalf);
    out.covariance = 0.5 * (cov + cov.transpose());
    out.variance = out.covariance.diagonal();
  }
  return out;
}

}  // namespace dgpal
