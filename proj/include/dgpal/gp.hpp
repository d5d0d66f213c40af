#pragma once

#include "dgpal/kernel.hpp"
#include "dgpal/linalg.hpp"

namespace dgpal {

/// Outer-layer log likelihood with the scale profiled out under the
/// reference prior, plus the profiled scale estimate itself.
struct ProfiledLik {
  double loglik;
  double tau2hat;
};

/// Marginal log likelihood of the response layer (up to an additive
/// constant): -(n/2) log(n tau2hat) - 1/2 log|K_theta(w) + g I|, with
/// tau2hat = y' (K + g I)^{-1} y / n.
ProfiledLik outer_loglik(const Vector& y, const Matrix& w, double theta_y,
                         double g);

/// Same, reusing the factor of K_theta(w) + g I.
ProfiledLik outer_loglik(const Vector& y, const CholFactor& chol);

/// Unit-scale noiseless node log likelihood -1/2 log|K_theta(z)| -
/// 1/2 w_i' K_theta(z)^{-1} w_i (jitter policy applies).
double latent_node_loglik(const Vector& wi, const Matrix& z, double theta);
double latent_node_loglik(const Vector& wi, const CholFactor& chol);

/// Sum of node log likelihoods over the columns of w.
double latent_loglik(const Matrix& w, const Matrix& z, const Vector& theta_w);

/// Gaussian predictive moments; either pointwise variances or the full
/// covariance.  dof carries the effective degrees of freedom (n).
struct PredictiveMoments {
  Vector mean;
  Vector variance;
  Matrix covariance;  // empty in pointwise mode
  double dof = 0.0;
  bool pointwise = true;
};

/// Conditional predictive moments of a single GP layer.  With
/// noise_free_test the nugget is dropped from the test-block diagonal only;
/// the training-side inverse keeps it.
PredictiveMoments conditional_moments(const Vector& ytrain,
                                      const Matrix& xtrain,
                                      const Matrix& xtest,
                                      const KernelParams& p,
                                      bool noise_free_test, bool pointwise);

}  // namespace dgpal
