#pragma once

#include <string>
#include <vector>

#include "dgpal/acquisition.hpp"

namespace dgpal::selfcheck {

/// Brute-force ALC through dense inverses of C_n and C_{n+1}: the summed
/// variance reduction over the reference set, dropping the candidate-free
/// constant.  Independent of the bordered-inverse fast path.
double alc_brute_force(const Vector& w_new, const Matrix& w_ref,
                       const Matrix& w_train, double theta_y, double g,
                       double tau2hat);

/// Adaptive Simpson quadrature of the deduced predictive variance over
/// [a, b] (p = 1 only).  Independent of the closed-form H-matrix path.
double imse_quadrature_1d(const Matrix& w_n1, double theta_y, double g,
                          double tau2hat, const Bounds& bounds,
                          double tol = 1e-10);

/// Monte Carlo quadrature of the same integrand over the bounds box.
double imse_monte_carlo(const Matrix& w_n1, double theta_y, double g,
                        double tau2hat, const Bounds& bounds, long n_samples,
                        Rng& rng);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// The oracle suite behind `dgpal selfcheck`: partitioned inverse vs direct
/// inversion, fast ALC vs brute force, closed-form IMSE vs quadrature, and
/// ESS prior recovery.  `perturbation` injects an error into the fast ALC
/// value; nonzero values must make the suite fail (testing hook).
std::vector<CheckResult> run_all(std::uint64_t seed, double perturbation = 0.0);

}  // namespace dgpal::selfcheck
