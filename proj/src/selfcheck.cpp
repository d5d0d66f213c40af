#include "dgpal/selfcheck.hpp"

#include <cmath>
#include <sstream>

#include "dgpal/sampler.hpp"

namespace dgpal::selfcheck {

namespace {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// tau2 * k' C^{-1} k summed over the reference rows, via a dense LU inverse.
// Extended precision keeps the small with/without difference meaningful at
// the 1e-10 relative tolerance.
LongVector quadforms(const Matrix& design, const Matrix& ref, double theta_y,
                     double g, double tau2hat) {
  LongMatrix c =
      cov_matrix(design, KernelParams{theta_y, 1.0, g}).cast<long double>();
  LongMatrix c_inv = c.inverse();
  LongMatrix k = cross_cov(ref, design, theta_y).cast<long double>();
  return static_cast<long double>(tau2hat) *
         (k * c_inv).cwiseProduct(k).rowwise().sum();
}

}  // namespace

double alc_brute_force(const Vector& w_new, const Matrix& w_ref,
                       const Matrix& w_train, double theta_y, double g,
                       double tau2hat) {
  Matrix augmented(w_train.rows() + 1, w_train.cols());
  augmented.topRows(w_train.rows()) = w_train;
  augmented.bottomRows(1) = w_new.transpose();
  const LongVector with_cand = quadforms(augmented, w_ref, theta_y, g, tau2hat);
  const LongVector without = quadforms(w_train, w_ref, theta_y, g, tau2hat);
  return static_cast<double>((with_cand - without).sum());
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  const double fa = f(a);
  const double fm = f(0.5 * (a + b));
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

double imse_quadrature_1d(const Matrix& w_n1, double theta_y, double g,
                          double tau2hat, const Bounds& bounds, double tol) {
  if (w_n1.cols() != 1) {
    throw DimensionMismatch("imse_quadrature_1d: p = 1 only");
  }
  Matrix c = cov_matrix(w_n1, KernelParams{theta_y, 1.0, g});
  Matrix c_inv = c.inverse();
  auto integrand = [&](double w) {
    Matrix point(1, 1);
    point(0, 0) = w;
    Vector k = cross_cov(w_n1, point, theta_y).col(0);
    return tau2hat * (1.0 - k.dot(c_inv * k));
  };
  return adaptive_simpson(integrand, bounds.a(0), bounds.b(0), tol);
}

double imse_monte_carlo(const Matrix& w_n1, double theta_y, double g,
                        double tau2hat, const Bounds& bounds, long n_samples,
                        Rng& rng) {
  Matrix c = cov_matrix(w_n1, KernelParams{theta_y, 1.0, g});
  Matrix c_inv = c.inverse();
  const Index p = w_n1.cols();
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  double total = 0.0;
  long done = 0;
  const long chunk = 20000;
  Matrix draws(chunk, p);
  while (done < n_samples) {
    const long m = std::min(chunk, n_samples - done);
    for (long i = 0; i < m; ++i) {
      for (Index j = 0; j < p; ++j) {
        draws(i, j) = bounds.a(j) + (bounds.b(j) - bounds.a(j)) * u01(rng);
      }
    }
    Matrix k = cross_cov(draws.topRows(m), w_n1, theta_y);
    total += (1.0 - (k * c_inv).cwiseProduct(k).rowwise().sum().array()).sum();
    done += m;
  }
  return tau2hat * bounds.volume() * total / static_cast<double>(n_samples);
}

namespace {

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

std::string describe(double worst, double tol) {
  std::ostringstream ss;
  ss << "max relative error " << worst << " (tolerance " << tol << ")";
  return ss.str();
}

Matrix random_points(Index n, Index p, Rng& rng, double spread = 1.0) {
  std::normal_distribution<double> gauss(0.0, spread);
  Matrix out(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) out(i, j) = gauss(rng);
  }
  return out;
}

CheckResult check_partitioned_inverse(Rng& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 2 + static_cast<Index>(rng() % 11);
    const Index p = 1 + static_cast<Index>(rng() % 3);
    Matrix w = random_points(n + 1, p, rng);
    const double theta = 0.5 + 2.5 * std::generate_canonical<double, 53>(rng);
    const double g = 0.01 + 0.1 * std::generate_canonical<double, 53>(rng);
    Matrix c = cov_matrix(w, KernelParams{theta, 1.0, g});
    Matrix base = c.topLeftCorner(n, n);
    Matrix base_inv = base.inverse();
    PartitionedInverse ext =
        extend_inverse(base_inv, c.topRightCorner(n, 1), c(n, n));
    Matrix assembled = ext.assemble(base_inv);
    Matrix direct = c.inverse();
    worst = std::max(worst, (assembled - direct).norm() / direct.norm());
  }
  return CheckResult{"partitioned-inverse", worst <= 1e-10,
                     describe(worst, 1e-10)};
}

CheckResult check_alc(Rng& rng, double perturbation) {
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 3 + static_cast<Index>(rng() % 10);
    const Index p = 1 + static_cast<Index>(rng() % 3);
    Matrix w = random_points(n, p, rng);
    Matrix ref = random_points(10, p, rng);
    Vector w_new = random_points(1, p, rng).row(0).transpose();
    const double theta = 0.5 + 2.5 * std::generate_canonical<double, 53>(rng);
    const double g = 0.01 + 0.1 * std::generate_canonical<double, 53>(rng);
    const double tau2 = 0.5 + std::generate_canonical<double, 53>(rng);

    AcqPrecompute pre = acq_precompute(w, theta, g, tau2, Bounds{},
                                       Criterion::Alc, ref);
    const double fast = alc(w_new, ref, pre, w) + perturbation;
    const double brute = alc_brute_force(w_new, ref, w, theta, g, tau2);
    worst = std::max(worst, rel_err(fast, brute));
  }
  return CheckResult{"alc-fast-vs-brute", worst <= 1e-10,
                     describe(worst, 1e-10)};
}

CheckResult check_imse(Rng& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const Index n = 3 + static_cast<Index>(rng() % 6);
    Matrix w_n1 = random_points(n + 1, 1, rng);
    const double theta = 0.5 + 2.0 * std::generate_canonical<double, 53>(rng);
    const double g = 0.01 + 0.05 * std::generate_canonical<double, 53>(rng);
    const double tau2 = 0.5 + std::generate_canonical<double, 53>(rng);
    Bounds bounds;
    bounds.a = Vector::Constant(1, w_n1.minCoeff() - 0.5);
    bounds.b = Vector::Constant(1, w_n1.maxCoeff() + 0.5);

    const double closed = imse(w_n1, theta, g, tau2, bounds);
    const double quad = imse_quadrature_1d(w_n1, theta, g, tau2, bounds);
    worst = std::max(worst, rel_err(closed, quad));
  }
  return CheckResult{"imse-vs-quadrature", worst <= 1e-6,
                     describe(worst, 1e-6)};
}

CheckResult check_ess_prior(Rng& rng) {
  const Index n = 20;
  Matrix x = random_points(n, 1, rng, 0.5);
  Matrix sigma = cov_matrix(x, KernelParams{0.7, 1.0, 1e-6});
  CholFactor chol = cholesky_jittered(sigma);
  auto flat = [](const Vector&) { return 0.0; };

  const int steps = 20000;
  Vector f = Vector::Zero(n);
  Vector sum = Vector::Zero(n);
  Vector sumsq = Vector::Zero(n);
  for (int t = 0; t < steps; ++t) {
    f = ess_update(f, 0.0, chol, flat, rng).f;
    sum += f;
    sumsq += f.cwiseProduct(f);
  }
  Vector mean = sum / steps;
  Vector var = sumsq / steps - mean.cwiseProduct(mean);

  bool pass = true;
  double worst_mean = 0.0;
  double worst_var = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double sd = std::sqrt(sigma(i, i));
    const double mc_se = sd / std::sqrt(double(steps));
    worst_mean = std::max(worst_mean, std::abs(mean(i)) / (3.0 * mc_se));
    worst_var = std::max(worst_var, std::abs(var(i) - sigma(i, i)) / sigma(i, i));
    if (std::abs(mean(i)) > 3.0 * mc_se) pass = false;
    if (std::abs(var(i) - sigma(i, i)) > 0.05 * sigma(i, i)) pass = false;
  }
  std::ostringstream ss;
  ss << "mean error " << worst_mean << " of 3 MC SE budget; variance error "
     << worst_var << " of 0.05 budget";
  return CheckResult{"ess-prior-recovery", pass, ss.str()};
}

}  // namespace

std::vector<CheckResult> run_all(std::uint64_t seed, double perturbation) {
  Rng rng(seed);
  std::vector<CheckResult> results;
  results.push_back(check_partitioned_inverse(rng));
  results.push_back(check_alc(rng, perturbation));
  results.push_back(check_imse(rng));
  results.push_back(check_ess_prior(rng));
  return results;
}

}  // namespace dgpal::selfcheck
