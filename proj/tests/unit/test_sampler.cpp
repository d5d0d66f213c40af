#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dgpal/dgp.hpp"
#include "dgpal/sampler.hpp"
#include "support/stats.hpp"

using namespace dgpal;

namespace {

Matrix grid_design(Index n) {
  Matrix x(n, 1);
  for (Index i = 0; i < n; ++i) x(i, 0) = double(i) / double(n - 1);
  return x;
}

// Draws y ~ N(0, tau2 (K_theta(x) + g I)).
Vector simulate_gp(const Matrix& x, double theta, double g, double tau2,
                   Rng& rng) {
  Matrix cov = tau2 * cov_matrix(x, KernelParams{theta, 1.0, g});
  CholFactor chol = cholesky_jittered(cov);
  std::normal_distribution<double> gauss;
  Vector eta(x.rows());
  for (Index i = 0; i < eta.size(); ++i) eta(i) = gauss(rng);
  return chol.lower.triangularView<Eigen::Lower>() * eta;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("gamma_log_prior hand values") {
  CHECK(gamma_log_prior(1.0, PriorSpec{1.5, 3.9}) == doctest::Approx(-3.9));
  CHECK_THROWS_AS(gamma_log_prior(0.0, PriorSpec{1.5, 3.9}), DomainError);
  CHECK_THROWS_AS(gamma_log_prior(-1.0, PriorSpec{1.5, 3.9}), DomainError);
}

TEST_CASE("default nugget prior puts 95% of its mass below one") {
  // Closed-form CDF oracle for shape 3/2.
  CHECK(teststats::gamma15_cdf(1.0, 3.9) == doctest::Approx(0.95).epsilon(0.002));
}

TEST_CASE("dropped constant cancels in log-prior differences") {
  const PriorSpec prior{1.5, 2.6};
  auto full_density = [&](double x) {
    return prior.shape * std::log(prior.rate) - std::lgamma(prior.shape) +
           (prior.shape - 1.0) * std::log(x) - prior.rate * x;
  };
  const double ours = gamma_log_prior(1.7, prior) - gamma_log_prior(0.4, prior);
  const double oracle = full_density(1.7) - full_density(0.4);
  CHECK(ours == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("propose_window stays inside the sliding window") {
  Rng rng(3);
  const ProposalSpec spec{1.0, 2.0};
  for (int i = 0; i < 1000; ++i) {
    Proposal prop = propose_window(1.0, spec, rng);
    CHECK(prop.star >= 0.5);
    CHECK(prop.star <= 2.0);
    CHECK(prop.log_q_ratio ==
          doctest::Approx(std::log(1.0 / prop.star)).epsilon(1e-14));
  }
  // Symmetry point: the ratio vanishes when the proposal equals the state.
  CHECK(std::log(1.0) - std::log(1.0) == 0.0);
}

TEST_CASE("propose_window draws look uniform (KS test)") {
  Rng rng(5);
  const ProposalSpec spec{1.0, 2.0};
  const long n = 100000;
  std::vector<double> draws(n);
  for (long i = 0; i < n; ++i) draws[i] = propose_window(1.0, spec, rng).star;
  std::sort(draws.begin(), draws.end());
  double d = 0.0;
  for (long i = 0; i < n; ++i) {
    const double u = (draws[i] - 0.5) / 1.5;  // Unif(0.5, 2) CDF
    d = std::max(d, std::abs(u - double(i + 1) / n));
    d = std::max(d, std::abs(u - double(i) / n));
  }
  CHECK(teststats::ks_pvalue(d, n) > 0.01);
}

TEST_CASE("flat target leaves only the proposal ratio") {
  Rng rng(7);
  auto flat = [](double) { return 0.0; };
  const PriorSpec flat_prior{1.0, 0.0};
  const ProposalSpec spec{1.0, 2.0};
  long accepts = 0;
  const long trials = 40000;
  for (long i = 0; i < trials; ++i) {
    auto [value, accepted] = mh_update_scalar(1.0, flat, flat_prior, spec, rng);
    accepts += accepted;
  }
  // E[min(1, 1/star)] over star ~ Unif(0.5, 2).
  const double expected = (0.5 + std::log(2.0)) / 1.5;
  const double se = std::sqrt(expected * (1.0 - expected) / trials);
  CHECK(std::abs(double(accepts) / trials - expected) < 3.0 * se);
}

TEST_CASE("a sharply peaked target pins the chain at its mode") {
  Rng rng(9);
  auto peaked = [](double x) { return -1e12 * (x - 1.0) * (x - 1.0); };
  const PriorSpec prior{1.5, 3.9};
  double current = 1.0;
  for (int i = 0; i < 50; ++i) {
    auto [value, accepted] =
        mh_update_scalar(current, peaked, prior, ProposalSpec{1.0, 2.0}, rng);
    CHECK(value == 1.0);
    CHECK_FALSE(accepted);
  }
}

TEST_CASE("MH long-run matches a rejection-sampler oracle per decile") {
  // Target: Gamma(3/2, 2) prior times a Gaussian bump at 1.
  const PriorSpec prior{1.5, 2.0};
  auto loglik = [](double x) { return -(x - 1.0) * (x - 1.0) / 0.18; };

  Rng oracle_rng(11);
  std::gamma_distribution<double> gamma_draw(1.5, 0.5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> oracle;
  oracle.reserve(400000);
  for (long i = 0; i < 1000000; ++i) {
    const double x = gamma_draw(oracle_rng);
    if (std::log(u01(oracle_rng)) < loglik(x)) oracle.push_back(x);
  }
  REQUIRE(oracle.size() > 100000);
  std::sort(oracle.begin(), oracle.end());
  std::vector<double> edges(9);
  for (int k = 1; k <= 9; ++k) {
    edges[k - 1] = oracle[oracle.size() * k / 10];
  }

  Rng rng(13);
  double x = 1.0;
  const ProposalSpec spec{1.0, 2.0};
  std::vector<double> kept;
  const int thin = 20;
  const long sweeps = 200000;
  for (long i = 0; i < sweeps; ++i) {
    x = mh_update_scalar(x, loglik, prior, spec, rng).first;
    if (i % thin == thin - 1) kept.push_back(x);
  }

  // First-lag autocorrelation of the thinned chain inflates the binomial SE.
  const double mean = std::accumulate(kept.begin(), kept.end(), 0.0) / kept.size();
  double c0 = 0.0, c1 = 0.0;
  for (size_t i = 0; i < kept.size(); ++i) {
    c0 += (kept[i] - mean) * (kept[i] - mean);
    if (i + 1 < kept.size()) c1 += (kept[i] - mean) * (kept[i + 1] - mean);
  }
  const double rho = std::max(0.0, c1 / c0);
  const double infl = std::sqrt((1.0 + rho) / (1.0 - rho));

  std::vector<long> counts(10, 0);
  for (double v : kept) {
    int bin = static_cast<int>(
        std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
    ++counts[bin];
  }
  const double n = static_cast<double>(kept.size());
  for (int k = 0; k < 10; ++k) {
    const double se = std::sqrt(n * 0.1 * 0.9) * infl;
    CHECK(std::abs(counts[k] - 0.1 * n) < 3.0 * se);
  }
}

TEST_CASE("ess accepts the first proposal under a constant likelihood") {
  Rng rng(15);
  Matrix x = grid_design(10);
  CholFactor chol = cholesky_jittered(cov_matrix(x, KernelParams{0.5, 1.0, 0.0}));
  auto flat = [](const Vector&) { return 0.0; };
  for (int i = 0; i < 25; ++i) {
    EssResult res = ess_update(Vector::Zero(10), 0.0, chol, flat, rng);
    CHECK(res.shrinks == 0);
  }
}

TEST_CASE("ess recovers the prior under a constant likelihood") {
  Rng rng(17);
  Matrix x = grid_design(20);
  Matrix sigma = cov_matrix(x, KernelParams{0.6, 1.0, 1e-8});
  CholFactor chol = cholesky_jittered(sigma);
  auto flat = [](const Vector&) { return 0.0; };

  const int steps = 10000;
  Vector f = Vector::Zero(20);
  Vector sum = Vector::Zero(20);
  Vector sumsq = Vector::Zero(20);
  for (int t = 0; t < steps; ++t) {
    f = ess_update(f, 0.0, chol, flat, rng).f;
    sum += f;
    sumsq += f.cwiseProduct(f);
  }
  for (Index i = 0; i < 20; ++i) {
    const double mean = sum(i) / steps;
    const double var = sumsq(i) / steps - mean * mean;
    const double mc_se = std::sqrt(sigma(i, i) / steps);
    CHECK(std::abs(mean) < 3.0 * mc_se);
    CHECK(std::abs(var - sigma(i, i)) < 0.05 * sigma(i, i));
  }
}

TEST_CASE("ess treats non-finite likelihoods as rejections") {
  Rng rng(19);
  Matrix x = grid_design(6);
  CholFactor chol = cholesky_jittered(cov_matrix(x, KernelParams{0.5, 1.0, 0.0}));
  auto guarded = [](const Vector& f) {
    return f(0) > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
  };
  Vector f = Vector::Constant(6, -0.2);
  for (int i = 0; i < 50; ++i) {
    EssResult res = ess_update(f, guarded(f), chol, guarded, rng);
    f = res.f;
    CHECK(f(0) <= 0.0);
    CHECK(res.shrinks < 1000);
  }
}

TEST_CASE("ess is deterministic under a fixed seed") {
  Matrix x = grid_design(8);
  CholFactor chol = cholesky_jittered(cov_matrix(x, KernelParams{0.5, 1.0, 0.0}));
  auto fn = [](const Vector& f) { return -0.5 * f.squaredNorm(); };
  Rng rng_a(21), rng_b(21);
  Vector start = Vector::Ones(8);
  EssResult a = ess_update(start, fn(start), chol, fn, rng_a);
  EssResult b = ess_update(start, fn(start), chol, fn, rng_b);
  CHECK((a.f - b.f).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.loglik == b.loglik);
}

TEST_CASE("two-layer sweep bookkeeping at iters=1") {
  Rng data_rng(23);
  Matrix x = grid_design(8);
  Vector y = simulate_gp(x, 0.3, 0.05, 1.0, data_rng);
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.p = 2;
  cfg.iters = 1;
  cfg.burn = 0;
  cfg.thin = 1;
  cfg = cfg.resolved(1);

  Rng rng(25);
  Trace trace = gibbs_run(cfg, Dataset{x, y}, default_init(cfg, Dataset{x, y}),
                          1, rng);
  CHECK(trace.size() == 1);
  CHECK(trace.meta.g.attempts == 1);
  CHECK(trace.meta.theta_y.attempts == 1);
  REQUIRE(trace.meta.theta_w.size() == 2);
  CHECK(trace.meta.theta_w[0].attempts == 1);
  CHECK(trace.meta.theta_w[1].attempts == 1);
  CHECK(trace.meta.ess_updates == 2);
}

TEST_CASE("deterministic mode never moves the nugget") {
  Rng data_rng(27);
  Matrix x = grid_design(10);
  Vector y = simulate_gp(x, 0.3, 0.0, 1.0, data_rng);
  ModelConfig cfg;
  cfg.layers = 1;
  cfg.deterministic = true;
  cfg.iters = 50;
  cfg.burn = 0;
  cfg.thin = 1;

  FittedModel model = fit(cfg, Dataset{x, y}, 29);
  for (const auto& s : model.trace.states) CHECK(s.g == kNuggetFloor);
  CHECK(model.trace.meta.g.attempts == 0);
}

TEST_CASE("one-layer gibbs matches a dense grid posterior on two points") {
  Matrix x(2, 1);
  x << 0.25, 0.75;
  Vector y(2);
  y << 0.8, -0.4;
  Dataset data{x, y};

  ModelConfig cfg;
  cfg.layers = 1;
  cfg.iters = 120000;
  cfg.burn = 10000;
  cfg.thin = 5;
  cfg = cfg.resolved(1);

  // Grid oracle over a 200x200 lattice of (theta, g).
  const int m = 200;
  const double theta_hi = 8.0, g_hi = 6.0;
  double mass = 0.0, theta_mean = 0.0, g_mean = 0.0;
  for (int i = 0; i < m; ++i) {
    const double theta = (i + 0.5) * theta_hi / m;
    for (int j = 0; j < m; ++j) {
      const double g = (j + 0.5) * g_hi / m;
      const double lp = outer_loglik(y, x, theta, g).loglik +
                        gamma_log_prior(theta, cfg.prior_theta_y) +
                        gamma_log_prior(g, cfg.prior_g);
      const double w = std::exp(lp);
      mass += w;
      theta_mean += w * theta;
      g_mean += w * g;
    }
  }
  theta_mean /= mass;
  g_mean /= mass;

  FittedModel model = fit(cfg, data, 31);
  const Index nt = model.trace.size();
  Vector thetas(nt), gs(nt);
  for (Index t = 0; t < nt; ++t) {
    thetas(t) = model.trace.states[t].theta_y;
    gs(t) = model.trace.states[t].g;
  }

  // Batch-means MCSE.
  auto mcse = [](const Vector& v) {
    const int batches = 50;
    const Index len = v.size() / batches;
    Vector bm(batches);
    for (int b = 0; b < batches; ++b) bm(b) = v.segment(b * len, len).mean();
    const double grand = bm.mean();
    const double var = (bm.array() - grand).square().sum() / (batches - 1);
    return std::sqrt(var / batches);
  };
  CHECK(std::abs(thetas.mean() - theta_mean) < 3.0 * mcse(thetas));
  CHECK(std::abs(gs.mean() - g_mean) < 3.0 * mcse(gs));

  CHECK(model.trace.meta.g.rate() > 0.0);
  CHECK(model.trace.meta.g.rate() < 1.0);
  CHECK(model.trace.meta.theta_y.rate() > 0.0);
  CHECK(model.trace.meta.theta_y.rate() < 1.0);
}

TEST_CASE("gibbs runs are reproducible") {
  Rng data_rng(33);
  Matrix x = grid_design(9);
  Vector y = simulate_gp(x, 0.4, 0.1, 1.0, data_rng);
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.iters = 60;
  cfg.burn = 10;
  cfg.thin = 2;

  FittedModel a = fit(cfg, Dataset{x, y}, 35);
  FittedModel b = fit(cfg, Dataset{x, y}, 35);
  REQUIRE(a.trace.size() == b.trace.size());
  for (Index t = 0; t < a.trace.size(); ++t) {
    CHECK(a.trace.states[t].g == b.trace.states[t].g);
    CHECK(a.trace.states[t].theta_y == b.trace.states[t].theta_y);
    CHECK((a.trace.states[t].w - b.trace.states[t].w).cwiseAbs().maxCoeff() ==
          0.0);
  }
  CHECK(a.trace.meta.max_ess_shrinks < 1000);
}

TEST_CASE("trim bookkeeping") {
  Trace trace;
  for (int t = 1; t <= 10000; ++t) {
    ChainState s;
    s.g = t;
    trace.states.push_back(s);
    trace.iteration.push_back(t);
  }
  Trace same = trim(trace, 0, 1);
  CHECK(same.size() == 10000);
  Trace kept = trim(trace, 6000, 2);
  CHECK(kept.size() == 2000);
  CHECK(kept.iteration.front() == 6001);
  CHECK(kept.iteration.back() == 9999);
  CHECK_THROWS_AS(trim(trace, 10000, 1), EmptyTrace);
}

}  // TEST_SUITE
