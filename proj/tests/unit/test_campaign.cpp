#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dgpal/campaign.hpp"
#include "dgpal/io.hpp"
#include "support/stats.hpp"

using namespace dgpal;

TEST_SUITE("campaign") {

TEST_CASE("lhs keeps one point per stratum") {
  Rng rng(3);
  Matrix single = lhs(1, 3, rng);
  for (Index j = 0; j < 3; ++j) {
    CHECK(single(0, j) > 0.0);
    CHECK(single(0, j) < 1.0);
  }

  Matrix design = lhs(10, 1, rng);
  std::vector<double> coords(design.col(0).begin(), design.col(0).end());
  std::sort(coords.begin(), coords.end());
  for (int k = 0; k < 10; ++k) {
    CHECK(coords[k] >= k / 10.0);
    CHECK(coords[k] < (k + 1) / 10.0);
  }
}

TEST_CASE("lhs marginals are uniform within strata (chi-square)") {
  Rng rng(5);
  const int designs = 10000, n = 5, bins = 50;
  std::vector<long> counts(bins, 0);
  for (int rep = 0; rep < designs; ++rep) {
    Matrix design = lhs(n, 1, rng);
    for (Index i = 0; i < n; ++i) {
      int bin = static_cast<int>(design(i, 0) * bins);
      ++counts[std::min(bin, bins - 1)];
    }
  }
  const double expected = double(designs) * n / bins;
  double chi2 = 0.0;
  for (long c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(teststats::chi2_sf(chi2, bins - 1) > 0.01);
}

TEST_CASE("piecewise test function values") {
  CHECK(f_piecewise_1d(0.0) == doctest::Approx(1.35));
  CHECK(f_piecewise_1d(0.5) == doctest::Approx(1.35));
  CHECK(f_piecewise_1d(0.25) == doctest::Approx(-1.35));
  CHECK(f_piecewise_1d(0.33) == doctest::Approx(1.35));
  CHECK(f_piecewise_1d(0.66) == doctest::Approx(1.35));
  CHECK_THROWS_AS(f_piecewise_1d(-0.01), DomainError);
  CHECK_THROWS_AS(f_piecewise_1d(1.01), DomainError);
}

TEST_CASE("exponential 2d test function values") {
  CHECK(f_exp_2d(0.0, 3.7) == doctest::Approx(0.0));
  CHECK(f_exp_2d(1.0, 0.0) == doctest::Approx(10.0 * std::exp(-1.0)));
  CHECK(f_exp_2d(1.3, 0.8) == doctest::Approx(f_exp_2d(1.3, -0.8)));
  CHECK_THROWS_AS(f_exp_2d(4.5, 0.0), DomainError);
}

TEST_CASE("blackbox noise obeys its standard deviation") {
  Blackbox bb = make_builtin_1d(0.0);
  Rng rng(7);
  Vector x = Vector::Constant(1, 0.4);
  CHECK(evaluate_blackbox(bb, x, rng) == doctest::Approx(f_piecewise_1d(0.4)));

  Blackbox noisy = make_builtin_1d(0.1);
  const int reps = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < reps; ++i) {
    const double v = evaluate_blackbox(noisy, x, rng);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / reps;
  const double sd = std::sqrt(sumsq / reps - mean * mean);
  CHECK(std::abs(sd - 0.1) < 0.005);
  CHECK_THROWS_AS(evaluate_blackbox(noisy, Vector::Constant(1, 1.5), rng),
                  DomainError);
}

TEST_CASE("external blackbox speaks the line protocol") {
  Matrix domain(1, 2);
  domain << 0.0, 1.0;
  Blackbox echo =
      make_external("while read line; do echo 1.5; done", domain, 0.0);
  Rng rng(9);
  CHECK(evaluate_blackbox(echo, Vector::Constant(1, 0.3), rng) ==
        doctest::Approx(1.5));
  CHECK(evaluate_blackbox(echo, Vector::Constant(1, 0.9), rng) ==
        doctest::Approx(1.5));

  Blackbox coded = make_external(
      "while read a; do echo $a; done", domain, 0.0);
  CHECK(evaluate_blackbox(coded, Vector::Constant(1, 0.25), rng) ==
        doctest::Approx(0.25));

  Blackbox dead = make_external("exit 0", domain, 0.0);
  CHECK_THROWS_AS(evaluate_blackbox(dead, Vector::Constant(1, 0.5), rng),
                  ExternalFailure);
  Blackbox garbled =
      make_external("while read line; do echo nonsense; done", domain, 0.0);
  CHECK_THROWS_AS(evaluate_blackbox(garbled, Vector::Constant(1, 0.5), rng),
                  ExternalFailure);
}

TEST_CASE("rmse hand values") {
  Vector a(2), b(2);
  a << 0.0, 0.0;
  b << 3.0, 4.0;
  CHECK(rmse(a, a) == doctest::Approx(0.0));
  Vector offset = a.array() + 2.5;
  CHECK(rmse(offset, a) == doctest::Approx(2.5));
  CHECK(rmse(a, b) == doctest::Approx(std::sqrt(12.5)));
  CHECK_THROWS_AS(rmse(a, Vector::Zero(3)), DimensionMismatch);
}

TEST_CASE("score hand values") {
  Vector truth(2), mean(2), var(2);
  truth << 0.4, -0.2;
  mean = truth;
  var << 1.0, 1.0;
  CHECK(score(mean, var, truth) == doctest::Approx(0.0));

  const double c = 3.0;
  CHECK(score(mean, Vector(c * var), truth) == doctest::Approx(-std::log(c)));

  Vector mu(2), sigma2(2), y(2);
  mu << 0.0, 0.0;
  sigma2 << 1.0, 4.0;
  y << 1.0, 2.0;
  CHECK(score(mu, sigma2, y) ==
        doctest::Approx(0.5 * (-1.0 - std::log(4.0) - 1.0)));
  sigma2(0) = 0.0;
  CHECK_THROWS_AS(score(mu, sigma2, y), DomainError);
}

TEST_CASE("standardization round-trips constants") {
  ModelTransforms t;
  t.x_lo = Vector::Zero(1);
  t.x_hi = Vector::Ones(1);
  Vector constant = Vector::Constant(6, 4.2);
  t.y_mean = constant.mean();
  t.y_sd = 1.0;
  Vector coded = t.standardize(constant);
  CHECK((t.mean_to_natural(coded) - constant).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("candidate draws avoid already-acquired points") {
  // Find what the generator would draw first, then poison it.
  Rng probe(11);
  Matrix no_clash = draw_candidates(1, Matrix::Zero(1, 2), probe);

  Rng rng(11);
  Matrix acquired = no_clash;
  Matrix cand = draw_candidates(1, acquired, rng);
  CHECK((cand.row(0).array() != acquired.row(0).array()).any());
}

TEST_CASE("zero-budget campaign emits only the initial metrics") {
  CampaignConfig cfg;
  cfg.blackbox = make_builtin_1d(0.1);
  cfg.n0 = 6;
  cfg.n_final = 6;
  cfg.n_cand = 10;
  cfg.model.layers = 1;
  cfg.model.iters = 150;
  cfg.model.burn = 50;
  cfg.model.thin = 1;
  cfg.first_iters = 150;
  cfg.first_burn = 50;
  cfg.first_thin = 1;
  cfg.test_n = 25;
  cfg.seed = 13;
  cfg.timing = false;

  CampaignHistory history = run_campaign(cfg);
  CHECK_FALSE(history.error.has_value());
  REQUIRE(history.records.size() == 1);
  CHECK(history.records[0].step == 0);
  CHECK(history.records[0].n == 6);
  CHECK(history.records[0].rmse_value.has_value());
  CHECK(history.records[0].score_value.has_value());
  CHECK_FALSE(history.records[0].has_point);
}

TEST_CASE("small campaign bookkeeping and reproducibility") {
  CampaignConfig cfg;
  cfg.blackbox = make_builtin_1d(0.1);
  cfg.n0 = 5;
  cfg.n_final = 9;
  cfg.n_cand = 20;
  cfg.criterion = Criterion::Alc;
  cfg.model.layers = 1;
  cfg.model.iters = 200;
  cfg.model.burn = 50;
  cfg.model.thin = 2;
  cfg.first_iters = 300;
  cfg.first_burn = 100;
  cfg.first_thin = 2;
  cfg.eval_every = 2;
  cfg.test_n = 30;
  cfg.seed = 99;
  cfg.timing = false;

  CampaignHistory a = run_campaign(cfg);
  CHECK_FALSE(a.error.has_value());
  REQUIRE(a.records.size() == 5);  // step 0 plus n_final - n0 acquisitions
  for (size_t i = 1; i < a.records.size(); ++i) {
    CHECK(a.records[i].n == 5 + static_cast<int>(i));
    CHECK(a.records[i].has_point);
    CHECK(a.records[i].x(0) >= 0.0);
    CHECK(a.records[i].x(0) <= 1.0);
  }
  // Metrics at even steps (eval_every = 2) and at the final step.
  CHECK_FALSE(a.records[1].rmse_value.has_value());
  CHECK(a.records[2].rmse_value.has_value());
  CHECK(a.records[4].rmse_value.has_value());

  CampaignHistory b = run_campaign(cfg);
  REQUIRE(b.records.size() == a.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].n == b.records[i].n);
    if (a.records[i].has_point) {
      CHECK(a.records[i].x(0) == b.records[i].x(0));
      CHECK(a.records[i].y == b.records[i].y);
    }
    if (a.records[i].rmse_value) {
      CHECK(*a.records[i].rmse_value == *b.records[i].rmse_value);
      CHECK(*a.records[i].score_value == *b.records[i].score_value);
    }
  }
}

}  // TEST_SUITE
