#pragma once

#include <memory>
#include <optional>
#include <string>

#include "dgpal/acquisition.hpp"

namespace dgpal {

double f_piecewise_1d(double x);
double f_exp_2d(double x1, double x2);

/// Latin hypercube sample on (0,1)^d: each dimension holds exactly one
/// point per stratum [k/n, (k+1)/n).
Matrix lhs(int n, int d, Rng& rng);

double rmse(const Vector& pred_mean, const Vector& truth);

/// Pointwise logarithmic score (larger is better), averaged over test
/// points: mean of -log var - (y - mean)^2 / var.
double score(const Vector& pred_mean, const Vector& pred_var,
             const Vector& truth);

/// Joint-covariance variant of the score: (-log|S| - r' S^{-1} r) / n'.
double score_full(const Vector& pred_mean, const Matrix& pred_cov,
                  const Vector& truth);

class ExternalProcess;  // line-protocol child process (campaign.cpp)

enum class BlackboxKind { Builtin1d, Builtin2d, External };

/// A response source: one of the built-in test functions on its fixed
/// domain, or an external command speaking one coded input vector per line
/// in and one numeric response per line out.
struct Blackbox {
  BlackboxKind kind = BlackboxKind::Builtin1d;
  double noise_sd = 0.1;
  Matrix domain;  // d x 2, lower/upper per dimension
  std::string command;
  std::shared_ptr<ExternalProcess> process;  // lazily spawned

  Index dim() const { return domain.rows(); }
};

Blackbox make_builtin_1d(double noise_sd = 0.1);
Blackbox make_builtin_2d(double noise_sd = 0.1);
Blackbox make_external(std::string command, Matrix domain,
                       double noise_sd = 0.0);

/// Evaluate at a natural-units point (must lie in the domain); adds
/// N(0, noise_sd^2) noise.  External commands receive the coordinates coded
/// to the unit cube.
double evaluate_blackbox(Blackbox& bb, const Vector& x, Rng& rng);

/// Noiseless builtin value at a natural-units point (test-set truth).
double blackbox_truth(Blackbox& bb, const Vector& x);

struct CampaignConfig {
  Blackbox blackbox;
  int n0 = 10;
  int n_final = 35;
  int n_cand = 100;
  Criterion criterion = Criterion::Alc;
  ModelConfig model;  // per-step chain lengths live in model.iters/burn/thin
  int first_iters = 10000;
  int first_burn = 6000;
  int first_thin = 2;
  int eval_every = 1;
  int test_n = 200;
  std::optional<Dataset> test_set;  // natural units, truth in y
  LatentMode latent_mode = LatentMode::Sample;
  bool score_full_cov = false;
  std::uint64_t seed = 0;
  int threads = 0;
  bool timing = true;  // record wall-clock seconds per step

  void validate() const;
};

struct StepRecord {
  int step = 0;  // 0 is the initial-design fit
  int n = 0;
  bool has_point = false;
  Vector x;  // natural units
  double y = 0.0;
  std::optional<double> rmse_value;
  std::optional<double> score_value;
  double seconds = 0.0;
};

struct CampaignHistory {
  std::vector<StepRecord> records;
  Dataset data;  // all acquired points, natural units
  std::optional<std::string> error;  // set when the campaign aborted
};

/// Fresh uniform candidates on the coded domain, rejection-resampled on
/// exact duplicates of already-acquired rows.
Matrix draw_candidates(int n_cand, const Matrix& acquired, Rng& rng);

/// Fit -> acquire -> evaluate -> augment until the budget is spent.  The
/// first fit runs the long chain; later fits restart from the previous
/// chain's final state with the short per-step chain.  Any step failure
/// aborts with the partial history retained.
CampaignHistory run_campaign(CampaignConfig cfg);

}  // namespace dgpal
