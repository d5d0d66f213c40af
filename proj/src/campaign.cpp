#include "dgpal/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace dgpal {

double f_piecewise_1d(double x) {
  if (x < 0.0 || x > 1.0) throw DomainError("f_piecewise_1d: x outside [0,1]");
  if (x < 0.33) return 1.35 * std::cos(12.0 * std::numbers::pi * x);
  if (x <= 0.66) return 1.35;  // boundaries belong to the flat middle branch
  return 1.35 * std::cos(6.0 * std::numbers::pi * x);
}

double f_exp_2d(double x1, double x2) {
  if (x1 < -2.0 || x1 > 4.0 || x2 < -2.0 || x2 > 4.0) {
    throw DomainError("f_exp_2d: inputs outside [-2,4]^2");
  }
  return 10.0 * x1 * std::exp(-x1 * x1 - x2 * x2);
}

Matrix lhs(int n, int d, Rng& rng) {
  if (n < 1 || d < 1) throw DomainError("lhs: need n >= 1 and d >= 1");
  Matrix out(n, d);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<int> strata(n);
  for (int j = 0; j < d; ++j) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    for (int i = 0; i < n; ++i) {
      out(i, j) = (strata[i] + u01(rng)) / n;
    }
  }
  return out;
}

double rmse(const Vector& pred_mean, const Vector& truth) {
  if (pred_mean.size() != truth.size()) {
    throw DimensionMismatch("rmse: length mismatch");
  }
  return std::sqrt((pred_mean - truth).squaredNorm() / pred_mean.size());
}

double score(const Vector& pred_mean, const Vector& pred_var,
             const Vector& truth) {
  if (pred_mean.size() != truth.size() || pred_var.size() != truth.size()) {
    throw DimensionMismatch("score: length mismatch");
  }
  double total = 0.0;
  for (Index i = 0; i < truth.size(); ++i) {
    if (!(pred_var(i) > 0.0)) {
      throw DomainError("score: nonpositive predictive variance");
    }
    const double r = truth(i) - pred_mean(i);
    total += -std::log(pred_var(i)) - r * r / pred_var(i);
  }
  return total / truth.size();
}

double score_full(const Vector& pred_mean, const Matrix& pred_cov,
                  const Vector& truth) {
  if (pred_mean.size() != truth.size() || pred_cov.rows() != truth.size()) {
    throw DimensionMismatch("score_full: length mismatch");
  }
  CholFactor chol = cholesky_jittered(pred_cov);
  const Vector r = truth - pred_mean;
  return (-logdet(chol) - invquad(chol, r)) / truth.size();
}

// ---------------------------------------------------------------------------
// External blackbox process

class ExternalProcess {
 public:
  explicit ExternalProcess(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw ExternalFailure("blackbox: pipe creation failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw ExternalFailure("blackbox: fork failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_ = fdopen(to_child[1], "w");
    out_ = fdopen(from_child[0], "r");
    if (!in_ || !out_) throw ExternalFailure("blackbox: stream setup failed");
  }

  ~ExternalProcess() {
    if (in_) fclose(in_);
    if (out_) fclose(out_);
    if (pid_ > 0) waitpid(pid_, nullptr, 0);
  }

  ExternalProcess(const ExternalProcess&) = delete;
  ExternalProcess& operator=(const ExternalProcess&) = delete;

  double request(const Vector& coded) {
    for (Index i = 0; i < coded.size(); ++i) {
      fprintf(in_, i ? " %.17g" : "%.17g", coded(i));
    }
    fprintf(in_, "\n");
    fflush(in_);

    char* line = nullptr;
    size_t cap = 0;
    const ssize_t len = getline(&line, &cap, out_);
    if (len <= 0) {
      free(line);
      throw ExternalFailure("blackbox: no response from external command");
    }
    char* endptr = nullptr;
    const double value = strtod(line, &endptr);
    const bool parsed = endptr != line && std::isfinite(value);
    free(line);
    if (!parsed) {
      throw ExternalFailure("blackbox: unparsable response line");
    }
    return value;
  }

 private:
  pid_t pid_ = -1;
  FILE* in_ = nullptr;
  FILE* out_ = nullptr;
};

Blackbox make_builtin_1d(double noise_sd) {
  Blackbox bb;
  bb.kind = BlackboxKind::Builtin1d;
  bb.noise_sd = noise_sd;
  bb.domain.resize(1, 2);
  bb.domain << 0.0, 1.0;
  return bb;
}

Blackbox make_builtin_2d(double noise_sd) {
  Blackbox bb;
  bb.kind = BlackboxKind::Builtin2d;
  bb.noise_sd = noise_sd;
  bb.domain.resize(2, 2);
  bb.domain << -2.0, 4.0, -2.0, 4.0;
  return bb;
}

Blackbox make_external(std::string command, Matrix domain, double noise_sd) {
  if (domain.cols() != 2 || domain.rows() < 1) {
    throw DomainError("make_external: domain must be d x 2");
  }
  Blackbox bb;
  bb.kind = BlackboxKind::External;
  bb.noise_sd = noise_sd;
  bb.domain = std::move(domain);
  bb.command = std::move(command);
  return bb;
}

namespace {

void check_domain(const Blackbox& bb, const Vector& x) {
  if (x.size() != bb.dim()) {
    throw DimensionMismatch("blackbox: point dimension mismatch");
  }
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) < bb.domain(i, 0) || x(i) > bb.domain(i, 1)) {
      throw DomainError("blackbox: point outside domain");
    }
  }
}

Vector to_coded(const Blackbox& bb, const Vector& x) {
  Vector coded(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double lo = bb.domain(i, 0);
    const double hi = bb.domain(i, 1);
    coded(i) = hi > lo ? (x(i) - lo) / (hi - lo) : x(i);
  }
  return coded;
}

Vector to_natural(const Blackbox& bb, const Vector& coded) {
  Vector x(coded.size());
  for (Index i = 0; i < coded.size(); ++i) {
    const double lo = bb.domain(i, 0);
    const double hi = bb.domain(i, 1);
    x(i) = lo + coded(i) * (hi - lo);
  }
  return x;
}

}  // namespace

double blackbox_truth(Blackbox& bb, const Vector& x) {
  check_domain(bb, x);
  switch (bb.kind) {
    case BlackboxKind::Builtin1d:
      return f_piecewise_1d(x(0));
    case BlackboxKind::Builtin2d:
      return f_exp_2d(x(0), x(1));
    case BlackboxKind::External:
      if (!bb.process) {
        bb.process = std::make_shared<ExternalProcess>(bb.command);
      }
      return bb.process->request(to_coded(bb, x));
  }
  throw DomainError("blackbox: unknown kind");
}

double evaluate_blackbox(Blackbox& bb, const Vector& x, Rng& rng) {
  double value = blackbox_truth(bb, x);
  if (bb.noise_sd > 0.0) {
    std::normal_distribution<double> gauss(0.0, bb.noise_sd);
    value += gauss(rng);
  }
  return value;
}

// ---------------------------------------------------------------------------
// Campaign loop

void CampaignConfig::validate() const {
  if (n0 < 2) throw ConfigError("n0 must be >= 2");
  if (n_final < n0) throw ConfigError("n_final must be >= n0");
  if (n_cand < 1) throw ConfigError("n_cand must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (first_iters < 1 || first_burn < 0 || first_burn >= first_iters ||
      first_thin < 1) {
    throw ConfigError("first-fit chain lengths invalid");
  }
  if (!test_set && test_n < 1) throw ConfigError("test_n must be >= 1");
  if (test_set && test_set->y.size() != test_set->x.rows()) {
    throw ConfigError("test_set truth does not match its design");
  }
}

namespace {

struct Standardization {
  double mean = 0.0;
  double sd = 1.0;
};

Standardization standardize(const Vector& y, Vector& out) {
  Standardization s;
  s.mean = y.mean();
  const double ss = (y.array() - s.mean).square().sum();
  s.sd = y.size() > 1 ? std::sqrt(ss / (y.size() - 1)) : 1.0;
  if (!(s.sd > 0.0)) s.sd = 1.0;
  out = (y.array() - s.mean) / s.sd;
  return s;
}

}  // namespace

Matrix draw_candidates(int n_cand, const Matrix& acquired, Rng& rng) {
  const Index d = acquired.cols();
  Matrix cand(n_cand, d);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < n_cand; ++i) {
    for (int attempt = 0;; ++attempt) {
      for (Index j = 0; j < d; ++j) cand(i, j) = u01(rng);
      bool duplicate = false;
      for (Index r = 0; r < acquired.rows() && !duplicate; ++r) {
        duplicate = (acquired.row(r).array() == cand.row(i).array()).all();
      }
      if (!duplicate) break;
      if (attempt > 10000) {
        throw DomainError("draw_candidates: cannot avoid acquired points");
      }
    }
  }
  return cand;
}

CampaignHistory run_campaign(CampaignConfig cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Blackbox& bb = cfg.blackbox;
  const Index d = bb.dim();

  CampaignHistory history;
  using clock = std::chrono::steady_clock;

  try {
    // Initial design and evaluations, all in coded space internally.
    Matrix x_coded = lhs(cfg.n0, static_cast<int>(d), rng);
    Vector y_nat(cfg.n0);
    for (Index i = 0; i < cfg.n0; ++i) {
      y_nat(i) = evaluate_blackbox(bb, to_natural(bb, x_coded.row(i).transpose()),
                                   rng);
    }

    // Test set for out-of-sample metrics (noiseless truth).
    Matrix test_coded;
    Vector test_truth;
    if (cfg.test_set) {
      test_coded.resize(cfg.test_set->x.rows(), d);
      for (Index i = 0; i < cfg.test_set->x.rows(); ++i) {
        test_coded.row(i) =
            to_coded(bb, cfg.test_set->x.row(i).transpose()).transpose();
      }
      test_truth = cfg.test_set->y;
    } else {
      test_coded = lhs(cfg.test_n, static_cast<int>(d), rng);
      test_truth.resize(cfg.test_n);
      for (Index i = 0; i < cfg.test_n; ++i) {
        test_truth(i) =
            blackbox_truth(bb, to_natural(bb, test_coded.row(i).transpose()));
      }
    }

    FittedModel model;
    Standardization stand;
    auto refit = [&](bool first) {
      Vector y_std;
      stand = standardize(y_nat, y_std);
      ModelConfig mc = cfg.model;
      if (first) {
        mc.iters = cfg.first_iters;
        mc.burn = cfg.first_burn;
        mc.thin = cfg.first_thin;
      }
      const std::uint64_t fit_seed = rng();
      std::optional<ChainState> init;
      // Hyperparameters are scale-free under the profiled likelihood, so
      // warm starts survive re-standardization of Y.
      if (!first) init = model.final_state;
      model = fit(mc, Dataset{x_coded, y_std}, fit_seed, init);
    };

    auto metrics = [&](StepRecord& rec) {
      const std::uint64_t pred_seed = rng();
      PredictiveMoments pm =
          predict(model, test_coded, !cfg.score_full_cov, true,
                  cfg.latent_mode, pred_seed, cfg.threads);
      Vector mean_nat = (pm.mean.array() * stand.sd + stand.mean).matrix();
      rec.rmse_value = rmse(mean_nat, test_truth);
      if (cfg.score_full_cov) {
        Matrix cov_nat = pm.covariance * (stand.sd * stand.sd);
        rec.score_value = score_full(mean_nat, cov_nat, test_truth);
      } else {
        Vector var_nat = pm.variance * (stand.sd * stand.sd);
        rec.score_value = score(mean_nat, var_nat, test_truth);
      }
    };

    auto t0 = clock::now();
    refit(true);
    StepRecord initial;
    initial.step = 0;
    initial.n = cfg.n0;
    metrics(initial);
    if (cfg.timing) {
      initial.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    }
    history.records.push_back(std::move(initial));

    for (int step = 1; x_coded.rows() < cfg.n_final; ++step) {
      t0 = clock::now();
      Matrix cand = draw_candidates(cfg.n_cand, x_coded, rng);
      const std::uint64_t acq_seed = rng();
      AcqResult acq =
          evaluate_candidates(model, cand, cfg.criterion, acq_seed, cfg.threads);

      const Vector x_new = cand.row(acq.chosen).transpose();
      const double y_new = evaluate_blackbox(bb, to_natural(bb, x_new), rng);

      x_coded.conservativeResize(x_coded.rows() + 1, Eigen::NoChange);
      x_coded.row(x_coded.rows() - 1) = x_new.transpose();
      y_nat.conservativeResize(y_nat.size() + 1);
      y_nat(y_nat.size() - 1) = y_new;

      refit(false);

      StepRecord rec;
      rec.step = step;
      rec.n = static_cast<int>(x_coded.rows());
      rec.has_point = true;
      rec.x = to_natural(bb, x_new);
      rec.y = y_new;
      if (step % cfg.eval_every == 0 || rec.n == cfg.n_final) metrics(rec);
      if (cfg.timing) {
        rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
      }
      history.records.push_back(std::move(rec));
    }

    history.data.x.resize(x_coded.rows(), d);
    for (Index i = 0; i < x_coded.rows(); ++i) {
      history.data.x.row(i) =
          to_natural(bb, x_coded.row(i).transpose()).transpose();
    }
    history.data.y = y_nat;
  } catch (const std::exception& e) {
    history.error = e.what();
  }
  return history;
}

}  // namespace dgpal
