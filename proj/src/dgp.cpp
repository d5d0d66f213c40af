#include "dgpal/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dgpal/threading.hpp"

namespace dgpal {

namespace {

// Factor + representer weights for one noiseless latent node on the
// prediction path.  The covariance is numerically singular for smooth
// lengthscales, so try a ladder of diagonal bumps and keep the solve that
// best reproduces the node at its own inputs (training latents must map to
// themselves to ~1e-6, which a fixed 1e-8 bump cannot deliver).
struct MapSolve {
  CholFactor chol;
  Vector alpha;
};

// Smallest-bump factorization for prediction-path covariances (conditional
// latent covariances are PSD with near-zero directions).
CholFactor map_factor(const Matrix& k) {
  for (double jitter : {1e-12, 1e-10, 1e-8, 1e-6, 1e-4}) {
    Matrix kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(kj);
    if (llt.info() == Eigen::Success) return CholFactor{llt.matrixL()};
  }
  throw NotPositiveDefinite("map_factor: covariance not factorizable");
}

MapSolve map_solve(const Matrix& k, const Vector& value) {
  MapSolve best;
  double best_residual = std::numeric_limits<double>::infinity();
  for (double jitter : {1e-12, 1e-10, 1e-8, 1e-6, 1e-4}) {
    Matrix kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(kj);
    if (llt.info() != Eigen::Success) continue;
    CholFactor chol{llt.matrixL()};
    Vector alpha = solve_spd(chol, value);
    const double residual = (k * alpha - value).cwiseAbs().maxCoeff();
    if (residual < best_residual) {
      best_residual = residual;
      best = MapSolve{std::move(chol), std::move(alpha)};
    }
  }
  if (!std::isfinite(best_residual)) {
    throw NotPositiveDefinite("map_solve: latent covariance not factorizable");
  }
  return best;
}

// Conditional latent values of the nodes in `values` (columns) at `at`,
// given inputs `inputs`: mean K(at, inputs) K(inputs)^{-1} values, plus an
// independent draw with the pointwise conditional variance in sample mode.
Matrix propagate_layer(const Matrix& inputs, const Matrix& values,
                       const Vector& thetas, const Matrix& at,
                       LatentMode mode, Rng* rng) {
  // The layer is noiseless, so at an input that coincides with a training
  // row the conditional is a point mass on the stored latent value; take it
  // directly rather than through the (ill-conditioned) solve.
  std::vector<Index> match(at.rows(), -1);
  for (Index j = 0; j < at.rows(); ++j) {
    for (Index r = 0; r < inputs.rows(); ++r) {
      if ((at.row(j).array() == inputs.row(r).array()).all()) {
        match[j] = r;
        break;
      }
    }
  }

  Matrix out(at.rows(), values.cols());
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index i = 0; i < values.cols(); ++i) {
    Matrix k = cov_matrix(inputs, KernelParams{thetas(i), 1.0, 0.0});
    MapSolve solve = map_solve(k, values.col(i));
    Matrix cross = cross_cov(at, inputs, thetas(i));
    out.col(i) = cross * solve.alpha;
    if (mode == LatentMode::Sample) {
      // Joint draw with the conditional covariance of the node at `at`.
      Matrix vhalf = solve.chol.lower.triangularView<Eigen::Lower>().solve(
          Matrix(cross.transpose()));
      Matrix cond = cross_cov(at, at, thetas(i)) - vhalf.transpose() * vhalf;
      cond = 0.5 * (cond + cond.transpose());
      Vector eta(at.rows());
      for (Index j = 0; j < at.rows(); ++j) eta(j) = gauss(*rng);
      out.col(i) += map_factor(cond).lower.triangularView<Eigen::Lower>() * eta;
    }
    for (Index j = 0; j < at.rows(); ++j) {
      if (match[j] >= 0) out(j, i) = values(match[j], i);
    }
  }
  return out;
}

// Extend the latent layers of a warm-start state to newly appended rows of
// x, using each node's conditional mean under the state's lengthscales.
ChainState extend_state(const ChainState& prev, const ModelConfig& cfg,
                        const Dataset& data) {
  if (cfg.layers == 1) return prev;
  const Index n_prev = prev.w.rows();
  const Index n = data.n();
  if (n_prev == n) return prev;
  if (n_prev > n || n_prev < 1) {
    throw DimensionMismatch("fit: warm-start state does not match data");
  }
  ChainState out = prev;
  const Matrix x_prev = data.x.topRows(n_prev);
  const Matrix x_new = data.x.bottomRows(n - n_prev);
  if (cfg.layers == 2) {
    Matrix w_new = propagate_layer(x_prev, prev.w, prev.theta_w, x_new,
                                   LatentMode::Mean, nullptr);
    out.w.conservativeResize(n, Eigen::NoChange);
    out.w.bottomRows(n - n_prev) = w_new;
  } else {
    Matrix z_new = propagate_layer(x_prev, prev.z, prev.theta_z, x_new,
                                   LatentMode::Mean, nullptr);
    Matrix w_new = propagate_layer(prev.z, prev.w, prev.theta_w, z_new,
                                   LatentMode::Mean, nullptr);
    out.z.conservativeResize(n, Eigen::NoChange);
    out.z.bottomRows(n - n_prev) = z_new;
    out.w.conservativeResize(n, Eigen::NoChange);
    out.w.bottomRows(n - n_prev) = w_new;
  }
  return out;
}

}  // namespace

FittedModel fit(const ModelConfig& config, Dataset data, std::uint64_t seed,
                const std::optional<ChainState>& init) {
  if (data.n() < 2) throw DimensionMismatch("fit: need at least two points");
  if (data.y.size() != data.n()) {
    throw DimensionMismatch("fit: response length does not match design");
  }
  ModelConfig cfg = config.resolved(data.d());

  Rng rng(seed);
  ChainState start;
  if (init) {
    start = extend_state(*init, cfg, data);
  } else {
    start = default_init(cfg, data);
    // A cold deterministic fit has no noise channel to anneal through and
    // tends to memorize (tiny outer lengthscale) before the warp organizes.
    // Run a short free-nugget phase first and pin the nugget afterwards.
    if (cfg.deterministic && cfg.layers >= 2) {
      ModelConfig warm = cfg;
      warm.deterministic = false;
      ChainState warm_start = default_init(warm, data);
      const int warm_iters = std::min(1000, std::max(200, cfg.iters / 10));
      Trace warm_trace = gibbs_run(warm, data, warm_start, warm_iters, rng);
      start = warm_trace.states.back();
    }
  }
  if (cfg.deterministic) start.g = kNuggetFloor;

  Trace full = gibbs_run(cfg, data, start, cfg.iters, rng);
  full.meta.seed = seed;

  FittedModel model;
  model.config = cfg;
  model.final_state = full.states.back();
  model.trace = trim(full, cfg.burn, cfg.thin);
  model.data = std::move(data);
  return model;
}

MappedTest map_latents(const FittedModel& model, const Matrix& xtest,
                       LatentMode mode, std::uint64_t seed, int threads) {
  const Index nt = model.trace.size();
  if (nt == 0) throw EmptyTrace("map_latents: model trace is empty");
  if (xtest.cols() != model.data.d()) {
    throw DimensionMismatch("map_latents: test dimension mismatch");
  }
  MappedTest mapped;
  if (model.config.layers == 1) return mapped;

  mapped.w.resize(nt);
  if (model.config.layers == 3) mapped.z.resize(nt);
  parallel_chunks(nt, 16, threads, [&](Index, Index begin, Index end) {
    for (Index t = begin; t < end; ++t) {
      const ChainState& s = model.trace.states[t];
      Rng rng = substream(seed, static_cast<std::uint64_t>(t));
      if (model.config.layers == 2) {
        mapped.w[t] = propagate_layer(model.data.x, s.w, s.theta_w, xtest,
                                      mode, &rng);
      } else {
        mapped.z[t] = propagate_layer(model.data.x, s.z, s.theta_z, xtest,
                                      mode, &rng);
        mapped.w[t] =
            propagate_layer(s.z, s.w, s.theta_w, mapped.z[t], mode, &rng);
      }
    }
  });
  return mapped;
}

PredictiveMoments predict(const FittedModel& model, const Matrix& xtest,
                          bool pointwise, bool noise_free,
                          LatentMode latent_mode, std::uint64_t seed,
                          int threads) {
  const Index nt = model.trace.size();
  const Index n_test = xtest.rows();
  if (nt == 0) throw EmptyTrace("predict: model trace is empty");
  if (!pointwise && nt <= n_test) {
    throw InsufficientSamples(
        "predict: full covariance needs more retained samples than test points");
  }

  MappedTest mapped = map_latents(model, xtest, latent_mode, seed, threads);
  const bool deep = model.config.layers >= 2;

  auto moments_at = [&](Index t) {
    const ChainState& s = model.trace.states[t];
    const KernelParams params{s.theta_y, s.tau2hat, s.g};
    const Matrix& train = deep ? s.w : model.data.x;
    const Matrix& test = deep ? mapped.w[t] : xtest;
    return conditional_moments(model.data.y, train, test, params, noise_free,
                               pointwise);
  };

  Matrix means(nt, n_test);  // per-iteration predictive means
  PredictiveMoments out;
  out.pointwise = pointwise;
  out.dof = static_cast<double>(model.data.n());

  if (pointwise) {
    const Index chunk = 16;
    const Index n_chunks = (nt + chunk - 1) / chunk;
    std::vector<Vector> var_sum(n_chunks, Vector::Zero(n_test));
    parallel_chunks(nt, chunk, threads, [&](Index c, Index begin, Index end) {
      for (Index t = begin; t < end; ++t) {
        PredictiveMoments m = moments_at(t);
        means.row(t) = m.mean.transpose();
        var_sum[c] += m.variance;
      }
    });
    Vector variance = Vector::Zero(n_test);
    for (const Vector& part : var_sum) variance += part;
    variance /= static_cast<double>(nt);
    out.mean = means.colwise().mean().transpose();
    if (nt > 1) {
      // Between-iteration spread with the sample-variance divisor.
      Vector spread = Vector::Zero(n_test);
      for (Index t = 0; t < nt; ++t) {
        spread += (means.row(t).transpose() - out.mean).array().square().matrix();
      }
      variance += spread / static_cast<double>(nt - 1);
    }
    out.variance = variance;
  } else {
    Matrix cov_sum = Matrix::Zero(n_test, n_test);
    for (Index t = 0; t < nt; ++t) {
      PredictiveMoments m = moments_at(t);
      means.row(t) = m.mean.transpose();
      cov_sum += m.covariance;
    }
    out.mean = means.colwise().mean().transpose();
    Matrix cov = cov_sum / static_cast<double>(nt);
    if (nt > 1) {
      Matrix spread = Matrix::Zero(n_test, n_test);
      for (Index t = 0; t < nt; ++t) {
        Vector dev = means.row(t).transpose() - out.mean;
        spread += dev * dev.transpose();
      }
      cov += spread / static_cast<double>(nt - n_test);
    }
    out.covariance = 0.5 * (cov + cov.transpose());
    out.variance = out.covariance.diagonal();
  }
  return out;
}

}  // namespace dgpal
