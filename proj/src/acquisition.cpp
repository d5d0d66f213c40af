#include "dgpal/acquisition.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "dgpal/threading.hpp"

namespace dgpal {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Bounds union_bounds(const Matrix& w_train, const Matrix& w_cand) {
  if (w_train.cols() != w_cand.cols()) {
    throw DimensionMismatch("union_bounds: column mismatch");
  }
  Bounds bounds;
  bounds.a = w_train.colwise().minCoeff().cwiseMin(w_cand.colwise().minCoeff())
                 .transpose();
  bounds.b = w_train.colwise().maxCoeff().cwiseMax(w_cand.colwise().maxCoeff())
                 .transpose();
  return bounds;
}

double h_entry(const Vector& w_j, const Vector& w_k, double theta_y,
               const Bounds& bounds) {
  const Index p = w_j.size();
  const double sqrt_theta = std::sqrt(theta_y);
  double value = std::pow(std::numbers::pi * theta_y / 2.0, 0.5 * p);
  for (Index i = 0; i < p; ++i) {
    const double diff = w_j(i) - w_k(i);
    const double sum = w_j(i) + w_k(i);
    value *= std::exp(-diff * diff / (2.0 * theta_y)) *
             (normal_cdf((2.0 * bounds.b(i) - sum) / sqrt_theta) -
              normal_cdf((2.0 * bounds.a(i) - sum) / sqrt_theta));
  }
  return value;
}

AcqPrecompute acq_precompute(const Matrix& w_train, double theta_y, double g,
                             double tau2hat, const Bounds& bounds,
                             Criterion criterion, const Matrix& w_ref) {
  if (criterion == Criterion::Imse) bounds.validate();
  AcqPrecompute pre;
  pre.theta_y = theta_y;
  pre.g = g;
  pre.tau2hat = tau2hat;
  pre.bounds = bounds;

  const Index n = w_train.rows();
  Matrix c = cov_matrix(w_train, KernelParams{theta_y, 1.0, g});
  pre.cn_inv = n > 0 ? inverse_spd(cholesky_jittered(c)) : Matrix(0, 0);

  if (criterion == Criterion::Imse) {
    pre.h_base.resize(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index k = j; k < n; ++k) {
        pre.h_base(j, k) = h_entry(w_train.row(j), w_train.row(k), theta_y,
                                   bounds);
        pre.h_base(k, j) = pre.h_base(j, k);
      }
    }
    pre.base_trace = (pre.cn_inv.array() * pre.h_base.array()).sum();
  } else {
    pre.k_ref = cross_cov(w_ref, w_train, theta_y);
  }
  return pre;
}

double imse_fast(const Vector& w_new, const AcqPrecompute& pre,
                 const Matrix& w_train) {
  const Index n = w_train.rows();
  Vector k = cross_cov_point(w_train, w_new, pre.theta_y);
  PartitionedInverse ext = extend_inverse(pre.cn_inv, k, 1.0 + pre.g);

  Vector h_border(n);
  for (Index j = 0; j < n; ++j) {
    h_border(j) = h_entry(w_train.row(j), w_new, pre.theta_y, pre.bounds);
  }
  const double h_corner = h_entry(w_new, w_new, pre.theta_y, pre.bounds);

  double trace = pre.base_trace + h_corner / ext.v + 2.0 * ext.h.dot(h_border);
  if (n > 0) trace += ext.v * ext.h.dot(pre.h_base * ext.h);
  // Integrated variance: tau2 * (volume - tr(C^{-1} H)), H holding the raw
  // kernel-product integrals over the box.
  return pre.tau2hat * (pre.bounds.volume() - trace);
}

double imse_base(const AcqPrecompute& pre) {
  return pre.tau2hat * (pre.bounds.volume() - pre.base_trace);
}

double imse(const Matrix& w_n1, double theta_y, double g, double tau2hat,
            const Bounds& bounds) {
  if (w_n1.rows() < 1) throw DimensionMismatch("imse: empty design");
  const Index n = w_n1.rows() - 1;
  AcqPrecompute pre = acq_precompute(w_n1.topRows(n), theta_y, g, tau2hat,
                                     bounds, Criterion::Imse, Matrix());
  return imse_fast(w_n1.row(n).transpose(), pre, w_n1.topRows(n));
}

double alc(const Vector& w_new, const Matrix& w_ref, const AcqPrecompute& pre,
           const Matrix& w_train) {
  if (w_ref.rows() == 0) return 0.0;
  Vector k = cross_cov_point(w_train, w_new, pre.theta_y);
  PartitionedInverse ext = extend_inverse(pre.cn_inv, k, 1.0 + pre.g);

  Vector hk = pre.k_ref.rows() == w_ref.rows()
                  ? Vector(pre.k_ref * ext.h)
                  : Vector(cross_cov(w_ref, w_train, pre.theta_y) * ext.h);
  Vector z = cross_cov_point(w_ref, w_new, pre.theta_y);
  const double total = (ext.v * hk.array().square() +
                        2.0 * z.array() * hk.array() +
                        z.array().square() / ext.v)
                           .sum();
  return pre.tau2hat * total;
}

AcqResult evaluate_candidates(const FittedModel& model, const Matrix& xcand,
                              Criterion criterion, std::uint64_t seed,
                              int threads) {
  const Index n_cand = xcand.rows();
  const Index nt = model.trace.size();
  if (n_cand < 1) throw DimensionMismatch("evaluate_candidates: no candidates");
  if (nt == 0) throw EmptyTrace("evaluate_candidates: model trace is empty");

  // Candidates double as the ALC reference set, mapped once per iteration.
  MappedTest mapped =
      map_latents(model, xcand, LatentMode::Mean, seed, threads);
  const bool deep = model.config.layers >= 2;
  const double penalty = criterion == Criterion::Imse ? kInf : -kInf;

  const Index chunk = 8;
  const Index n_chunks = (nt + chunk - 1) / chunk;
  std::vector<Vector> chunk_sums(n_chunks, Vector::Zero(n_cand));
  parallel_chunks(nt, chunk, threads, [&](Index c, Index begin, Index end) {
    for (Index t = begin; t < end; ++t) {
      const ChainState& s = model.trace.states[t];
      const Matrix& w_train = deep ? s.w : model.data.x;
      const Matrix& w_cand = deep ? mapped.w[t] : xcand;
      AcqPrecompute pre =
          acq_precompute(w_train, s.theta_y, s.g, s.tau2hat,
                         union_bounds(w_train, w_cand), criterion, w_cand);
      for (Index i = 0; i < n_cand; ++i) {
        const Vector w_new = w_cand.row(i).transpose();
        double value;
        try {
          value = criterion == Criterion::Imse
                      ? imse_fast(w_new, pre, w_train)
                      : alc(w_new, w_cand, pre, w_train);
        } catch (const DegenerateUpdate&) {
          value = penalty;
        }
        chunk_sums[c](i) += value;
      }
    }
  });

  AcqResult result;
  result.criterion = criterion;
  result.values = Vector::Zero(n_cand);
  for (const Vector& part : chunk_sums) result.values += part;
  result.values /= static_cast<double>(nt);

  Index best = 0;
  for (Index i = 1; i < n_cand; ++i) {
    const bool better = criterion == Criterion::Imse
                            ? result.values(i) < result.values(best)
                            : result.values(i) > result.values(best);
    if (better) best = i;
  }
  result.chosen = best;
  return result;
}

}  // namespace dgpal
