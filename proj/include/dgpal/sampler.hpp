#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dgpal/config.hpp"
#include "dgpal/gp.hpp"

namespace dgpal {

/// Gamma log density up to its normalizing constant.
double gamma_log_prior(double x, const PriorSpec& prior);

struct Proposal {
  double star;
  double log_q_ratio;  // log q(prev|star) - log q(star|prev) = log(prev/star)
};

/// Multiplicative uniform sliding-window proposal on (0, inf).
Proposal propose_window(double prev, const ProposalSpec& spec, Rng& rng);

struct MhResult {
  double value;
  double loglik;  // log likelihood at `value`
  bool accepted;
};

/// One Metropolis-Hastings step for a positive scalar under a Gamma prior
/// and the sliding-window proposal.  `loglik_current` is the cached log
/// likelihood at `current`; loglik_fn is evaluated once, at the proposal.
MhResult mh_update_scalar(double current, double loglik_current,
                          const std::function<double(double)>& loglik_fn,
                          const PriorSpec& prior, const ProposalSpec& spec,
                          Rng& rng);

/// Convenience overload that evaluates the likelihood at `current` itself.
std::pair<double, bool> mh_update_scalar(
    double current, const std::function<double(double)>& loglik_fn,
    const PriorSpec& prior, const ProposalSpec& spec, Rng& rng);

struct EssResult {
  Vector f;
  double loglik;
  int shrinks;  // rejected proposals before acceptance
};

/// Elliptical slice sampling update of one latent node under a zero-mean MVN
/// prior with the given factor.  Proposals rotate between the current state
/// and a fresh prior draw; on rejection the angle bracket shrinks toward 0,
/// so the update always terminates.  A non-finite likelihood value counts as
/// a rejection.
EssResult ess_update(const Vector& f_prev, double loglik_prev,
                     const CholFactor& prior_chol,
                     const std::function<double(const Vector&)>& loglik_fn,
                     Rng& rng);

Vector ess_update(const Vector& f_prev, const CholFactor& prior_chol,
                  const std::function<double(const Vector&)>& loglik_fn,
                  Rng& rng);

/// Full parameter state of the chain at one iteration.
struct ChainState {
  double g = 0.0;
  double theta_y = 0.0;
  Vector theta_w;  // one per node; empty for one-layer models
  Vector theta_z;  // three-layer only
  Matrix w;        // n x p latent layer feeding the response
  Matrix z;        // n x p inner latent layer (three-layer only)
  double tau2hat = 0.0;
};

struct AcceptCounter {
  long attempts = 0;
  long accepts = 0;

  double rate() const { return attempts ? double(accepts) / attempts : 0.0; }
};

struct TraceMeta {
  std::uint64_t seed = 0;
  int iters = 0;
  AcceptCounter g;
  AcceptCounter theta_y;
  std::vector<AcceptCounter> theta_w;
  std::vector<AcceptCounter> theta_z;
  long ess_updates = 0;
  long ess_shrinks = 0;
  int max_ess_shrinks = 0;
};

struct Trace {
  std::vector<ChainState> states;
  std::vector<int> iteration;  // 1-based sweep index per state
  TraceMeta meta;

  Index size() const { return static_cast<Index>(states.size()); }
};

/// Gibbs sweep engine: Metropolis on g and the lengthscales, elliptical
/// slice sampling on latent nodes, in the fixed order g, theta_y,
/// theta_w[i], theta_z[i], W_i, Z_i.  Performs `iters` sweeps from `init`
/// and records the state after each sweep.
Trace gibbs_run(const ModelConfig& config, const Dataset& data,
                const ChainState& init, int iters, Rng& rng);

/// Drop the first `burn` states and keep every `thin`-th thereafter.
Trace trim(const Trace& trace, int burn, int thin);

/// Default initialization: all lengthscales 0.5, g = 0.1 (nugget floor when
/// deterministic), latent layers set to the first p columns of x, recycled
/// when p > d.
ChainState default_init(const ModelConfig& config, const Dataset& data);

}  // namespace dgpal
