#include "dgpal/sampler.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dgpal {

ModelConfig ModelConfig::resolved(Index d) const {
  ModelConfig out = *this;
  if (out.p <= 0) out.p = static_cast<int>(d);
  if (out.layers == 1) out.p = 0;
  // Rate 0 means "use the layer-dependent default".
  auto fill = [](PriorSpec& prior, double rate) {
    if (prior.rate <= 0.0) prior.rate = rate;
  };
  fill(out.prior_g, 3.9);
  switch (out.layers) {
    case 1:
      fill(out.prior_theta_y, 3.9 / 1.5);
      break;
    case 2:
      fill(out.prior_theta_y, 3.9 / 6.0);
      fill(out.prior_theta_w, 3.9 / 4.0);
      break;
    case 3:
      fill(out.prior_theta_y, 3.9 / 6.0);
      fill(out.prior_theta_w, 3.9 / 12.0);
      fill(out.prior_theta_z, 3.9 / 4.0);
      break;
    default:
      throw ConfigError("layers must be 1, 2, or 3");
  }
  out.validate();
  return out;
}

void ModelConfig::validate() const {
  if (layers < 1 || layers > 3) throw ConfigError("layers must be 1, 2, or 3");
  if (layers > 1 && p < 1) throw ConfigError("p must be >= 1");
  if (iters < 1) throw ConfigError("iters must be >= 1");
  if (burn < 0 || burn >= iters) throw ConfigError("burn must be in [0, iters)");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (!(proposal.l > 0.0) || !(proposal.u > proposal.l)) {
    throw ConfigError("proposal window requires 0 < l < u");
  }
}

double gamma_log_prior(double x, const PriorSpec& prior) {
  if (!(x > 0.0)) throw DomainError("gamma_log_prior: x must be > 0");
  return (prior.shape - 1.0) * std::log(x) - prior.rate * x;
}

Proposal propose_window(double prev, const ProposalSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> window(spec.l * prev / spec.u,
                                                spec.u * prev / spec.l);
  const double star = window(rng);
  return Proposal{star, std::log(prev) - std::log(star)};
}

MhResult mh_update_scalar(double current, double loglik_current,
                          const std::function<double(double)>& loglik_fn,
                          const PriorSpec& prior, const ProposalSpec& spec,
                          Rng& rng) {
  const Proposal prop = propose_window(current, spec, rng);
  const double loglik_star = loglik_fn(prop.star);
  const double log_alpha = loglik_star - loglik_current +
                           gamma_log_prior(prop.star, prior) -
                           gamma_log_prior(current, prior) + prop.log_q_ratio;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (std::log(u01(rng)) < log_alpha) {
    return MhResult{prop.star, loglik_star, true};
  }
  return MhResult{current, loglik_current, false};
}

std::pair<double, bool> mh_update_scalar(
    double current, const std::function<double(double)>& loglik_fn,
    const PriorSpec& prior, const ProposalSpec& spec, Rng& rng) {
  MhResult res =
      mh_update_scalar(current, loglik_fn(current), loglik_fn, prior, spec, rng);
  return {res.value, res.accepted};
}

EssResult ess_update(const Vector& f_prev, double loglik_prev,
                     const CholFactor& prior_chol,
                     const std::function<double(const Vector&)>& loglik_fn,
                     Rng& rng) {
  if (f_prev.size() != prior_chol.dim()) {
    throw DimensionMismatch("ess_update: state does not match prior factor");
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector eta(f_prev.size());
  for (Index i = 0; i < eta.size(); ++i) eta(i) = gauss(rng);
  const Vector f_prior = prior_chol.lower.triangularView<Eigen::Lower>() * eta;

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // Slice threshold; each proposal on the ellipse is kept with probability
  // min(1, L(f*)/L(f_prev)).
  const double threshold = loglik_prev + std::log(u01(rng));

  constexpr double two_pi = 2.0 * std::numbers::pi;
  double gamma = two_pi * u01(rng);
  double gamma_min = gamma - two_pi;
  double gamma_max = gamma;

  int shrinks = 0;
  for (;;) {
    Vector f_star = std::cos(gamma) * f_prev + std::sin(gamma) * f_prior;
    const double loglik_star = loglik_fn(f_star);
    // Non-finite values (and NaN) fail the comparison and shrink the bracket.
    if (loglik_star > threshold) {
      return EssResult{std::move(f_star), loglik_star, shrinks};
    }
    if (gamma < 0.0) {
      gamma_min = gamma;
    } else {
      gamma_max = gamma;
    }
    if (++shrinks > 100000) {
      throw NonFiniteLikelihood("ess_update: bracket shrank without acceptance");
    }
    gamma = gamma_min + (gamma_max - gamma_min) * u01(rng);
  }
}

Vector ess_update(const Vector& f_prev, const CholFactor& prior_chol,
                  const std::function<double(const Vector&)>& loglik_fn,
                  Rng& rng) {
  return ess_update(f_prev, loglik_fn(f_prev), prior_chol, loglik_fn, rng).f;
}

ChainState default_init(const ModelConfig& config, const Dataset& data) {
  ModelConfig cfg = config.resolved(data.d());
  ChainState s;
  s.g = cfg.deterministic ? kNuggetFloor : 0.1;
  s.theta_y = 0.5;
  if (cfg.layers >= 2) {
    s.theta_w = Vector::Constant(cfg.p, 0.5);
    s.w.resize(data.n(), cfg.p);
    for (int j = 0; j < cfg.p; ++j) s.w.col(j) = data.x.col(j % data.d());
  }
  if (cfg.layers == 3) {
    s.theta_z = Vector::Constant(cfg.p, 0.5);
    s.z = s.w;
  }
  return s;
}

namespace {

// Per-node cache: the factor of the node's prior covariance (always kept in
// sync with the current lengthscale and inputs) and the node log likelihood
// (refreshed lazily after the node vector moves).
struct NodeCache {
  CholFactor chol;
  double loglik = 0.0;
  bool loglik_stale = false;
};

class GibbsEngine {
 public:
  GibbsEngine(const ModelConfig& cfg, const Dataset& data, ChainState init)
      : cfg_(cfg), data_(data), s_(std::move(init)) {
    const int p = cfg_.p;
    if (cfg_.layers >= 2) {
      if (s_.w.rows() != data_.n() || s_.w.cols() != p ||
          s_.theta_w.size() != p) {
        throw DimensionMismatch("gibbs_run: init W inconsistent with config");
      }
      wnode_.resize(p);
      for (int i = 0; i < p; ++i) refresh_node(wnode_[i], w_inputs(),
                                               s_.w.col(i), s_.theta_w(i));
    }
    if (cfg_.layers == 3) {
      if (s_.z.rows() != data_.n() || s_.z.cols() != p ||
          s_.theta_z.size() != p) {
        throw DimensionMismatch("gibbs_run: init Z inconsistent with config");
      }
      znode_.resize(p);
      for (int i = 0; i < p; ++i) refresh_node(znode_[i], data_.x,
                                               s_.z.col(i), s_.theta_z(i));
    }
    outer_ = outer_loglik(data_.y, outer_design(), s_.theta_y, s_.g);
    s_.tau2hat = outer_.tau2hat;
  }

  void sweep(Rng& rng, TraceMeta& meta) {
    update_g(rng, meta);
    update_theta_y(rng, meta);
    if (cfg_.layers >= 2) {
      for (int i = 0; i < cfg_.p; ++i) update_theta_w(i, rng, meta);
    }
    if (cfg_.layers == 3) {
      for (int i = 0; i < cfg_.p; ++i) update_theta_z(i, rng, meta);
    }
    if (cfg_.layers >= 2) {
      for (int i = 0; i < cfg_.p; ++i) update_w_node(i, rng, meta);
    }
    if (cfg_.layers == 3) {
      for (int i = 0; i < cfg_.p; ++i) update_z_node(i, rng, meta);
    }
    s_.tau2hat = outer_.tau2hat;
  }

  const ChainState& state() const { return s_; }

 private:
  const Matrix& outer_design() const {
    return cfg_.layers == 1 ? data_.x : s_.w;
  }
  // Inputs of the layer feeding W: X for two layers, Z for three.
  const Matrix& w_inputs() const {
    return cfg_.layers == 3 ? s_.z : data_.x;
  }

  static void refresh_node(NodeCache& node, const Matrix& inputs,
                           const Vector& value, double theta) {
    Matrix k = cov_matrix(inputs, KernelParams{theta, 1.0, 0.0});
    node.chol = cholesky_jittered(k);
    node.loglik = latent_node_loglik(value, node.chol);
    node.loglik_stale = false;
  }

  void update_g(Rng& rng, TraceMeta& meta) {
    if (cfg_.deterministic) return;  // g pinned at the nugget floor
    ProfiledLik star_lik{};
    auto fn = [&](double gstar) {
      star_lik = outer_loglik(data_.y, outer_design(), s_.theta_y, gstar);
      return star_lik.loglik;
    };
    MhResult res = mh_update_scalar(s_.g, outer_.loglik, fn, cfg_.prior_g,
                                    cfg_.proposal, rng);
    ++meta.g.attempts;
    if (res.accepted) {
      ++meta.g.accepts;
      s_.g = res.value;
      outer_ = star_lik;
    }
  }

  void update_theta_y(Rng& rng, TraceMeta& meta) {
    ProfiledLik star_lik{};
    auto fn = [&](double theta_star) {
      star_lik = outer_loglik(data_.y, outer_design(), theta_star, s_.g);
      return star_lik.loglik;
    };
    MhResult res = mh_update_scalar(s_.theta_y, outer_.loglik, fn,
                                    cfg_.prior_theta_y, cfg_.proposal, rng);
    ++meta.theta_y.attempts;
    if (res.accepted) {
      ++meta.theta_y.accepts;
      s_.theta_y = res.value;
      outer_ = star_lik;
    }
  }

  void update_theta_w(int i, Rng& rng, TraceMeta& meta) {
    NodeCache& node = wnode_[i];
    if (node.loglik_stale) {
      node.loglik = latent_node_loglik(s_.w.col(i), node.chol);
      node.loglik_stale = false;
    }
    NodeCache star_node;
    auto fn = [&](double theta_star) {
      refresh_node(star_node, w_inputs(), s_.w.col(i), theta_star);
      return star_node.loglik;
    };
    MhResult res = mh_update_scalar(s_.theta_w(i), node.loglik, fn,
                                    cfg_.prior_theta_w, cfg_.proposal, rng);
    ++meta.theta_w[i].attempts;
    if (res.accepted) {
      ++meta.theta_w[i].accepts;
      s_.theta_w(i) = res.value;
      node = std::move(star_node);
    }
  }

  void update_theta_z(int i, Rng& rng, TraceMeta& meta) {
    NodeCache& node = znode_[i];
    if (node.loglik_stale) {
      node.loglik = latent_node_loglik(s_.z.col(i), node.chol);
      node.loglik_stale = false;
    }
    NodeCache star_node;
    auto fn = [&](double theta_star) {
      refresh_node(star_node, data_.x, s_.z.col(i), theta_star);
      return star_node.loglik;
    };
    MhResult res = mh_update_scalar(s_.theta_z(i), node.loglik, fn,
                                    cfg_.prior_theta_z, cfg_.proposal, rng);
    ++meta.theta_z[i].attempts;
    if (res.accepted) {
      ++meta.theta_z[i].accepts;
      s_.theta_z(i) = res.value;
      node = std::move(star_node);
    }
  }

  void update_w_node(int i, Rng& rng, TraceMeta& meta) {
    Matrix wbuf = s_.w;
    ProfiledLik eval_lik{};
    auto fn = [&](const Vector& wstar) {
      wbuf.col(i) = wstar;
      eval_lik = outer_loglik(data_.y, wbuf, s_.theta_y, s_.g);
      return eval_lik.loglik;
    };
    EssResult res =
        ess_update(s_.w.col(i), outer_.loglik, wnode_[i].chol, fn, rng);
    s_.w.col(i) = res.f;
    outer_ = eval_lik;  // last evaluation is the accepted proposal
    wnode_[i].loglik_stale = true;
    tally_ess(res, meta);
  }

  void update_z_node(int i, Rng& rng, TraceMeta& meta) {
    // Acceptance needs the full layer likelihood: all p node terms.
    double current_sum = 0.0;
    for (int k = 0; k < cfg_.p; ++k) {
      NodeCache& node = wnode_[k];
      if (node.loglik_stale) {
        node.loglik = latent_node_loglik(s_.w.col(k), node.chol);
        node.loglik_stale = false;
      }
      current_sum += node.loglik;
    }
    Matrix zbuf = s_.z;
    std::vector<NodeCache> eval_nodes(cfg_.p);
    auto fn = [&](const Vector& zstar) {
      zbuf.col(i) = zstar;
      double sum = 0.0;
      for (int k = 0; k < cfg_.p; ++k) {
        refresh_node(eval_nodes[k], zbuf, s_.w.col(k), s_.theta_w(k));
        sum += eval_nodes[k].loglik;
      }
      return sum;
    };
    EssResult res =
        ess_update(s_.z.col(i), current_sum, znode_[i].chol, fn, rng);
    s_.z.col(i) = res.f;
    for (int k = 0; k < cfg_.p; ++k) wnode_[k] = std::move(eval_nodes[k]);
    znode_[i].loglik_stale = true;
    tally_ess(res, meta);
  }

  static void tally_ess(const EssResult& res, TraceMeta& meta) {
    ++meta.ess_updates;
    meta.ess_shrinks += res.shrinks;
    meta.max_ess_shrinks = std::max(meta.max_ess_shrinks, res.shrinks);
  }

  const ModelConfig& cfg_;
  const Dataset& data_;
  ChainState s_;
  ProfiledLik outer_{};
  std::vector<NodeCache> wnode_;
  std::vector<NodeCache> znode_;
};

}  // namespace

Trace gibbs_run(const ModelConfig& config, const Dataset& data,
                const ChainState& init, int iters, Rng& rng) {
  ModelConfig cfg = config.resolved(data.d());
  if (data.n() < 1) throw DimensionMismatch("gibbs_run: empty dataset");
  if (iters < 1) throw ConfigError("gibbs_run: iters must be >= 1");

  Trace trace;
  trace.meta.iters = iters;
  trace.meta.theta_w.resize(cfg.layers >= 2 ? cfg.p : 0);
  trace.meta.theta_z.resize(cfg.layers == 3 ? cfg.p : 0);
  trace.states.reserve(iters);
  trace.iteration.reserve(iters);

  GibbsEngine engine(cfg, data, init);
  for (int t = 1; t <= iters; ++t) {
    try {
      engine.sweep(rng, trace.meta);
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite(std::string(e.what()) + " (gibbs iteration " +
                                std::to_string(t) + ")");
    }
    trace.states.push_back(engine.state());
    trace.iteration.push_back(t);
  }
  return trace;
}

Trace trim(const Trace& trace, int burn, int thin) {
  if (thin < 1) throw ConfigError("trim: thin must be >= 1");
  if (burn < 0) throw ConfigError("trim: burn must be >= 0");
  if (burn >= trace.size()) throw EmptyTrace("trim: nothing left after burn-in");
  Trace out;
  out.meta = trace.meta;
  for (Index i = burn; i < trace.size(); i += thin) {
    out.states.push_back(trace.states[i]);
    out.iteration.push_back(trace.iteration[i]);
  }
  return out;
}

}  // namespace dgpal
