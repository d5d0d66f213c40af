#pragma once

#include "dgpal/errors.hpp"
#include "dgpal/types.hpp"

namespace dgpal {

/// Gamma prior G(shape, rate) on a positive hyperparameter.  Model defaults
/// fix shape at 3/2 and differentiate by rate.
struct PriorSpec {
  double shape = 1.5;
  double rate = 3.9;
};

/// Uniform sliding-window proposal: star ~ Unif(l*prev/u, u*prev/l).
struct ProposalSpec {
  double l = 1.0;
  double u = 2.0;
};

/// Layer layout, priors, proposal window, and chain lengths for one fit.
struct ModelConfig {
  int layers = 2;          // 1, 2, or 3
  int p = 0;               // latent nodes per hidden layer; 0 = match d
  bool deterministic = false;  // fix g at the nugget floor

  PriorSpec prior_g{1.5, 3.9};
  PriorSpec prior_theta_y{1.5, 3.9};
  PriorSpec prior_theta_w{1.5, 3.9};
  PriorSpec prior_theta_z{1.5, 3.9};

  ProposalSpec proposal{1.0, 2.0};

  int iters = 2500;
  int burn = 500;
  int thin = 2;

  /// Fill p (match input dimension) and install the layer-dependent prior
  /// rates: b_g = 3.9 throughout; lengthscale rates 3.9/1.5 (one layer),
  /// 3.9/6 and 3.9/4 (outer/hidden, two layers), 3.9/6, 3.9/12, 3.9/4
  /// (outer/middle/inner, three layers).
  ModelConfig resolved(Index d) const;

  void validate() const;
};

}  // namespace dgpal
