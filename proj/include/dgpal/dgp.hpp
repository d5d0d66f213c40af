#pragma once

#include <optional>

#include "dgpal/sampler.hpp"

namespace dgpal {

/// A fitted one/two/three-layer model: resolved config, training data, and
/// the trimmed posterior trace.  `final_state` is the last pre-trim state of
/// the chain, kept so a later fit can restart where this one left off.
struct FittedModel {
  ModelConfig config;
  Dataset data;
  Trace trace;
  ChainState final_state;
};

/// Run the Gibbs sampler on (x, y) and attach the trimmed trace.  Inputs are
/// expected coded to the unit cube and responses standardized by the caller.
/// When `init` comes from a model fit to a prefix of the current data, the
/// latent layers are extended to the new rows via their conditional means.
FittedModel fit(const ModelConfig& config, Dataset data, std::uint64_t seed,
                const std::optional<ChainState>& init = std::nullopt);

enum class LatentMode { Mean, Sample };

/// Per-iteration latent images of a test design: w[t] is n' x p (and z[t]
/// for three-layer models).  Empty vectors for one-layer models.
struct MappedTest {
  std::vector<Matrix> w;
  std::vector<Matrix> z;
};

/// Propagate test inputs through the sampled latent layers.  Mean mode uses
/// the conditional mean only; sample mode adds independent Gaussian draws
/// with the pointwise conditional variances.
MappedTest map_latents(const FittedModel& model, const Matrix& xtest,
                       LatentMode mode, std::uint64_t seed, int threads = 0);

/// Posterior predictive moments aggregated over retained iterations by the
/// law of total expectation/variance.  The between-iteration spread uses
/// divisor |T|-1 pointwise and |T|-n' for the full covariance; the latter
/// requires more retained samples than test points.
PredictiveMoments predict(const FittedModel& model, const Matrix& xtest,
                          bool pointwise = true, bool noise_free = false,
                          LatentMode latent_mode = LatentMode::Sample,
                          std::uint64_t seed = 0, int threads = 0);

}  // namespace dgpal
