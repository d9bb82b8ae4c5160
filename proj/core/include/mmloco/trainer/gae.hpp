#pragma once

#include "mmloco/trainer/rollout.hpp"

namespace mmloco::trainer {

struct AdvantageResult {
  Tensor advantages;  // [rows], normalized over the batch
  Tensor returns;     // [rows], advantage + value (pre-normalization)
};

// Generalized advantage estimation with episode-boundary masking. Terminal
// steps stop the bootstrap; the final step bootstraps from last_values.
AdvantageResult gae_advantages(const RolloutBatch& batch, double gamma, double lambda,
                               bool normalize = true);

}  // namespace mmloco::trainer
