#pragma once

#include <vector>

#include "mmloco/objectives/objectives.hpp"
#include "mmloco/trainer/networks.hpp"

namespace mmloco::trainer {

using terrainsim::Environment;

// Flattened step-major (t * num_envs + e) trajectory storage. Latent noise
// vectors are recorded so the update pass reproduces the rollout's samples
// through the reparameterization exactly.
struct RolloutBatch {
  std::size_t steps = 0;
  std::size_t envs = 0;
  std::size_t rows() const { return steps * envs; }

  Tensor stacks;      // [rows, slots*45]
  Tensor obs_now;     // [rows, 45]
  Tensor points;      // [rows, max_points*3]
  Tensor v_obs;       // [rows, 3]
  Tensor boot_mask;   // [rows, 3] (1: policy saw v_hat, else the observed v)
  Tensor eps_p;       // [rows, 32]
  Tensor eps_e;       // [rows, 32]
  Tensor eps_pe;      // [rows, 64]
  Tensor privileged;  // [rows, 59+748]
  Tensor actions;     // [rows, 12]
  Tensor logp_old;    // [rows]
  Tensor values;      // [rows]
  Tensor rewards;     // [rows]
  Tensor dones;       // [rows]
  Tensor v_true;      // [rows, 3]
  Tensor o_next;      // [rows, 45] true next proprio observation
  Tensor h_true;      // [rows, 748]
  Tensor last_values; // [envs] critic bootstrap for the final step

  // Iteration statistics gathered during collection.
  double mean_lin_tracking = 0.0;
  double mean_reward = 0.0;
  std::vector<double> finished_returns;
  std::vector<double> finished_fractions;
  long stumbles = 0;
  long falls = 0;
};

struct CollectConfig {
  std::size_t steps = 24;
  double p_boot = 0.0;
};

// Rolls every environment `steps` policy steps under the current models (no
// gradients). Completed-episode returns land in batch.finished_returns.
RolloutBatch collect_rollouts(std::vector<Environment>& envs, ModelSet& models,
                              const CollectConfig& cfg, RngStream& rng);

}  // namespace mmloco::trainer
