#pragma once

#include "mmloco/objectives/objectives.hpp"
#include "mmloco/trainer/gae.hpp"

namespace mmloco::trainer {

struct PPOConfig {
  double clip_ratio = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs = 5;
  int minibatches = 4;
  double entropy_coef = 0.005;
  double value_coef = 0.5;
  double grad_clip = 1.0;
  double learning_rate = 3e-4;
  int num_envs = 256;
  int steps_per_iteration = 24;
  // Auxiliary scales; versatility doubles to 0.2 in the high-obstacle regime,
  // velocity tracking relaxes 1.0 -> 0.1 for the same regime.
  double versatility_scale = 0.1;
  double lambda_e = 0.1;
  double velocity_tracking_scale = 1.0;
  // Ablation switch over the unit-weighted auxiliary losses (est + VAEs +
  // contrastive); 0 leaves the pure PPO objective.
  double aux_scale = 1.0;
};

struct LossReport {
  double clip_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double est_loss = 0.0;
  double vae_p = 0.0;
  double vae_e = 0.0;
  double contrastive = 0.0;
  double versatility = 0.0;   // logged even when its scale is zero
  double kl_pe = 0.0;
  double recon_mean = 0.0;    // drives the adaptive-beta update
  double grad_norm = 0.0;
  double total = 0.0;
  bool fault = false;         // non-finite loss: parameters were restored
};

// One PPO iteration over the batch: epochs x minibatches of clipped policy
// loss + value loss + the auxiliary objective stack. The adaptive beta update
// runs once, on the epoch-mean reconstruction loss. A non-finite loss aborts
// the iteration and restores the pre-iteration parameters.
LossReport ppo_update(RolloutBatch& batch, const AdvantageResult& adv, ModelSet& models,
                      std::vector<numerics::AdamState>& adam, const PPOConfig& cfg,
                      objectives::BetaSchedulerState& beta,
                      const objectives::ContrastiveConfig& contrastive, RngStream& rng);

}  // namespace mmloco::trainer
