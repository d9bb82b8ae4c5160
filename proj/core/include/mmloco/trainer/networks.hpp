#pragma once

#include "mmloco/encoders/encoders.hpp"
#include "mmloco/numerics/adam.hpp"
#include "mmloco/numerics/checkpoint.hpp"
#include "mmloco/terrainsim/environment.hpp"

namespace mmloco::trainer {

using encoders::Ctx;
using encoders::EncoderConfig;
using encoders::Parameter;
using numerics::Tensor;
using numerics::Var;

struct ModelConfig {
  EncoderConfig enc;
  std::vector<std::size_t> actor_hidden = {128, 128};
  std::vector<std::size_t> critic_hidden = {256, 128};
  double init_log_std = 0.0;  // exp(0) = 1.0 initial action std

  std::size_t actor_input_dim() const { return enc.proprio_dim + enc.z_fused() + 3; }
  std::size_t critic_input_dim() const {
    return terrainsim::kPrivilegedDim + enc.height_dim();
  }
};

// Every network in the stack, with a stable parameter order for optimizer
// state and checkpoints. The actor head is a diagonal Gaussian over 12 joint
// target offsets with state-independent log-std.
struct ModelSet {
  ModelConfig cfg;
  encoders::ProprioEncoder proprio;
  encoders::ExteroEncoder extero;
  encoders::MultiModalMixer mixer;
  encoders::HeightDecoder height_dec;
  encoders::NextObsDecoder obs_dec;
  encoders::AnchorEncoder anchor;
  encoders::Mlp actor;
  Parameter log_std;
  encoders::Mlp critic;

  ModelSet(const ModelConfig& cfg, RngStream& rng);

  std::vector<Parameter*> parameters();
  void save(numerics::Checkpoint& ck, const std::string& prefix = "param/") const;
  void load(const numerics::Checkpoint& ck, const std::string& prefix = "param/");

  // Actor forward: obs_now [B,45] (+) z_pe [B,64] (+) v_input [B,3] -> mu [B,12].
  Var actor_mean(Ctx& ctx, const Var& obs_now, const Var& z_pe, const Var& v_input);
  // Critic forward: bundle [B,59] (+) height map [B,748] -> value [B].
  Var critic_value(Ctx& ctx, const Var& privileged);
};

// Per-parameter Adam states in the same stable order.
std::vector<numerics::AdamState> make_adam(ModelSet& models, double lr);
void save_adam(const std::vector<numerics::AdamState>& adam, ModelSet& models,
               numerics::Checkpoint& ck);
void load_adam(std::vector<numerics::AdamState>& adam, ModelSet& models,
               const numerics::Checkpoint& ck);

// Diagonal Gaussian log-density of actions under (mu, exp(log_std)); [B].
Var gaussian_log_prob(const Var& actions, const Var& mu, const Var& log_std);
// Entropy of the diagonal Gaussian policy (state-independent), scalar.
Var gaussian_entropy(const Var& log_std);

}  // namespace mmloco::trainer
