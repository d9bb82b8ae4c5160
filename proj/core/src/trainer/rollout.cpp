#include "mmloco/trainer/rollout.hpp"

#include <cmath>

#include "mmloco/terrainsim/rewards.hpp"

namespace mmloco::trainer {

using namespace mmloco::numerics;
using encoders::pack_points;

namespace {

Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor::zeros({rows, cols}); }

void put_row(Tensor& t, std::size_t row, const double* src, std::size_t n) {
  std::copy(src, src + n, t.data.begin() + static_cast<std::ptrdiff_t>(row * n));
}

Tensor normal_tensor(Shape s, RngStream& rng) {
  Tensor t = Tensor::zeros(std::move(s));
  for (double& v : t.data) v = rng.normal();
  return t;
}

}  // namespace

RolloutBatch collect_rollouts(std::vector<Environment>& envs, ModelSet& models,
                              const CollectConfig& cfg, RngStream& rng) {
  const std::size_t E = envs.size();
  const std::size_t T = cfg.steps;
  const EncoderConfig& enc = models.cfg.enc;
  const std::size_t slots = enc.slots();
  const std::size_t N = enc.max_points;
  const std::size_t priv_dim = models.cfg.critic_input_dim();
  const std::size_t hdim = enc.height_dim();

  RolloutBatch b;
  b.steps = T;
  b.envs = E;
  const std::size_t R = b.rows();
  b.stacks = zeros(R, slots * 45);
  b.obs_now = zeros(R, 45);
  b.points = zeros(R, N * 3);
  b.v_obs = zeros(R, 3);
  b.boot_mask = zeros(R, 3);
  b.eps_p = zeros(R, enc.z_proprio);
  b.eps_e = zeros(R, enc.z_extero);
  b.eps_pe = zeros(R, enc.z_fused());
  b.privileged = zeros(R, priv_dim);
  b.actions = zeros(R, 12);
  b.logp_old = Tensor::zeros({R});
  b.values = Tensor::zeros({R});
  b.rewards = Tensor::zeros({R});
  b.dones = Tensor::zeros({R});
  b.v_true = zeros(R, 3);
  b.o_next = zeros(R, 45);
  b.h_true = zeros(R, hdim);
  b.last_values = Tensor::zeros({E});

  double lin_track_acc = 0.0, reward_acc = 0.0;

  // Fills the per-step input tensors straight from the environments.
  auto gather_priv = [&](Tensor& priv_t) {
    for (std::size_t e = 0; e < E; ++e) {
      const auto& priv = envs[e].privileged();
      double* dst = priv_t.data.data() + e * priv_dim;
      std::copy(priv.bundle.begin(), priv.bundle.end(), dst);
      std::copy(priv.height_map.begin(), priv.height_map.end(),
                dst + terrainsim::kPrivilegedDim);
    }
  };

  for (std::size_t t = 0; t < T; ++t) {
    std::size_t base = t * E;

    Tensor stacks_step = zeros(E, slots * 45);
    Tensor obs_step = zeros(E, 45);
    Tensor pts_step = zeros(E, N * 3);
    Tensor vobs_step = zeros(E, 3);
    Tensor priv_step = zeros(E, priv_dim);
    for (std::size_t e = 0; e < E; ++e) {
      std::vector<double> st = envs[e].proprio_stack();
      put_row(stacks_step, e, st.data(), slots * 45);
      auto obs = envs[e].observation();
      put_row(obs_step, e, obs.proprio.data(), 45);
      Tensor packed = pack_points(envs[e].assembled_cloud(), N);
      put_row(pts_step, e, packed.data.data(), N * 3);
      put_row(vobs_step, e, obs.v_obs.data(), 3);
    }
    gather_priv(priv_step);

    Tensor eps_p = normal_tensor({E, enc.z_proprio}, rng);
    Tensor eps_e = normal_tensor({E, enc.z_extero}, rng);
    Tensor eps_pe = normal_tensor({E, enc.z_fused()}, rng);

    // Forward pass without gradients.
    Tape tape;
    Ctx ctx(tape, false);
    Var stack_var = constant(Tensor({E, slots, 45}, stacks_step.data));
    auto zp = models.proprio.forward(ctx, stack_var, eps_p);
    Var pts_var = constant(Tensor({E, N, 3}, pts_step.data));
    auto ze = models.extero.forward(ctx, pts_var, eps_e);
    auto zpe = models.mixer.forward(ctx, zp.z.sample, ze.z.sample, eps_pe);

    // Bootstrapped velocity input: v_hat with probability p_boot, otherwise
    // the noisy observed velocity channel.
    Tensor mask = zeros(E, 3);
    for (std::size_t e = 0; e < E; ++e) {
      double use_hat = rng.uniform01() < cfg.p_boot ? 1.0 : 0.0;
      for (std::size_t k = 0; k < 3; ++k) mask.data[e * 3 + k] = use_hat;
    }
    Var v_input = add(mul(zp.velocity, constant(mask)),
                      mul(constant(vobs_step),
                          sub(constant(Tensor::full({E, 3}, 1.0)), constant(mask))));

    Var mu = models.actor_mean(ctx, constant(obs_step), zpe.sample, v_input);

    Tensor actions = zeros(E, 12);
    for (std::size_t e = 0; e < E; ++e)
      for (std::size_t j = 0; j < 12; ++j) {
        double std = std::exp(models.log_std.value.data[j]);
        actions.data[e * 12 + j] = mu.val().data[e * 12 + j] + std * rng.normal();
      }
    Var logp = gaussian_log_prob(constant(actions), mu, ctx.use(models.log_std));
    Var value = models.critic_value(ctx, constant(priv_step));

    // Record the step.
    for (std::size_t e = 0; e < E; ++e) {
      std::size_t row = base + e;
      put_row(b.stacks, row, stacks_step.data.data() + e * slots * 45, slots * 45);
      put_row(b.obs_now, row, obs_step.data.data() + e * 45, 45);
      put_row(b.points, row, pts_step.data.data() + e * N * 3, N * 3);
      put_row(b.v_obs, row, vobs_step.data.data() + e * 3, 3);
      put_row(b.boot_mask, row, mask.data.data() + e * 3, 3);
      put_row(b.eps_p, row, eps_p.data.data() + e * enc.z_proprio, enc.z_proprio);
      put_row(b.eps_e, row, eps_e.data.data() + e * enc.z_extero, enc.z_extero);
      put_row(b.eps_pe, row, eps_pe.data.data() + e * enc.z_fused(), enc.z_fused());
      put_row(b.privileged, row, priv_step.data.data() + e * priv_dim, priv_dim);
      put_row(b.actions, row, actions.data.data() + e * 12, 12);
      b.logp_old.data[row] = logp.val().data[e];
      b.values.data[row] = value.val().data[e];
      // Time-t auxiliary targets (noiseless).
      auto v_now = envs[e].true_velocity();
      put_row(b.v_true, row, v_now.data(), 3);
      const auto& h = envs[e].true_height_map();
      put_row(b.h_true, row, h.data(), hdim);
    }

    // Step every environment with its own action and velocity estimate.
    for (std::size_t e = 0; e < E; ++e) {
      std::size_t row = base + e;
      std::array<double, 12> act{};
      for (std::size_t j = 0; j < 12; ++j) act[j] = actions.data[e * 12 + j];
      std::array<double, 3> v_hat{};
      for (std::size_t k = 0; k < 3; ++k) v_hat[k] = zp.velocity.val().data[e * 3 + k];

      auto res = envs[e].step(act, v_hat);
      b.rewards.data[row] = res.reward;
      b.dones.data[row] = res.done ? 1.0 : 0.0;
      lin_track_acc += res.terms.value[terrainsim::kLinVelTracking];
      reward_acc += res.reward;
      b.stumbles += res.events.stumbles;
      if (res.events.fall) b.falls += 1;
      if (res.done) {
        b.finished_returns.push_back(res.episode_return);
        b.finished_fractions.push_back(res.traversed_fraction);
      }
      // Next-observation target; on episode ends this crosses the reset
      // boundary, a negligible fraction of rows.
      auto o_next = envs[e].true_proprio();
      put_row(b.o_next, row, o_next.data(), 45);
    }
  }

  // Critic bootstrap for the state after the final step.
  {
    Tape tape;
    Ctx ctx(tape, false);
    Tensor priv_last = zeros(E, priv_dim);
    gather_priv(priv_last);
    Var value = models.critic_value(ctx, constant(priv_last));
    for (std::size_t e = 0; e < E; ++e) b.last_values.data[e] = value.val().data[e];
  }

  b.mean_lin_tracking = lin_track_acc / static_cast<double>(R);
  b.mean_reward = reward_acc / static_cast<double>(R);
  return b;
}

}  // namespace mmloco::trainer
