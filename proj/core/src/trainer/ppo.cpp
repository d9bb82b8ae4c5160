#include "mmloco/trainer/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mmloco::trainer {

using namespace mmloco::numerics;
using namespace mmloco::objectives;

namespace {

std::vector<std::size_t> index_range(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.index(i)]);
}

Tensor uniform_tensor(Shape s, double lo, double hi, RngStream& rng) {
  Tensor t = Tensor::zeros(std::move(s));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

Tensor slice1(const Tensor& t, const std::vector<std::size_t>& rows) {
  Tensor out = Tensor::zeros({rows.size()});
  for (std::size_t i = 0; i < rows.size(); ++i) out.data[i] = t.data[rows[i]];
  return out;
}

}  // namespace

LossReport ppo_update(RolloutBatch& b, const AdvantageResult& adv, ModelSet& models,
                      std::vector<AdamState>& adam, const PPOConfig& cfg,
                      BetaSchedulerState& beta, const ContrastiveConfig& contrastive,
                      RngStream& rng) {
  LossReport report;
  const std::size_t R = b.rows();
  const EncoderConfig& enc = models.cfg.enc;
  const std::size_t slots = enc.slots();
  const std::size_t N = enc.max_points;
  const std::size_t hdim = enc.height_dim();

  // Snapshot for fault recovery.
  auto params = models.parameters();
  std::vector<Tensor> snapshot;
  snapshot.reserve(params.size());
  for (Parameter* p : params) snapshot.push_back(p->value);
  std::vector<AdamState> adam_snapshot = adam;

  std::vector<std::size_t> order = index_range(R);
  std::size_t mb_count = static_cast<std::size_t>(std::max(1, cfg.minibatches));
  std::size_t mb_size = R / mb_count;
  require(mb_size > 0, "ppo_update: more minibatches than samples");

  double recon_acc = 0.0;
  std::size_t passes = 0;

  try {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      shuffle_indices(order, rng);
      for (std::size_t mb = 0; mb < mb_count; ++mb) {
        std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(mb * mb_size),
                                      order.begin() + static_cast<std::ptrdiff_t>((mb + 1) * mb_size));
        std::size_t B = rows.size();

        Tape tape;
        Ctx ctx(tape, true);

        // Re-encode the stored inputs with the rollout's noise vectors.
        Var stack = constant(Tensor({B, slots, 45}, gather_rows(b.stacks, rows).data));
        auto zp = models.proprio.forward(ctx, stack, gather_rows(b.eps_p, rows));
        Var pts = constant(Tensor({B, N, 3}, gather_rows(b.points, rows).data));
        auto ze = models.extero.forward(ctx, pts, gather_rows(b.eps_e, rows));
        auto zpe = models.mixer.forward(ctx, zp.z.sample, ze.z.sample,
                                        gather_rows(b.eps_pe, rows));

        Var mask = constant(gather_rows(b.boot_mask, rows));
        Var inv_mask = sub(constant(Tensor::full({B, 3}, 1.0)), mask);
        Var v_input = add(mul(zp.velocity, mask),
                          mul(constant(gather_rows(b.v_obs, rows)), inv_mask));

        Var mu = models.actor_mean(ctx, constant(gather_rows(b.obs_now, rows)), zpe.sample,
                                   v_input);
        Var log_std = ctx.use(models.log_std);
        Var logp_new = gaussian_log_prob(constant(gather_rows(b.actions, rows)), mu, log_std);
        Var ratio = exp(sub(logp_new, constant(slice1(b.logp_old, rows))));

        Var advantages = constant(slice1(adv.advantages, rows));
        Var surr1 = mul(ratio, advantages);
        Var surr2 = mul(clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio), advantages);
        Var clip_loss = neg(mean_all(minimum(surr1, surr2)));

        Var value = models.critic_value(ctx, constant(gather_rows(b.privileged, rows)));
        Var value_loss = mean_all(square(sub(value, constant(slice1(adv.returns, rows)))));

        Var entropy = gaussian_entropy(log_std);

        // Auxiliary objectives.
        Var est = loss_estimation(zp.velocity, constant(gather_rows(b.v_true, rows)));
        Var o_next_pred = models.obs_dec.forward(ctx, zp.z.sample);
        Var vae_p = loss_vae_proprio(o_next_pred, constant(gather_rows(b.o_next, rows)),
                                     zp.z.mean, zp.z.std, beta.beta);
        Var h_true = constant(gather_rows(b.h_true, rows));
        Var h_pred = models.height_dec.forward(ctx, zpe.sample);
        Var vae_e = loss_vae_extero(h_pred, h_true, zpe.mean, zpe.std, beta.beta);
        Var anchor = models.anchor.forward(ctx, h_true);
        Var z_random = constant(uniform_tensor({B, enc.z_fused()}, -1.0, 1.0, rng));
        Var contr = loss_contrastive(zpe.sample, anchor, z_random, contrastive);
        Var gain = versatility_gain(zpe.mean, zpe.std);
        Var kl_pe = gaussian_kl(zpe.mean, zpe.std);

        Var total = add(clip_loss, mul(constant(cfg.value_coef), value_loss));
        total = sub(total, mul(constant(cfg.entropy_coef), entropy));
        Var aux = add(add(est, vae_p), add(vae_e, contr));
        total = add(total, mul(constant(cfg.aux_scale), aux));
        total = add(total, mul(constant(cfg.lambda_e), kl_pe));
        total = sub(total, mul(constant(cfg.versatility_scale), gain));

        tape.backward(total);

        // Global gradient-norm clip, then Adam.
        double norm_sq = 0.0;
        std::vector<Tensor> grads;
        grads.reserve(params.size());
        for (Parameter* p : params) {
          grads.push_back(ctx.grad(*p));
          for (double g : grads.back().data) norm_sq += g * g;
        }
        double norm = std::sqrt(norm_sq);
        double scale = (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) ? cfg.grad_clip / norm : 1.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
          if (scale != 1.0)
            for (double& g : grads[i].data) g *= scale;
          adam_step(params[i]->value, grads[i], adam[i]);
        }

        // Epoch-mean reconstruction loss for the beta scheduler.
        double recon_p = mse(o_next_pred, constant(gather_rows(b.o_next, rows))).val().scalar();
        double recon_e = mse(h_pred, h_true).val().scalar();
        recon_acc += 0.5 * (recon_p + recon_e);
        ++passes;

        report.clip_loss += clip_loss.val().scalar();
        report.value_loss += value_loss.val().scalar();
        report.entropy += entropy.val().scalar();
        report.est_loss += est.val().scalar();
        report.vae_p += vae_p.val().scalar();
        report.vae_e += vae_e.val().scalar();
        report.contrastive += contr.val().scalar();
        report.versatility += gain.val().scalar();
        report.kl_pe += kl_pe.val().scalar();
        report.grad_norm += norm;
        report.total += total.val().scalar();
      }
    }
  } catch (const std::exception&) {
    // Non-finite loss or gradient: restore and flag the fault.
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snapshot[i];
    adam = adam_snapshot;
    report = LossReport{};
    report.fault = true;
    return report;
  }

  double inv = passes ? 1.0 / static_cast<double>(passes) : 0.0;
  report.clip_loss *= inv;
  report.value_loss *= inv;
  report.entropy *= inv;
  report.est_loss *= inv;
  report.vae_p *= inv;
  report.vae_e *= inv;
  report.contrastive *= inv;
  report.versatility *= inv;
  report.kl_pe *= inv;
  report.grad_norm *= inv;
  report.total *= inv;
  report.recon_mean = passes ? recon_acc / static_cast<double>(passes) : 0.0;

  adaptive_beta_update(beta, report.recon_mean);
  return report;
}

}  // namespace mmloco::trainer
