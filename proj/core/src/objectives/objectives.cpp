#include "mmloco/objectives/objectives.hpp"

#include <cmath>

namespace mmloco::objectives {

using namespace mmloco::numerics;

namespace {
constexpr double kTwoPiE = 17.079468445347132;  // 2*pi*e
constexpr double kStdFloor = 1e-6;
constexpr double kVarFloor = 1e-6;
}  // namespace

void adaptive_beta_update(BetaSchedulerState& state, double recon_loss) {
  if (!(recon_loss >= 0.0))
    throw std::invalid_argument("adaptive_beta_update: reconstruction loss must be >= 0");
  double k = std::exp(state.delta * (state.tau - recon_loss));
  double next = k * state.beta;
  if (next < state.beta_min) next = state.beta_min;
  if (next > state.beta_max) next = state.beta_max;
  state.beta = next;
}

void ReturnsWindow::push(double episode_return) {
  values_.push_back(episode_return);
  while (values_.size() > capacity_) values_.pop_front();
}

double bootstrap_probability(const ReturnsWindow& returns) {
  if (returns.empty())
    throw std::invalid_argument("bootstrap_probability: empty returns window");
  double mean = 0.0;
  for (double r : returns.values()) mean += r;
  mean /= static_cast<double>(returns.size());
  if (mean == 0.0) return 0.0;  // maximally uncertain
  double var = 0.0;
  for (double r : returns.values()) var += (r - mean) * (r - mean);
  var /= static_cast<double>(returns.size());
  double cv = std::sqrt(var) / std::abs(mean);
  return 1.0 - std::tanh(cv);
}

Var loss_estimation(const Var& v_hat, const Var& v_true) { return mse(v_hat, v_true); }

Var gaussian_kl(const Var& mean, const Var& std) {
  require(mean.val().same_shape(std.val()), "gaussian_kl: mean/std shape mismatch");
  for (double v : std.val().data)
    if (v < 0.0) throw std::invalid_argument("gaussian_kl: negative std");
  // KL per dim: 0.5*(mu^2 + s^2 - 1 - log s^2); summed over dims, averaged
  // over batch rows.
  Var s = maximum(std, constant(kStdFloor));
  Var s2 = square(s);
  Var per_dim = mul(constant(0.5),
                    sub(add(square(mean), s2), add(constant(1.0), log(s2))));
  if (mean.val().rank() == 2) return mean_all(sum_axis(per_dim, 1));
  return sum_all(per_dim);
}

Var loss_vae_proprio(const Var& o_next_pred, const Var& o_next, const Var& z_mean,
                     const Var& z_std, double beta) {
  return add(mse(o_next_pred, o_next), mul(constant(beta), gaussian_kl(z_mean, z_std)));
}

Var loss_vae_extero(const Var& h_pred, const Var& h_true, const Var& z_mean, const Var& z_std,
                    double beta) {
  return add(mse(h_pred, h_true), mul(constant(beta), gaussian_kl(z_mean, z_std)));
}

Var loss_contrastive(const Var& z_pe, const Var& anchor, const Var& z_random,
                     const ContrastiveConfig& cfg) {
  require(cfg.margin > 0.0, "loss_contrastive: margin must be positive");
  require(z_pe.val().same_shape(anchor.val()) && z_pe.val().same_shape(z_random.val()),
          "loss_contrastive: shape mismatch");
  Var pos = square(sub(z_pe, anchor));
  Var hinge = relu(sub(constant(cfg.margin), sub(z_pe, z_random)));
  Var neg = square(hinge);
  Var per_elem = add(mul(constant(cfg.lambda), pos), mul(constant(1.0 - cfg.lambda), neg));
  // Squared norms per row, averaged over the batch.
  if (z_pe.val().rank() == 2) return mean_all(sum_axis(per_elem, 1));
  return sum_all(per_elem);
}

Var versatility_gain(const Var& z_means, const Var& z_stds) {
  require(z_means.val().rank() == 2 && z_means.val().same_shape(z_stds.val()),
          "versatility_gain: expects matching [B,Z] tensors");
  require(z_means.val().shape[0] >= 2, "versatility_gain: batch size must be >= 2");
  Var s = maximum(z_stds, constant(kStdFloor));
  // Conditional entropy: batch mean of 0.5*sum(log(2*pi*e*s^2)).
  Var cond = mean_all(sum_axis(mul(constant(0.5), log(mul(constant(kTwoPiE), square(s)))), 1));
  // Marginal: moment-matched diagonal Gaussian of the mixture,
  // var_j = E[s_j^2] + Var[mu_j].
  Var var_j = add(mean_axis(square(s), 0), variance_axis(z_means, 0));
  Var var_floored = maximum(var_j, constant(kVarFloor));
  Var marg = sum_all(mul(constant(0.5), log(mul(constant(kTwoPiE), var_floored))));
  return sub(marg, cond);
}

double encoder_kl_scale() { return 0.1; }
double encoder_kl_scale(double configured) { return configured; }

}  // namespace mmloco::objectives
