#pragma once

#include <cstddef>
#include <deque>

#include "mmloco/numerics/ops.hpp"

namespace mmloco::objectives {

using numerics::Tensor;
using numerics::Var;

// Adaptive beta scheduler for the VAE losses: at every iteration beta is
// scaled by k = exp(delta * (tau - L_recon)) and clamped into
// [beta_min, beta_max].
struct BetaSchedulerState {
  double beta = 5.0;
  double delta = 0.1;   // learning rate for k
  double tau = 0.05;    // allowed reconstruction error
  double beta_min = 0.5;
  double beta_max = 10.0;
};

void adaptive_beta_update(BetaSchedulerState& state, double recon_loss);

struct ContrastiveConfig {
  double margin = 1.0;   // m
  double lambda = 0.5;   // positive/negative mixing weight
};

// Cumulative returns of the last m completed episodes (any environment).
class ReturnsWindow {
 public:
  explicit ReturnsWindow(std::size_t capacity = 100) : capacity_(capacity) {}
  void push(double episode_return);
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const std::deque<double>& values() const { return values_; }
  void assign(const std::deque<double>& v) { values_ = v; }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<double> values_;
};

// p_boot = 1 - tanh(CV(R)) with CV = std/|mean|; zero mean pins p to 0.
double bootstrap_probability(const ReturnsWindow& returns);

// MSE between the estimated and true body velocity (3-vectors or batches).
Var loss_estimation(const Var& v_hat, const Var& v_true);

// Closed-form KL(N(mean, std^2) || N(0, I)), averaged over the batch axis when
// the inputs are [B,Z]. std is floored at 1e-6 before the log.
Var gaussian_kl(const Var& mean, const Var& std);

// MSE(next-obs reconstruction) + beta * KL.
Var loss_vae_proprio(const Var& o_next_pred, const Var& o_next, const Var& z_mean,
                     const Var& z_std, double beta);

// MSE(height reconstruction) + beta * KL over z^pe.
Var loss_vae_extero(const Var& h_pred, const Var& h_true, const Var& z_mean, const Var& z_std,
                    double beta);

// lambda*||z - anchor||^2 + (1-lambda)*||max(0, m - (z - z_random))||^2,
// hinge applied elementwise before the squared norm; mean over batch rows.
Var loss_contrastive(const Var& z_pe, const Var& anchor, const Var& z_random,
                     const ContrastiveConfig& cfg);

// Versatility gain G = H(z) - H(z|o) over a batch of posteriors.
// H(z|o): batch mean of the diagonal Gaussian entropy 0.5*sum(log(2*pi*e*s^2)).
// H(z): entropy of the moment-matched diagonal Gaussian of the batch mixture,
// var_j = mean(std_j^2) + var(mean_j), with a 1e-6 variance floor.
Var versatility_gain(const Var& z_means, const Var& z_stds);

// lambda_e scale on the encoder KL in the combined objective; 0.1 by default,
// 1.0 turns the objective into pure state-visitation entropy maximization.
double encoder_kl_scale();
double encoder_kl_scale(double configured);

}  // namespace mmloco::objectives
