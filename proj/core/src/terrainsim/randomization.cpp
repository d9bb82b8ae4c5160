#include "mmloco/terrainsim/randomization.hpp"

namespace mmloco::terrainsim {

void tier_band(ExteroNoiseTier tier, double& lo, double& hi) {
  switch (tier) {
    case ExteroNoiseTier::kLow: lo = 0.0; hi = 0.03; return;
    case ExteroNoiseTier::kMedium: lo = 0.03; hi = 0.1; return;
    case ExteroNoiseTier::kHigh: lo = 0.1; hi = 0.3; return;
  }
  lo = hi = 0.0;
}

EpisodeRandomization randomize_episode(RngStream& rng, const RandomizationRanges& r) {
  EpisodeRandomization e;
  e.payload_kg = rng.uniform(r.payload_lo, r.payload_hi);
  e.kp_factor = rng.uniform(r.gain_lo, r.gain_hi);
  e.kd_factor = rng.uniform(r.gain_lo, r.gain_hi);
  e.motor_strength = rng.uniform(r.gain_lo, r.gain_hi);
  for (double& c : e.com_shift_mm) c = rng.uniform(r.com_lo, r.com_hi);
  e.friction = rng.uniform(r.friction_lo, r.friction_hi);
  e.system_delay_ms = rng.uniform(r.delay_lo, r.delay_hi);

  double u = rng.uniform01();
  if (u < r.tier_p_low)
    e.extero_tier = ExteroNoiseTier::kLow;
  else if (u < r.tier_p_low + r.tier_p_medium)
    e.extero_tier = ExteroNoiseTier::kMedium;
  else
    e.extero_tier = ExteroNoiseTier::kHigh;

  e.perturb.bias.droll = rng.uniform(-r.bias_roll, r.bias_roll);
  e.perturb.bias.dpitch = rng.uniform(-r.bias_pitch, r.bias_pitch);
  e.perturb.bias.dyaw = rng.uniform(-r.bias_yaw, r.bias_yaw);
  e.perturb.bias.dx = rng.uniform(-r.bias_xyz, r.bias_xyz);
  e.perturb.bias.dy = rng.uniform(-r.bias_xyz, r.bias_xyz);
  e.perturb.bias.dz = rng.uniform(-r.bias_xyz, r.bias_xyz);

  e.perturb.mu_x = rng.uniform(0.0, r.mu_xy_hi);
  e.perturb.mu_y = rng.uniform(0.0, r.mu_xy_hi);
  e.perturb.mu_z = rng.uniform(0.0, r.mu_z_hi);
  e.perturb.sigma_x = rng.uniform(0.0, r.sigma_xy_hi);
  e.perturb.sigma_y = rng.uniform(0.0, r.sigma_xy_hi);
  e.perturb.sigma_z = rng.uniform(0.0, r.sigma_z_hi);
  e.perturb.prune_base = rng.uniform(0.0, r.prune_base_hi);
  return e;
}

}  // namespace mmloco::terrainsim
