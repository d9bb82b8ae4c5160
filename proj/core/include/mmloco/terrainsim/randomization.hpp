#pragma once

#include "mmloco/perception/perturb.hpp"
#include "mmloco/support/rng.hpp"

namespace mmloco::terrainsim {

enum class ExteroNoiseTier { kLow, kMedium, kHigh };

// Noise magnitude band in meters for a tier: low [0,0.03], medium [0.03,0.1],
// high [0.1,0.3], drawn with probabilities 0.3 / 0.5 / 0.2.
void tier_band(ExteroNoiseTier tier, double& lo, double& hi);

// Per-episode physical and sensing randomization, uniform within the
// documented ranges.
struct EpisodeRandomization {
  double payload_kg = 0.0;          // [-1, 2]
  double kp_factor = 1.0;           // [0.9, 1.1]
  double kd_factor = 1.0;           // [0.9, 1.1]
  double motor_strength = 1.0;      // [0.9, 1.1]
  double com_shift_mm[3] = {0, 0, 0};  // [-50, 50] each axis
  double friction = 1.0;            // [0.2, 1.25]
  double system_delay_ms = 0.0;     // [0, 15]
  ExteroNoiseTier extero_tier = ExteroNoiseTier::kLow;
  perception::PerturbationConfig perturb;  // alignment bias + point noise + pruning
};

struct RandomizationRanges {
  double payload_lo = -1.0, payload_hi = 2.0;
  double gain_lo = 0.9, gain_hi = 1.1;
  double com_lo = -50.0, com_hi = 50.0;
  double friction_lo = 0.2, friction_hi = 1.25;
  double delay_lo = 0.0, delay_hi = 15.0;
  double tier_p_low = 0.3, tier_p_medium = 0.5, tier_p_high = 0.2;
  // Alignment bias table.
  double bias_roll = 0.2, bias_pitch = 0.15, bias_yaw = 0.1, bias_xyz = 0.1;
  // Point noise table, meters.
  double mu_xy_hi = 0.02, mu_z_hi = 0.05, sigma_xy_hi = 0.01, sigma_z_hi = 0.03;
  // Pruning base probability has no published range; this cap is an artifact
  // knob.
  double prune_base_hi = 0.3;
};

EpisodeRandomization randomize_episode(RngStream& rng,
                                       const RandomizationRanges& ranges = RandomizationRanges{});

// Actor observation noise bands (uniform, per step). The gravity band is
// asymmetric as published.
struct ObservationNoise {
  double joint_pos = 0.01;     // +/- rad
  double joint_vel = 1.5;      // +/- rad/s
  double lin_vel = 0.1;        // +/- m/s
  double ang_vel = 0.2;        // +/- rad/s
  double gravity_lo = -0.05;   // m/s^2 band low
  double gravity_hi = 0.5;     // m/s^2 band high
};

}  // namespace mmloco::terrainsim
