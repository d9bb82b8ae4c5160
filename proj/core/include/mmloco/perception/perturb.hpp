#pragma once

#include <cstdint>

#include "mmloco/perception/pointcloud.hpp"
#include "mmloco/support/rng.hpp"

namespace mmloco::perception {

// Sensor alignment bias: a fixed SE(3) offset between the exteroceptive
// sensor frame and the body frame, resampled at episode start.
struct AlignmentBias {
  double dx = 0.0, dy = 0.0, dz = 0.0;
  double droll = 0.0, dpitch = 0.0, dyaw = 0.0;

  SE3Transform transform() const;
};

// Per-episode exteroception perturbation parameters. Noise means/stds follow
// the anisotropic range-sensor model; std grows with a point's distance to the
// body origin as sigma * (1 + d / distance_ref).
struct PerturbationConfig {
  double mu_x = 0.0, mu_y = 0.0, mu_z = 0.0;     // meters
  double sigma_x = 0.0, sigma_y = 0.0, sigma_z = 0.0;
  double distance_ref = 1.0;                     // meters
  AlignmentBias bias;
  double prune_base = 0.0;                       // [0, 1]
  double prune_distance_max = 1.5;               // meters
  double prune_elevation_max = 0.5;              // meters
};

// Per-point pruning probability under this config; exposed for tests.
double pruning_probability(const PerturbationConfig& cfg, const Vec3& p, double z_ref);

// Each op derives its randomness from (seed, step, point index), so point
// order never changes the per-point outcome.
PointCloud apply_noise_model(const PointCloud& cloud, const PerturbationConfig& cfg,
                             std::uint64_t seed, std::uint64_t step);
PointCloud apply_alignment_bias(const PointCloud& cloud, const AlignmentBias& bias);
PointCloud apply_pruning(const PointCloud& cloud, const PerturbationConfig& cfg, double z_ref,
                         std::uint64_t seed, std::uint64_t step);

// Displacement with magnitude uniform in [lo, hi] and uniformly random
// direction; used for the tiered observation-noise bands.
PointCloud apply_tier_noise(const PointCloud& cloud, double lo, double hi, std::uint64_t seed,
                            std::uint64_t step);

}  // namespace mmloco::perception
