#include "mmloco/perception/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace mmloco::perception {

using mmloco::RngStream;

namespace {

// Streams are keyed by point content (bit patterns of the coordinates), so a
// permutation of the input permutes the output identically.
RngStream point_stream(std::uint64_t seed, std::uint64_t step, const Vec3& p, std::uint64_t tag) {
  auto bits = [](double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, sizeof(u));
    return u;
  };
  return RngStream::keyed({seed, step, bits(p.x), bits(p.y), bits(p.z), tag});
}

}  // namespace

SE3Transform AlignmentBias::transform() const {
  return {Mat3::from_rpy(droll, dpitch, dyaw), {dx, dy, dz}};
}

double pruning_probability(const PerturbationConfig& cfg, const Vec3& p, double z_ref) {
  double d = p.norm_xy();
  double dz = std::abs(p.z - z_ref);
  double prob = cfg.prune_base * (d / cfg.prune_distance_max) * (dz / cfg.prune_elevation_max);
  return std::clamp(prob, 0.0, 1.0);
}

PointCloud apply_noise_model(const PointCloud& cloud, const PerturbationConfig& cfg,
                             std::uint64_t seed, std::uint64_t step) {
  cloud.require_finite();
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) {
    RngStream rng = point_stream(seed, step, p, 0x6e6f6973ULL);
    double scale = 1.0 + p.norm() / cfg.distance_ref;
    out.points.push_back({p.x + rng.normal(cfg.mu_x, cfg.sigma_x * scale),
                          p.y + rng.normal(cfg.mu_y, cfg.sigma_y * scale),
                          p.z + rng.normal(cfg.mu_z, cfg.sigma_z * scale)});
  }
  out.require_finite();
  return out;
}

PointCloud apply_alignment_bias(const PointCloud& cloud, const AlignmentBias& bias) {
  return se3_apply(bias.transform(), cloud);
}

PointCloud apply_pruning(const PointCloud& cloud, const PerturbationConfig& cfg, double z_ref,
                         std::uint64_t seed, std::uint64_t step) {
  cloud.require_finite();
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) {
    RngStream rng = point_stream(seed, step, p, 0x7072756eULL);
    if (rng.uniform01() >= pruning_probability(cfg, p, z_ref)) out.points.push_back(p);
  }
  return out;
}

PointCloud apply_tier_noise(const PointCloud& cloud, double lo, double hi, std::uint64_t seed,
                            std::uint64_t step) {
  cloud.require_finite();
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) {
    RngStream rng = point_stream(seed, step, p, 0x74696572ULL);
    double mag = rng.uniform(lo, hi);
    // Uniform direction: normalized Gaussian triple.
    double nx = rng.normal(), ny = rng.normal(), nz = rng.normal();
    double n = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (n < 1e-12) {
      nx = 1.0;
      ny = nz = 0.0;
      n = 1.0;
    }
    out.points.push_back({p.x + mag * nx / n, p.y + mag * ny / n, p.z + mag * nz / n});
  }
  out.require_finite();
  return out;
}

}  // namespace mmloco::perception
