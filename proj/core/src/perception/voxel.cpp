#include "mmloco/perception/voxel.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

namespace mmloco::perception {

VoxelGridSpec VoxelGridSpec::policy() { return VoxelGridSpec{0.05, 0.9, 1.1, 0.5, 10, 22}; }

VoxelGridSpec VoxelGridSpec::privileged() {
  // 34 rows x 22 cols. The front row edge sits 0.9 m ahead of the body frame
  // and the grid extends 1.7 m back from it, covering the robot's surroundings.
  return VoxelGridSpec{0.05, -0.8, 1.1, 1.7, 34, 22};
}

void VoxelGridSpec::validate() const {
  if (leaf <= 0.0) throw std::invalid_argument("VoxelGridSpec: leaf must be positive");
  auto near = [](double a, long b) { return std::lround(a) == b; };
  if (!near(depth / leaf, rows) || !near(width / leaf, cols))
    throw std::invalid_argument("VoxelGridSpec: rows/cols do not match depth/width at this leaf");
}

bool VoxelGridSpec::cell_of(const Vec3& p, int& row, int& col) const {
  double r = std::floor((p.x - forward_offset) / leaf);
  double c = std::floor((p.y + 0.5 * width) / leaf);
  if (r < 0 || r >= rows || c < 0 || c >= cols) return false;
  row = static_cast<int>(r);
  col = static_cast<int>(c);
  return true;
}

Vec3 VoxelGridSpec::cell_center(int row, int col) const {
  return {forward_offset + (row + 0.5) * leaf, -0.5 * width + (col + 0.5) * leaf, 0.0};
}

PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  if (leaf <= 0.0) throw std::invalid_argument("voxel_downsample: leaf must be positive");
  cloud.require_finite();
  struct Accum {
    Vec3 sum;
    std::size_t count = 0;
  };
  // Voxel key packs the three cell indices; order of first appearance keeps
  // the output deterministic in input order.
  std::unordered_map<std::uint64_t, std::size_t> slot;
  std::vector<Accum> accums;
  auto key_of = [leaf](const Vec3& p) {
    auto q = [leaf](double v) {
      return static_cast<std::int64_t>(std::floor(v / leaf)) + (1LL << 20);
    };
    return (static_cast<std::uint64_t>(q(p.x)) << 42) | (static_cast<std::uint64_t>(q(p.y)) << 21) |
           static_cast<std::uint64_t>(q(p.z));
  };
  for (const Vec3& p : cloud.points) {
    std::uint64_t k = key_of(p);
    auto it = slot.find(k);
    if (it == slot.end()) {
      slot.emplace(k, accums.size());
      accums.push_back(Accum{p, 1});
    } else {
      Accum& a = accums[it->second];
      a.sum = a.sum + p;
      a.count += 1;
    }
  }
  PointCloud out;
  out.points.reserve(accums.size());
  for (const Accum& a : accums)
    out.points.push_back(a.sum * (1.0 / static_cast<double>(a.count)));
  return out;
}

HeightGrid grid_select(const PointCloud& cloud, const VoxelGridSpec& spec) {
  spec.validate();
  cloud.require_finite();
  HeightGrid g;
  g.rows = spec.rows;
  g.cols = spec.cols;
  g.height.assign(static_cast<std::size_t>(spec.rows * spec.cols), 0.0);
  g.occupied.assign(static_cast<std::size_t>(spec.rows * spec.cols), false);
  for (const Vec3& p : cloud.points) {
    int r, c;
    if (!spec.cell_of(p, r, c)) continue;
    std::size_t idx = static_cast<std::size_t>(r * spec.cols + c);
    if (!g.occupied[idx] || p.z > g.height[idx]) g.height[idx] = p.z;
    g.occupied[idx] = true;
  }
  return g;
}

}  // namespace mmloco::perception
