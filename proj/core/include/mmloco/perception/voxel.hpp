#pragma once

#include <vector>

#include "mmloco/perception/pointcloud.hpp"

namespace mmloco::perception {

// Forward-looking sampling grid in the body frame. x runs forward from
// `forward_offset` over `depth` (rows), y spans `width` centered on the body
// (cols). The policy grid is 10x22: leaf 0.05, width 1.1, depth 0.5, offset 0.9.
struct VoxelGridSpec {
  double leaf = 0.05;
  double forward_offset = 0.9;
  double width = 1.1;
  double depth = 0.5;
  int rows = 10;
  int cols = 22;

  static VoxelGridSpec policy();      // 10 x 22
  static VoxelGridSpec privileged();  // 34 x 22, spans 0.9 m ahead to 0.8 m behind

  void validate() const;
  // Cell index of a body-frame point, or false if outside the footprint.
  bool cell_of(const Vec3& p, int& row, int& col) const;
  // Center of a cell in the body frame (z = 0).
  Vec3 cell_center(int row, int col) const;
};

// One centroid per occupied voxel of size `leaf`.
PointCloud voxel_downsample(const PointCloud& cloud, double leaf);

struct HeightGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> height;   // rows*cols, max z per cell; 0 where empty
  std::vector<bool> occupied;   // rows*cols

  double& at(int r, int c) { return height[static_cast<std::size_t>(r * cols + c)]; }
  double at(int r, int c) const { return height[static_cast<std::size_t>(r * cols + c)]; }
  bool occ(int r, int c) const { return occupied[static_cast<std::size_t>(r * cols + c)]; }
};

// Per-cell max-z over the grid footprint plus an occupancy mask. The output
// shape is always rows x cols, empty input included.
HeightGrid grid_select(const PointCloud& cloud, const VoxelGridSpec& spec);

}  // namespace mmloco::perception
