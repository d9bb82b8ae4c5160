#pragma once

#include <string>
#include <vector>

#include "mmloco/perception/geometry.hpp"

namespace mmloco::perception {

// Robot-frame 3D points, arbitrary count (zero included). Coordinates must be
// finite; loaders and transforms enforce it.
struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void require_finite() const;
};

PointCloud se3_apply(const SE3Transform& t, const PointCloud& cloud);

// Replay file format: "x,y,z" header, one point per line, frames separated by
// "# t=<seconds>" timestamp rows.
struct CloudFrame {
  double timestamp = 0.0;
  PointCloud cloud;
};

std::vector<CloudFrame> read_cloud_replay(const std::string& path);
void write_cloud_replay(const std::string& path, const std::vector<CloudFrame>& frames);

}  // namespace mmloco::perception
