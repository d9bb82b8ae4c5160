#include "mmloco/perception/pointcloud.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mmloco::perception {

void PointCloud::require_finite() const {
  for (const Vec3& p : points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw std::runtime_error("point cloud contains non-finite coordinates");
}

PointCloud se3_apply(const SE3Transform& t, const PointCloud& cloud) {
  t.require_valid();
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
  out.require_finite();
  return out;
}

std::vector<CloudFrame> read_cloud_replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cloud replay: " + path);
  std::vector<CloudFrame> frames;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# t=", 0) == 0) {
      CloudFrame f;
      f.timestamp = std::stod(line.substr(4));
      frames.push_back(std::move(f));
      continue;
    }
    if (!saw_header && line.rfind("x,y,z", 0) == 0) {
      saw_header = true;
      continue;
    }
    Vec3 p;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.x, &p.y, &p.z) != 3)
      throw std::runtime_error("cloud replay: bad row: " + line);
    if (frames.empty()) frames.push_back(CloudFrame{});
    frames.back().cloud.points.push_back(p);
  }
  for (const CloudFrame& f : frames) f.cloud.require_finite();
  return frames;
}

void write_cloud_replay(const std::string& path, const std::vector<CloudFrame>& frames) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write cloud replay: " + path);
  out << "x,y,z\n";
  char buf[96];
  for (const CloudFrame& f : frames) {
    std::snprintf(buf, sizeof(buf), "# t=%.9g\n", f.timestamp);
    out << buf;
    for (const Vec3& p : f.cloud.points) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.x, p.y, p.z);
      out << buf;
    }
  }
}

}  // namespace mmloco::perception
