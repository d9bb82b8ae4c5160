#include "mmloco/perception/memory.hpp"

namespace mmloco::perception {

void ExteroMemory::push(PointCloud cloud, const SE3Transform& pose_at_capture) {
  pose_at_capture.require_valid();
  cloud.require_finite();
  entries_.push_back(Entry{std::move(cloud), pose_at_capture});
  while (entries_.size() > capacity_) entries_.pop_front();
}

void ExteroMemory::clear() { entries_.clear(); }

PointCloud ExteroMemory::assemble(const SE3Transform& current_pose) const {
  current_pose.require_valid();
  PointCloud out;
  std::size_t total = 0;
  for (const Entry& e : entries_) total += e.cloud.size();
  out.points.reserve(total);
  SE3Transform world_to_now = se3_inverse(current_pose);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    // Relative transform from the capture body frame into the current one.
    SE3Transform rel = se3_compose(world_to_now, it->pose);
    for (const Vec3& p : it->cloud.points) out.points.push_back(rel.apply(p));
  }
  return out;
}

}  // namespace mmloco::perception
