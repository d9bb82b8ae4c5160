#pragma once

#include <deque>

#include "mmloco/perception/pointcloud.hpp"

namespace mmloco::perception {

// Ring of the last K exteroceptive captures, each stored with the world pose
// of the body frame at capture time. Assembly re-expresses the older clouds in
// the current body frame, densifying a 10 Hz sensor to the 50 Hz control rate.
class ExteroMemory {
 public:
  explicit ExteroMemory(std::size_t capacity = 3) : capacity_(capacity) {}

  void push(PointCloud cloud, const SE3Transform& pose_at_capture);
  void clear();

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }

  // Concatenation of all stored clouds expressed in the body frame implied by
  // `current_pose` (world pose of the body now). Entries are emitted newest
  // first so the freshest capture leads the point list.
  PointCloud assemble(const SE3Transform& current_pose) const;

  struct Entry {
    PointCloud cloud;
    SE3Transform pose;
  };
  const std::deque<Entry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Entry> entries_;  // oldest -> newest
};

}  // namespace mmloco::perception
