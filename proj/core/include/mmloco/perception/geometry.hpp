#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace mmloco::perception {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  double norm_xy() const { return std::sqrt(x * x + y * y); }
};

struct Mat3 {
  // Row-major.
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return Mat3{}; }

  double at(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }
  double& at(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) acc += at(i, k) * o.at(k, j);
        r.at(i, j) = acc;
      }
    return r;
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.at(i, j) = at(j, i);
    return r;
  }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  // Extrinsic x-y-z (roll, pitch, yaw) rotation: R = Rz * Ry * Rx.
  static Mat3 from_rpy(double roll, double pitch, double yaw) {
    double cr = std::cos(roll), sr = std::sin(roll);
    double cp = std::cos(pitch), sp = std::sin(pitch);
    double cy = std::cos(yaw), sy = std::sin(yaw);
    Mat3 r;
    r.m = {cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
           sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
           -sp,     cp * sr,                cp * cr};
    return r;
  }

  static Mat3 yaw(double angle) { return from_rpy(0.0, 0.0, angle); }
};

// Rigid transform p' = R p + t. Rotation must be orthonormal with det +1.
struct SE3Transform {
  Mat3 rotation;
  Vec3 translation;

  static SE3Transform identity() { return SE3Transform{}; }

  bool valid(double tol = 1e-9) const {
    Mat3 rtr = rotation.transposed() * rotation;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double want = i == j ? 1.0 : 0.0;
        if (std::abs(rtr.at(i, j) - want) > tol) return false;
      }
    return std::abs(rotation.det() - 1.0) <= tol;
  }

  void require_valid() const {
    if (!valid()) throw std::invalid_argument("SE3Transform: rotation is not orthonormal");
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

inline SE3Transform se3_inverse(const SE3Transform& t) {
  t.require_valid();
  Mat3 rt = t.rotation.transposed();
  return {rt, (rt * t.translation) * -1.0};
}

inline SE3Transform se3_compose(const SE3Transform& a, const SE3Transform& b) {
  a.require_valid();
  b.require_valid();
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

}  // namespace mmloco::perception
