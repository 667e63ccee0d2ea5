#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>

namespace settle {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Isometry3 = Eigen::Isometry3d;
using AlignedBox3 = Eigen::AlignedBox3d;

inline constexpr double kPi = 3.14159265358979323846;

inline double degToRad(double deg) { return deg * kPi / 180.0; }
inline double radToDeg(double rad) { return rad * 180.0 / kPi; }

/// Rotation from Z-Y-X (yaw-pitch-roll) Euler angles: R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 rpyToMatrix(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

/// Z-Y-X Euler extraction, inverse of rpyToMatrix. Returns (roll, pitch, yaw).
inline Vec3 matrixToRpy(const Mat3& r) {
  const double sin_pitch = -r(2, 0);
  const double pitch = std::asin(std::clamp(sin_pitch, -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

/// Minimum rotation angle aligning two orientations, in [0, pi].
inline double rotationAngleBetween(const Mat3& a, const Mat3& b) {
  const double tr = (a.transpose() * b).trace();
  return std::acos(std::clamp((tr - 1.0) * 0.5, -1.0, 1.0));
}

inline Isometry3 makePose(const Vec3& translation, const Mat3& rotation) {
  Isometry3 t = Isometry3::Identity();
  t.linear() = rotation;
  t.translation() = translation;
  return t;
}

/// Projects the rotation part back onto SO(3) via quaternion normalization.
inline void renormalizeRotation(Isometry3& pose) {
  Eigen::Quaterniond q(pose.linear());
  q.normalize();
  pose.linear() = q.toRotationMatrix();
}

/// Frobenius distance of R^T R from identity; cheap orthonormality check.
inline double orthonormalityDrift(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).norm();
}

}  // namespace settle
