#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <numbers>
#include <vector>

#include "sls/geometry.hpp"

namespace sls {

/// Intrinsic block of the camera matrix. alpha and beta are the products of
/// pixel density and focal length along x and y; only the products are
/// observable, so they are stored as such.
struct Intrinsics {
  double alpha = 1.0;
  double beta = 1.0;
  double theta = std::numbers::pi / 2;  // skew angle; pi/2 means no skew
  double u0 = 0.0;
  double v0 = 0.0;

  void validate() const;

  /// -alpha*cot(theta), exactly 0 at theta = pi/2.
  double skew() const noexcept;
  /// beta / sin(theta), exactly beta at theta = pi/2.
  double beta_scaled() const noexcept;

  Mat3 matrix() const;
  Vec2 to_pixel(const Vec2& normalized) const noexcept;
  Vec2 to_normalized(const Vec2& pixel) const;
};

/// Brown-Conrady radial (k1, k2, k3) and tangential (p1, p2) model, applied to
/// normalized camera coordinates.
struct Distortion {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  void validate() const;
  bool is_zero() const noexcept;
  Vec2 apply(const Vec2& normalized) const noexcept;
  Eigen::Matrix2d jacobian(const Vec2& normalized) const noexcept;
};

/// World-to-camera transform: q_cam = R * q_world + T, millimeters.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  void validate() const;
  Vec3 world_to_camera(const Vec3& world) const noexcept { return rotation * world + translation; }
  Vec3 center() const noexcept { return -(rotation.transpose() * translation); }

  /// Camera at eye looking at target; image y axis follows down_hint.
  static Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& down_hint = Vec3::UnitY());
};

struct CameraModel {
  Intrinsics intrinsics;
  Distortion distortion;
  Pose pose;
  int width = 0;
  int height = 0;

  void validate() const;
  Vec3 center() const noexcept { return pose.center(); }
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();

  /// Normalizes direction; fails on a zero vector.
  static Ray make(const Vec3& origin, const Vec3& direction);
  Vec3 at(double t) const noexcept { return origin + t * direction; }
  double distance_to(const Vec3& point) const noexcept;
};

/// Cameras plus the projector, all in one world frame.
struct Rig {
  std::vector<CameraModel> cameras;
  CameraModel projector;

  void validate() const;
};

inline constexpr double behind_camera_epsilon = 1e-9;

/// World point to pixel through pose, perspective division, distortion and
/// the intrinsic matrix.
Vec2 project(const Vec3& point, const CameraModel& cam);

/// Inverts the distortion model by fixed-point iteration on normalized
/// coordinates (at most 50 iterations, 1e-10 tolerance).
Vec2 undistort_pixel(const Vec2& pixel, const Intrinsics& intr, const Distortion& dist);

/// R^-1 * q - R^-1 * T.
Vec3 camera_to_world(const Vec3& camera_point, const Pose& pose);

Ray pixel_to_ray(const Vec2& pixel, const CameraModel& cam);

Rig load_rig(const std::filesystem::path& path);
void save_rig(const std::filesystem::path& path, const Rig& rig);

/// Two cameras either side of a projector at the world origin, aimed at a
/// point 500 mm ahead; the reference rig used by the CLI when none is given.
Rig desk_rig();

}  // namespace sls
