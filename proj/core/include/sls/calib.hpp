#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "sls/camera.hpp"

namespace sls {

struct Correspondence {
  Vec2 image;  // pixel
  Vec3 world;  // mm
};

struct CalibOptions {
  int max_iterations = 100;
  double initial_lambda = 1e-3;
  int max_rejections = 20;  // consecutive damped retries before giving up
  double step_tolerance = 1e-10;
  double decrease_tolerance = 1e-12;
};

struct CalibResult {
  Pose pose;
  double residual = 0.0;  // mean reprojection distance, pixels
  int iterations = 0;
  bool converged = false;
  /// Sum of squared reprojection residuals after each accepted step,
  /// starting with the initial value.
  std::vector<double> cost_history;
};

/// Mean Euclidean distance between observed and projected pixels.
double reprojection_error(std::span<const Correspondence> corrs, const CameraModel& cam);

/// Levenberg-Marquardt over a rotation increment (axis-angle, applied on the
/// left of the current rotation) and the translation. Intrinsics and
/// distortion stay fixed.
CalibResult estimate_pose(const Intrinsics& intr, const Distortion& dist, std::span<const Correspondence> corrs,
                          const Pose& init, const CalibOptions& options = {});

using PoseJacobian = Eigen::Matrix<double, Eigen::Dynamic, 6>;

/// Stacked (u, v) derivatives of every projection with respect to
/// [rotation increment (3), translation (3)] at the given pose.
PoseJacobian pose_jacobian(const Intrinsics& intr, const Distortion& dist, std::span<const Correspondence> corrs,
                           const Pose& pose);

/// exp of the rotation increment applied on the left of pose.rotation, plus a
/// translation offset.
Pose perturb_pose(const Pose& pose, const Eigen::Matrix<double, 6, 1>& delta);

Mat3 rotation_from_axis_angle(const Vec3& omega);
/// Angle of R_a * R_b^T, radians.
double rotation_distance(const Mat3& a, const Mat3& b);
/// Nearest rotation in the Frobenius sense.
Mat3 orthonormalize(const Mat3& r);

/// `u,v,X,Y,Z` per line; blank lines, '#' comments and a non-numeric header
/// line are skipped.
std::vector<Correspondence> read_correspondences_csv(const std::filesystem::path& path);

}  // namespace sls
