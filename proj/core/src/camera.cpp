#include "sls/camera.hpp"

#include <cmath>
#include <string>

#include "sls/error.hpp"

namespace sls {
namespace {

constexpr double right_angle_tolerance = 1e-15;
constexpr int undistort_max_iterations = 50;
constexpr double undistort_tolerance = 1e-10;

bool finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

}  // namespace

void Intrinsics::validate() const {
  if (!(alpha > 0) || !(beta > 0)) fail(ErrorCode::invalid_camera, "alpha and beta must be positive");
  if (!(theta > 0) || theta > std::numbers::pi / 2 + right_angle_tolerance)
    fail(ErrorCode::invalid_camera, "skew angle must lie in (0, pi/2]");
  if (!std::isfinite(u0) || !std::isfinite(v0)) fail(ErrorCode::invalid_camera, "principal point must be finite");
}

double Intrinsics::skew() const noexcept {
  if (std::abs(theta - std::numbers::pi / 2) < right_angle_tolerance) return 0.0;
  return -alpha / std::tan(theta);
}

double Intrinsics::beta_scaled() const noexcept {
  if (std::abs(theta - std::numbers::pi / 2) < right_angle_tolerance) return beta;
  return beta / std::sin(theta);
}

Mat3 Intrinsics::matrix() const {
  Mat3 c;
  c << alpha, skew(), u0, 0.0, beta_scaled(), v0, 0.0, 0.0, 1.0;
  return c;
}

Vec2 Intrinsics::to_pixel(const Vec2& n) const noexcept {
  return {alpha * n.x() + skew() * n.y() + u0, beta_scaled() * n.y() + v0};
}

Vec2 Intrinsics::to_normalized(const Vec2& p) const {
  const double by = beta_scaled();
  if (!(std::abs(alpha) > 0) || !(std::abs(by) > 0) || !std::isfinite(alpha) || !std::isfinite(by))
    fail(ErrorCode::invalid_camera, "singular intrinsic matrix");
  const double y = (p.y() - v0) / by;
  const double x = (p.x() - u0 - skew() * y) / alpha;
  return {x, y};
}

void Distortion::validate() const {
  for (double c : {k1, k2, k3, p1, p2})
    if (!std::isfinite(c)) fail(ErrorCode::invalid_camera, "distortion coefficients must be finite");
}

bool Distortion::is_zero() const noexcept { return k1 == 0 && k2 == 0 && k3 == 0 && p1 == 0 && p2 == 0; }

Vec2 Distortion::apply(const Vec2& n) const noexcept {
  const double x = n.x();
  const double y = n.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
  return {x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
          y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
}

Eigen::Matrix2d Distortion::jacobian(const Vec2& n) const noexcept {
  const double x = n.x();
  const double y = n.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
  // d(radial)/d(r2)
  const double dradial = k1 + r2 * (2.0 * k2 + 3.0 * k3 * r2);
  Eigen::Matrix2d j;
  j(0, 0) = radial + 2.0 * x * x * dradial + 2.0 * p1 * y + 6.0 * p2 * x;
  j(0, 1) = 2.0 * x * y * dradial + 2.0 * p1 * x + 2.0 * p2 * y;
  j(1, 0) = 2.0 * x * y * dradial + 2.0 * p1 * x + 2.0 * p2 * y;
  j(1, 1) = radial + 2.0 * y * y * dradial + 6.0 * p1 * y + 2.0 * p2 * x;
  return j;
}

void Pose::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) fail(ErrorCode::invalid_camera, "pose must be finite");
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9) fail(ErrorCode::invalid_camera, "rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > 1e-9) fail(ErrorCode::invalid_camera, "rotation determinant is not +1");
}

Pose Pose::look_at(const Vec3& eye, const Vec3& target, const Vec3& down_hint) {
  const Vec3 forward = target - eye;
  if (forward.norm() == 0.0) fail(ErrorCode::invalid_argument, "look_at target equals eye");
  const Vec3 z = forward.normalized();
  const Vec3 xr = down_hint.cross(z);
  if (xr.norm() < 1e-12) fail(ErrorCode::invalid_argument, "look_at down hint parallel to view direction");
  const Vec3 x = xr.normalized();
  const Vec3 y = z.cross(x);
  Pose pose;
  pose.rotation.row(0) = x.transpose();
  pose.rotation.row(1) = y.transpose();
  pose.rotation.row(2) = z.transpose();
  pose.translation = -(pose.rotation * eye);
  return pose;
}

void CameraModel::validate() const {
  intrinsics.validate();
  distortion.validate();
  pose.validate();
  if (width <= 0 || height <= 0) fail(ErrorCode::invalid_camera, "image resolution must be positive");
}

Ray Ray::make(const Vec3& origin, const Vec3& direction) {
  const double n = direction.norm();
  if (!(n > 0) || !std::isfinite(n)) fail(ErrorCode::invalid_argument, "ray direction must be non-zero");
  return {origin, direction / n};
}

double Ray::distance_to(const Vec3& point) const noexcept { return direction.cross(point - origin).norm(); }

void Rig::validate() const {
  for (const auto& cam : cameras) cam.validate();
  projector.validate();
}

Vec2 project(const Vec3& point, const CameraModel& cam) {
  const Vec3 q = cam.pose.world_to_camera(point);
  if (!(q.z() > behind_camera_epsilon))
    fail(ErrorCode::behind_camera, "point is not in front of the camera (z = " + std::to_string(q.z()) + ")");
  const Vec2 normalized(q.x() / q.z(), q.y() / q.z());
  return cam.intrinsics.to_pixel(cam.distortion.apply(normalized));
}

Vec2 undistort_pixel(const Vec2& pixel, const Intrinsics& intr, const Distortion& dist) {
  if (!finite(pixel)) fail(ErrorCode::invalid_argument, "pixel must be finite");
  if (dist.is_zero()) return pixel;
  const Vec2 target = intr.to_normalized(pixel);
  Vec2 x = target;
  for (int i = 0; i < undistort_max_iterations; ++i) {
    const double r2 = x.squaredNorm();
    const double radial = 1.0 + r2 * (dist.k1 + r2 * (dist.k2 + r2 * dist.k3));
    const Vec2 tangential(2.0 * dist.p1 * x.x() * x.y() + dist.p2 * (r2 + 2.0 * x.x() * x.x()),
                          dist.p1 * (r2 + 2.0 * x.y() * x.y()) + 2.0 * dist.p2 * x.x() * x.y());
    const Vec2 next = (target - tangential) / radial;
    const double step = (next - x).norm();
    x = next;
    if (step < undistort_tolerance) return intr.to_pixel(x);
  }
  const double residual = (intr.to_pixel(dist.apply(x)) - pixel).norm();
  fail(ErrorCode::numeric, "undistortion did not converge in 50 iterations (residual " + std::to_string(residual) + " px)");
}

Vec3 camera_to_world(const Vec3& camera_point, const Pose& pose) {
  const Mat3 r_inv = pose.rotation.transpose();
  return r_inv * camera_point - r_inv * pose.translation;
}

Ray pixel_to_ray(const Vec2& pixel, const CameraModel& cam) {
  const Vec2 ideal = undistort_pixel(pixel, cam.intrinsics, cam.distortion);
  const Vec2 n = cam.intrinsics.to_normalized(ideal);
  const Vec3 center = camera_to_world(Vec3::Zero(), cam.pose);
  const Vec3 through = camera_to_world(Vec3(n.x(), n.y(), 1.0), cam.pose);
  return Ray::make(center, through - center);
}

}  // namespace sls
