#include "sls/calib.hpp"

#include <Eigen/Geometry>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "sls/error.hpp"

namespace sls {
namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

Eigen::VectorXd residuals(const CameraModel& cam, std::span<const Correspondence> corrs) {
  Eigen::VectorXd r(2 * static_cast<Eigen::Index>(corrs.size()));
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const Vec2 p = project(corrs[i].world, cam);
    r.segment<2>(2 * static_cast<Eigen::Index>(i)) = p - corrs[i].image;
  }
  return r;
}

CameraModel make_camera(const Intrinsics& intr, const Distortion& dist, const Pose& pose) {
  CameraModel cam;
  cam.intrinsics = intr;
  cam.distortion = dist;
  cam.pose = pose;
  cam.width = 1;
  cam.height = 1;
  return cam;
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

double parse_double(std::string_view field, bool& ok) {
  while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
  while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  ok = ec == std::errc() && ptr == field.data() + field.size() && !field.empty();
  return value;
}

}  // namespace

double reprojection_error(std::span<const Correspondence> corrs, const CameraModel& cam) {
  if (corrs.empty()) fail(ErrorCode::invalid_argument, "reprojection error needs at least one correspondence");
  double sum = 0.0;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    Vec2 p;
    try {
      p = project(corrs[i].world, cam);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::behind_camera) throw;
      fail(ErrorCode::behind_camera, "correspondence " + std::to_string(i) + " is behind the camera");
    }
    sum += (corrs[i].image - p).norm();
  }
  return sum / static_cast<double>(corrs.size());
}

Mat3 rotation_from_axis_angle(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

double rotation_distance(const Mat3& a, const Mat3& b) {
  const Eigen::AngleAxisd aa(Mat3(a * b.transpose()));
  return std::abs(aa.angle());
}

Mat3 orthonormalize(const Mat3& r) {
  const Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    out = u * svd.matrixV().transpose();
  }
  return out;
}

Pose perturb_pose(const Pose& pose, const Vec6& delta) {
  Pose out;
  out.rotation = rotation_from_axis_angle(delta.head<3>()) * pose.rotation;
  out.translation = pose.translation + delta.tail<3>();
  return out;
}

PoseJacobian pose_jacobian(const Intrinsics& intr, const Distortion& dist, std::span<const Correspondence> corrs,
                           const Pose& pose) {
  PoseJacobian jac(2 * static_cast<Eigen::Index>(corrs.size()), 6);
  Eigen::Matrix2d pixel_from_distorted;
  pixel_from_distorted << intr.alpha, intr.skew(), 0.0, intr.beta_scaled();
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const Vec3 rotated = pose.rotation * corrs[i].world;
    const Vec3 q = rotated + pose.translation;
    if (!(q.z() > behind_camera_epsilon))
      fail(ErrorCode::behind_camera, "correspondence " + std::to_string(i) + " is behind the camera");
    const double iz = 1.0 / q.z();
    const Vec2 n(q.x() * iz, q.y() * iz);
    Eigen::Matrix<double, 2, 3> dn_dq;
    dn_dq << iz, 0.0, -n.x() * iz, 0.0, iz, -n.y() * iz;
    Eigen::Matrix<double, 3, 6> dq_dparams;
    // Left increment: d(exp(w) R X)/dw at w = 0 is -[R X]x.
    dq_dparams.leftCols<3>() = -hat(rotated);
    dq_dparams.rightCols<3>() = Mat3::Identity();
    jac.middleRows<2>(2 * static_cast<Eigen::Index>(i)) =
        pixel_from_distorted * dist.jacobian(n) * dn_dq * dq_dparams;
  }
  return jac;
}

CalibResult estimate_pose(const Intrinsics& intr, const Distortion& dist, std::span<const Correspondence> corrs,
                          const Pose& init, const CalibOptions& options) {
  if (corrs.size() < 4) fail(ErrorCode::invalid_argument, "pose estimation needs at least 4 correspondences");
  intr.validate();
  dist.validate();
  init.validate();

  Pose pose = init;
  Eigen::VectorXd r = residuals(make_camera(intr, dist, pose), corrs);
  double cost = r.squaredNorm();
  double lambda = options.initial_lambda;

  CalibResult result;
  result.cost_history.push_back(cost);

  auto finish = [&](bool converged) {
    result.pose.rotation = orthonormalize(pose.rotation);
    result.pose.translation = pose.translation;
    result.converged = converged;
    result.residual = reprojection_error(corrs, make_camera(intr, dist, result.pose));
    return result;
  };

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    const PoseJacobian jac = pose_jacobian(intr, dist, corrs, pose);
    const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
    const Vec6 gradient = jac.transpose() * r;
    const double diag_floor = std::max(1e-12, 1e-12 * jtj.diagonal().maxCoeff());

    int rejections = 0;
    while (true) {
      Eigen::Matrix<double, 6, 6> damped = jtj;
      for (int k = 0; k < 6; ++k) damped(k, k) += lambda * std::max(jtj(k, k), diag_floor);
      const Vec6 step = damped.ldlt().solve(-gradient);
      if (!step.allFinite()) fail(ErrorCode::numeric, "pose update is not finite");
      if (step.norm() < options.step_tolerance) return finish(true);

      const Pose candidate = perturb_pose(pose, step);
      double candidate_cost = std::numeric_limits<double>::infinity();
      Eigen::VectorXd candidate_r;
      try {
        candidate_r = residuals(make_camera(intr, dist, candidate), corrs);
        candidate_cost = candidate_r.squaredNorm();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::behind_camera) throw;
      }

      if (candidate_cost < cost) {
        const double decrease = cost - candidate_cost;
        pose = candidate;
        // Keep the rotation on the manifold as increments accumulate.
        pose.rotation = orthonormalize(pose.rotation);
        r = candidate_r;
        cost = candidate_cost;
        result.cost_history.push_back(cost);
        lambda /= 10.0;
        if (decrease < options.decrease_tolerance) return finish(true);
        break;
      }
      lambda *= 10.0;
      if (++rejections >= options.max_rejections) return finish(false);
    }
  }
  return finish(false);
}

std::vector<Correspondence> read_correspondences_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + path.string());
  std::vector<Correspondence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
      fields.back().remove_suffix(1);
    double v[5];
    bool all_ok = fields.size() == 5;
    for (std::size_t k = 0; all_ok && k < 5; ++k) {
      bool ok = false;
      v[k] = parse_double(fields[k], ok);
      all_ok = ok && std::isfinite(v[k]);
    }
    if (!all_ok) {
      if (out.empty() && line_no == 1) continue;  // header
      fail(ErrorCode::format, path.string() + ":" + std::to_string(line_no) + ": expected u,v,X,Y,Z");
    }
    out.push_back({Vec2(v[0], v[1]), Vec3(v[2], v[3], v[4])});
  }
  return out;
}

}  // namespace sls
