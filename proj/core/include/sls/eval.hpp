#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sls/geometry.hpp"

namespace sls {

/// normal·p = delta with a unit normal, oriented so that delta >= 0.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double delta = 0.0;
  double inlier_eps = 0.0;
  std::size_t inlier_count = 0;

  double signed_distance(const Vec3& p) const noexcept { return normal.dot(p) - delta; }
};

/// Least-squares plane through the centroid along the smallest-variance
/// direction. Fails with degenerate-input on fewer than three points or
/// collinear points.
Plane fit_plane(std::span<const Vec3> points);

struct RansacOptions {
  int iterations = 500;
  /// Absolute inlier distance. When unset it starts at 3x the median
  /// absolute deviation of the residuals of a least-squares fit to all
  /// points and is re-estimated from the inlier set while it keeps shrinking.
  std::optional<double> inlier_eps;
  std::uint64_t seed = 0;
};

Plane ransac_plane(std::span<const Vec3> points, const RansacOptions& options = {});

struct ExtractedPlane {
  Plane plane;
  std::vector<std::size_t> inliers;  // indices into the input
};

/// Sequential RANSAC: fit, remove inliers, repeat `count` times.
std::vector<ExtractedPlane> extract_planes(std::span<const Vec3> points, int count,
                                           const RansacOptions& options = {});

struct Linearity {
  double e_avg = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

Linearity linearity(std::span<const Vec3> points, const Plane& plane);

struct Orthogonality {
  Vec3 dots = Vec3::Zero();  // N1·N2, N1·N3, N2·N3
  double magnitude = 0.0;
  std::array<double, 3> raw_angles{};     // acos(dot), degrees in [0, 180]
  std::array<double, 3> folded_angles{};  // acos(|dot|), degrees in [0, 90]
};

Orthogonality orthogonality(const Plane& p1, const Plane& p2, const Plane& p3);

double accuracy(double l_orig, double l_scan);

struct SamplingPatch {
  double width_cm = 0.0;
  double height_cm = 0.0;
  std::size_t points = 0;
  std::size_t faces = 0;
};

struct SamplingRate {
  double points_per_cm2 = 0.0;
  double faces_per_cm2 = 0.0;
};

SamplingRate sampling_rate(const SamplingPatch& patch);

struct SamplingSummary {
  std::vector<SamplingRate> patches;
  SamplingRate area_weighted;  // total count over total area
  SamplingRate mean;           // unweighted mean of the per-patch densities
};

SamplingSummary aggregate_sampling(std::span<const SamplingPatch> patches);

/// Rectangle on a fitted surface: center, two orthonormal in-plane axes and
/// half sizes in mm. Points count when their in-plane coordinates fall inside
/// and they lie within `thickness` of the plane; faces count by centroid.
struct PatchRegion {
  Vec3 center = Vec3::Zero();
  Vec3 u_axis = Vec3::UnitX();
  Vec3 v_axis = Vec3::UnitY();
  double half_u = 5.0;
  double half_v = 5.0;
  double thickness = 1.0;
};

SamplingPatch count_in_patch(std::span<const Vec3> vertices, std::span<const std::vector<int>> faces,
                             const PatchRegion& region);

struct AccuracyEntry {
  double l_orig = 0.0;
  double l_scan = 0.0;
  double error = 0.0;
};

struct PlaneReport {
  Plane plane;
  Linearity linearity;
};

struct MetricReport {
  std::size_t point_count = 0;
  std::size_t face_count = 0;
  std::vector<PlaneReport> planes;
  std::optional<Orthogonality> orthogonality;
  std::vector<AccuracyEntry> accuracy;
  std::optional<double> accuracy_mean;
  std::vector<SamplingPatch> sampling_patches;
  std::optional<SamplingSummary> sampling;

  std::string to_json() const;
  std::string to_table() const;
};

}  // namespace sls
