#include "sls/eval.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

#include "sls/error.hpp"
#include "sls/parallel.hpp"

namespace sls {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

double extent(std::span<const Vec3> points) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

void orient(Plane& plane) {
  if (plane.delta < 0) {
    plane.normal = -plane.normal;
    plane.delta = -plane.delta;
  }
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct Hypothesis {
  bool valid = false;
  Plane plane;
  std::size_t inliers = 0;
  double rmse = 0.0;
};

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.valid != b.valid) return a.valid;
  if (a.inliers != b.inliers) return a.inliers > b.inliers;
  return a.rmse < b.rmse;
}

std::vector<Vec3> select(std::span<const Vec3> points, const Plane& plane, double eps) {
  std::vector<Vec3> out;
  for (const auto& p : points)
    if (std::abs(plane.signed_distance(p)) <= eps) out.push_back(p);
  return out;
}

Plane ransac_fixed(std::span<const Vec3> points, int iterations, double eps, std::uint64_t seed) {
  const std::size_t n = points.size();
  const double collinear_tol = 1e-12 * std::max(1.0, extent(points));
  std::vector<Hypothesis> hyps(static_cast<std::size_t>(iterations));
  parallel_for(iterations, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i))));
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
      while (b == a) b = pick(rng);
      while (c == a || c == b) c = pick(rng);
      const Vec3 cross = (points[b] - points[a]).cross(points[c] - points[a]);
      const double norm = cross.norm();
      Hypothesis& h = hyps[static_cast<std::size_t>(i)];
      if (norm <= collinear_tol * std::max(1.0, (points[b] - points[a]).norm())) continue;
      h.plane.normal = cross / norm;
      h.plane.delta = h.plane.normal.dot(points[a]);
      double sse = 0.0;
      for (const auto& p : points) {
        const double r = h.plane.signed_distance(p);
        if (std::abs(r) <= eps) {
          ++h.inliers;
          sse += r * r;
        }
      }
      h.rmse = h.inliers ? std::sqrt(sse / static_cast<double>(h.inliers)) : 0.0;
      h.valid = true;
    }
  });
  // Strict comparison keeps the lowest index among equals.
  const Hypothesis* best = nullptr;
  for (const auto& h : hyps)
    if (!best || better(h, *best)) best = &h;
  if (!best || !best->valid) fail(ErrorCode::degenerate_input, "no non-collinear sample found");

  Plane plane = best->plane;
  const auto inliers = select(points, plane, eps);
  if (inliers.size() >= 3) {
    try {
      plane = fit_plane(inliers);
    } catch (const Error&) {
      // Inliers collinear within eps: keep the hypothesis plane.
    }
  }
  plane.inlier_eps = eps;
  plane.inlier_count = select(points, plane, eps).size();
  orient(plane);
  return plane;
}

}  // namespace

Plane fit_plane(std::span<const Vec3> points) {
  if (points.size() < 3) fail(ErrorCode::degenerate_input, "plane fit needs at least three points");
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 ev = eig.eigenvalues();
  if (!(ev(2) > 0) || !(ev(1) > 1e-12 * ev(2)))
    fail(ErrorCode::degenerate_input, "points are collinear");
  Plane plane;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.delta = plane.normal.dot(centroid);
  plane.inlier_count = points.size();
  orient(plane);
  return plane;
}

Plane ransac_plane(std::span<const Vec3> points, const RansacOptions& options) {
  if (options.iterations <= 0) fail(ErrorCode::invalid_argument, "RANSAC needs at least one iteration");
  if (options.inlier_eps && !(*options.inlier_eps >= 0))
    fail(ErrorCode::invalid_argument, "inlier eps must be non-negative");
  const Plane initial = fit_plane(points);  // also rejects collinear input
  if (options.inlier_eps) return ransac_fixed(points, options.iterations, *options.inlier_eps, options.seed);

  const double floor = 1e-9 * std::max(1.0, extent(points));
  auto mad_eps = [&](std::span<const Vec3> pts, const Plane& plane) {
    std::vector<double> r;
    r.reserve(pts.size());
    for (const auto& p : pts) r.push_back(plane.signed_distance(p));
    const double m = median(r);
    for (auto& v : r) v = std::abs(v - m);
    return std::max(3.0 * median(std::move(r)), floor);
  };
  double eps = mad_eps(points, initial);
  Plane plane = ransac_fixed(points, options.iterations, eps, options.seed);
  for (int round = 0; round < 8; ++round) {
    const auto inliers = select(points, plane, eps);
    const double next = mad_eps(inliers, plane);
    if (!(next < 0.999 * eps)) break;
    eps = next;
    plane = ransac_fixed(points, options.iterations, eps, options.seed);
  }
  return plane;
}

std::vector<ExtractedPlane> extract_planes(std::span<const Vec3> points, int count, const RansacOptions& options) {
  if (count < 0) fail(ErrorCode::invalid_argument, "plane count must be non-negative");
  std::vector<std::size_t> remaining(points.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  std::vector<ExtractedPlane> out;
  for (int k = 0; k < count; ++k) {
    std::vector<Vec3> pts;
    pts.reserve(remaining.size());
    for (auto i : remaining) pts.push_back(points[i]);
    RansacOptions opts = options;
    opts.seed = options.seed + static_cast<std::uint64_t>(k);
    ExtractedPlane e;
    e.plane = ransac_plane(pts, opts);
    std::vector<std::size_t> rest;
    for (auto i : remaining) {
      if (std::abs(e.plane.signed_distance(points[i])) <= e.plane.inlier_eps)
        e.inliers.push_back(i);
      else
        rest.push_back(i);
    }
    remaining = std::move(rest);
    out.push_back(std::move(e));
  }

  // Points near an edge between two planes fall within eps of both and pull
  // each fit toward the other; refit every plane on the points only it claims.
  if (out.size() > 1) {
    for (int round = 0; round < 3; ++round) {
      std::vector<std::vector<std::size_t>> exclusive(out.size());
      for (std::size_t i = 0; i < points.size(); ++i) {
        std::size_t owner = out.size();
        int claims = 0;
        for (std::size_t k = 0; k < out.size(); ++k)
          if (std::abs(out[k].plane.signed_distance(points[i])) <= out[k].plane.inlier_eps) {
            owner = k;
            ++claims;
          }
        if (claims == 1) exclusive[owner].push_back(i);
      }
      for (std::size_t k = 0; k < out.size(); ++k) {
        if (exclusive[k].size() < 3) continue;
        std::vector<Vec3> pts;
        for (auto i : exclusive[k]) pts.push_back(points[i]);
        try {
          Plane refit = fit_plane(pts);
          refit.inlier_eps = out[k].plane.inlier_eps;
          refit.inlier_count = exclusive[k].size();
          out[k].plane = refit;
          out[k].inliers = std::move(exclusive[k]);
        } catch (const Error&) {
          // Keep the sequential fit when the exclusive set is degenerate.
        }
      }
    }
  }
  return out;
}

namespace {

void require_unit(const Plane& plane) {
  if (!plane.normal.allFinite() || std::abs(plane.normal.norm() - 1.0) > 1e-9)
    fail(ErrorCode::invalid_argument, "plane normal must be unit length");
}

double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

}  // namespace

Linearity linearity(std::span<const Vec3> points, const Plane& plane) {
  require_unit(plane);
  if (points.empty()) fail(ErrorCode::invalid_argument, "linearity needs at least one point");
  double abs_sum = 0.0, sq_sum = 0.0;
  for (const auto& p : points) {
    const double r = plane.delta - plane.normal.dot(p);
    abs_sum += std::abs(r);
    sq_sum += r * r;
  }
  const auto n = static_cast<double>(points.size());
  return {abs_sum / n, std::sqrt(sq_sum / n), points.size()};
}

Orthogonality orthogonality(const Plane& p1, const Plane& p2, const Plane& p3) {
  require_unit(p1);
  require_unit(p2);
  require_unit(p3);
  Orthogonality o;
  o.dots = Vec3(p1.normal.dot(p2.normal), p1.normal.dot(p3.normal), p2.normal.dot(p3.normal));
  o.magnitude = o.dots.norm();
  for (int i = 0; i < 3; ++i) {
    const double d = std::clamp(o.dots(i), -1.0, 1.0);
    o.raw_angles[static_cast<std::size_t>(i)] = degrees(std::acos(d));
    o.folded_angles[static_cast<std::size_t>(i)] = degrees(std::acos(std::abs(d)));
  }
  return o;
}

double accuracy(double l_orig, double l_scan) {
  if (!(l_orig > 0) || !(l_scan > 0)) fail(ErrorCode::invalid_argument, "lengths must be positive");
  return std::abs(l_orig - l_scan);
}

SamplingRate sampling_rate(const SamplingPatch& patch) {
  const double area = patch.width_cm * patch.height_cm;
  if (!(patch.width_cm > 0) || !(patch.height_cm > 0)) fail(ErrorCode::invalid_argument, "patch area must be positive");
  return {static_cast<double>(patch.points) / area, static_cast<double>(patch.faces) / area};
}

SamplingSummary aggregate_sampling(std::span<const SamplingPatch> patches) {
  if (patches.empty()) fail(ErrorCode::invalid_argument, "no sampling patches");
  SamplingSummary s;
  double area = 0.0, points = 0.0, faces = 0.0;
  for (const auto& p : patches) {
    const SamplingRate r = sampling_rate(p);
    s.patches.push_back(r);
    s.mean.points_per_cm2 += r.points_per_cm2;
    s.mean.faces_per_cm2 += r.faces_per_cm2;
    area += p.width_cm * p.height_cm;
    points += static_cast<double>(p.points);
    faces += static_cast<double>(p.faces);
  }
  const auto n = static_cast<double>(patches.size());
  s.mean.points_per_cm2 /= n;
  s.mean.faces_per_cm2 /= n;
  s.area_weighted = {points / area, faces / area};
  return s;
}

SamplingPatch count_in_patch(std::span<const Vec3> vertices, std::span<const std::vector<int>> faces,
                             const PatchRegion& region) {
  if (!(region.half_u > 0) || !(region.half_v > 0)) fail(ErrorCode::invalid_argument, "patch area must be positive");
  const Vec3 normal = region.u_axis.cross(region.v_axis);
  auto inside = [&](const Vec3& p) {
    const Vec3 d = p - region.center;
    return std::abs(d.dot(region.u_axis)) <= region.half_u && std::abs(d.dot(region.v_axis)) <= region.half_v &&
           std::abs(d.dot(normal)) <= region.thickness;
  };
  SamplingPatch patch;
  patch.width_cm = 2.0 * region.half_u / 10.0;
  patch.height_cm = 2.0 * region.half_v / 10.0;
  for (const auto& v : vertices)
    if (inside(v)) ++patch.points;
  for (const auto& f : faces) {
    if (f.empty()) continue;
    Vec3 c = Vec3::Zero();
    for (int i : f) c += vertices[static_cast<std::size_t>(i)];
    if (inside(c / static_cast<double>(f.size()))) ++patch.faces;
  }
  return patch;
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

nlohmann::json rate_json(const SamplingRate& r) {
  return {{"points_per_cm2", r.points_per_cm2}, {"faces_per_cm2", r.faces_per_cm2}};
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["points"] = point_count;
  j["faces"] = face_count;
  j["planes"] = nlohmann::json::array();
  for (const auto& p : planes) {
    j["planes"].push_back({{"normal", vec_json(p.plane.normal)},
                           {"delta", p.plane.delta},
                           {"inlier_eps", p.plane.inlier_eps},
                           {"inliers", p.plane.inlier_count},
                           {"e_avg", p.linearity.e_avg},
                           {"rmse", p.linearity.rmse},
                           {"count", p.linearity.count}});
  }
  if (orthogonality) {
    j["orthogonality"] = {{"dots", vec_json(orthogonality->dots)},
                          {"magnitude", orthogonality->magnitude},
                          {"raw_angles_deg", orthogonality->raw_angles},
                          {"angles_deg", orthogonality->folded_angles}};
  }
  if (!accuracy.empty()) {
    auto& a = j["accuracy"];
    a["measurements"] = nlohmann::json::array();
    for (const auto& e : accuracy)
      a["measurements"].push_back({{"l_orig", e.l_orig}, {"l_scan", e.l_scan}, {"e_acc", e.error}});
    if (accuracy_mean) a["mean"] = *accuracy_mean;
  }
  if (sampling) {
    auto& s = j["sampling"];
    s["patches"] = nlohmann::json::array();
    for (std::size_t i = 0; i < sampling_patches.size(); ++i) {
      const auto& p = sampling_patches[i];
      s["patches"].push_back({{"width_cm", p.width_cm},
                              {"height_cm", p.height_cm},
                              {"points", p.points},
                              {"faces", p.faces},
                              {"density", rate_json(sampling->patches[i])}});
    }
    s["area_weighted"] = rate_json(sampling->area_weighted);
    s["mean"] = rate_json(sampling->mean);
  }
  return j.dump(2) + "\n";
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  out << "points " << point_count << ", faces " << face_count << "\n";
  if (!planes.empty()) {
    out << "\nLinearity\n";
    out << "plane  E_avg (mm)      RMSE (mm)       points\n";
    for (std::size_t i = 0; i < planes.size(); ++i)
      out << "P" << i + 1 << "     " << fixed(planes[i].linearity.e_avg, 10) << "    "
          << fixed(planes[i].linearity.rmse, 10) << "    " << planes[i].linearity.count << "\n";
  }
  if (orthogonality) {
    static constexpr const char* names[] = {"P1-P2", "P1-P3", "P2-P3"};
    out << "\nOrthogonality\n";
    out << "pair   dot              angle (deg)\n";
    for (int i = 0; i < 3; ++i)
      out << names[i] << "  " << fixed(orthogonality->dots(i), 12) << "  "
          << fixed(orthogonality->folded_angles[static_cast<std::size_t>(i)], 10) << "\n";
    out << "|E_ortho| " << fixed(orthogonality->magnitude, 12) << "\n";
  }
  if (!accuracy.empty()) {
    out << "\nAccuracy\n";
    out << "#   L_orig (mm)   L_scan (mm)   E_acc (mm)\n";
    for (std::size_t i = 0; i < accuracy.size(); ++i)
      out << i + 1 << "   " << fixed(accuracy[i].l_orig, 4) << "   " << fixed(accuracy[i].l_scan, 4) << "   "
          << fixed(accuracy[i].error, 7) << "\n";
    if (accuracy_mean) out << "mean E_acc " << fixed(*accuracy_mean, 7) << "\n";
  }
  if (sampling) {
    out << "\nSampling rate\n";
    out << "patch (cm)   points   faces   points/cm2   faces/cm2\n";
    for (std::size_t i = 0; i < sampling_patches.size(); ++i) {
      const auto& p = sampling_patches[i];
      out << fixed(p.width_cm, 2) << "x" << fixed(p.height_cm, 2) << "   " << p.points << "   " << p.faces << "   "
          << fixed(sampling->patches[i].points_per_cm2, 1) << "   " << fixed(sampling->patches[i].faces_per_cm2, 1)
          << "\n";
    }
    out << "mean         " << fixed(sampling->mean.points_per_cm2, 1) << "   "
        << fixed(sampling->mean.faces_per_cm2, 1) << "\n";
    out << "area-wtd     " << fixed(sampling->area_weighted.points_per_cm2, 1) << "   "
        << fixed(sampling->area_weighted.faces_per_cm2, 1) << "\n";
  }
  return out.str();
}

}  // namespace sls
