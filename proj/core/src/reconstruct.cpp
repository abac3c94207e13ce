#include "sls/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ply_io.hpp"
#include "sls/parallel.hpp"

namespace sls {

Intersection intersect_rays(const Ray& a, const Ray& b) {
  const Vec3& p = a.origin;
  const Vec3& u = a.direction;
  const Vec3& q = b.origin;
  const Vec3& v = b.direction;
  // same normal equations, with the determinant vv*uu - vu*vu taken as
  // |u x v|^2 so it does not cancel for nearly parallel rays
  const Vec3 n = u.cross(v);
  const double denom = n.squaredNorm();
  if (denom < near_parallel_epsilon) fail(ErrorCode::near_parallel, "rays are near-parallel");
  const Vec3 d = q - p;
  Intersection out;
  out.s = d.cross(v).dot(n) / denom;
  out.t = d.cross(u).dot(n) / denom;
  const Vec3 pa = p + out.s * u;
  const Vec3 pb = q + out.t * v;
  out.point = 0.5 * (pa + pb);
  out.gap = (pa - pb).norm();
  return out;
}

std::vector<Intersection> pair_intersections(std::span<const std::vector<Ray>> rays_per_camera, GroupStats* stats) {
  std::vector<Intersection> out;
  for (std::size_t c1 = 0; c1 < rays_per_camera.size(); ++c1) {
    for (std::size_t c2 = c1 + 1; c2 < rays_per_camera.size(); ++c2) {
      for (const Ray& r1 : rays_per_camera[c1]) {
        for (const Ray& r2 : rays_per_camera[c2]) {
          if (stats) ++stats->pairs;
          try {
            out.push_back(intersect_rays(r1, r2));
          } catch (const Error& e) {
            if (e.code() != ErrorCode::near_parallel) throw;
            if (stats) ++stats->near_parallel;
          }
        }
      }
    }
  }
  return out;
}

namespace {

std::optional<GroupResult> average(std::span<const Intersection> hits, double gap_max, GroupStats* stats) {
  Vec3 sum = Vec3::Zero();
  int n = 0;
  for (const auto& h : hits) {
    if (h.gap > gap_max) {
      if (stats) ++stats->gap_rejected;
      continue;
    }
    sum += h.point;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return GroupResult{sum / n, n};
}

}  // namespace

std::optional<GroupResult> triangulate_group(std::span<const std::vector<Vec2>> pixels_per_camera, const Rig& rig,
                                             double gap_max, GroupStats* stats) {
  if (pixels_per_camera.size() < 2) fail(ErrorCode::invalid_argument, "triangulation needs at least two cameras");
  if (pixels_per_camera.size() > rig.cameras.size()) fail(ErrorCode::invalid_argument, "more pixel lists than cameras");
  std::vector<std::vector<Ray>> rays(pixels_per_camera.size());
  for (std::size_t c = 0; c < pixels_per_camera.size(); ++c) {
    if (pixels_per_camera[c].empty()) fail(ErrorCode::invalid_argument, "every camera needs at least one pixel");
    for (const Vec2& px : pixels_per_camera[c]) rays[c].push_back(pixel_to_ray(px, rig.cameras[c]));
  }
  const auto hits = pair_intersections(rays, stats);
  return average(hits, gap_max, stats);
}

const GridPoint* GridCloud::find(const ProjectorPixel& key) const {
  auto it = std::lower_bound(points.begin(), points.end(), key,
                             [](const GridPoint& p, const ProjectorPixel& k) { return p.key < k; });
  if (it == points.end() || !(it->key == key)) return nullptr;
  return &*it;
}

GridCloud reconstruct_cloud(const CorrespondenceMap& corrs, const Rig& rig, const ReconstructOptions& options,
                            std::span<const GrayImage> white_frames, ReconstructStats* stats) {
  if (corrs.camera_count > rig.cameras.size()) fail(ErrorCode::invalid_argument, "correspondences reference missing cameras");
  if (!white_frames.empty() && white_frames.size() != corrs.camera_count)
    fail(ErrorCode::invalid_argument, "need one white frame per camera for colors");
  if (options.gap_max && *options.gap_max < 0) fail(ErrorCode::invalid_argument, "gap_max must be non-negative");

  struct Work {
    ProjectorPixel key;
    const std::vector<std::vector<CameraPixel>>* lists;
    std::vector<Intersection> hits;
    GroupStats stats;
  };
  std::vector<Work> work;
  work.reserve(corrs.entries.size());
  for (const auto& [key, lists] : corrs.entries) work.push_back({key, &lists, {}, {}});

  parallel_for(static_cast<int>(work.size()), [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Work& item = work[static_cast<std::size_t>(i)];
      std::vector<std::vector<Ray>> rays(item.lists->size());
      for (std::size_t c = 0; c < item.lists->size(); ++c)
        for (const CameraPixel& px : (*item.lists)[c]) rays[c].push_back(pixel_to_ray(px.coords(), rig.cameras[c]));
      item.hits = pair_intersections(rays, &item.stats);
    }
  });

  double median_gap = 0.0;
  {
    std::vector<double> gaps;
    for (const auto& item : work)
      for (const auto& h : item.hits) gaps.push_back(h.gap);
    if (!gaps.empty()) {
      const auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
      std::nth_element(gaps.begin(), mid, gaps.end());
      median_gap = *mid;
    }
  }
  const double gap_max = options.gap_max.value_or(default_gap_factor * median_gap);

  GridCloud cloud;
  cloud.res_x = corrs.res_x;
  cloud.res_y = corrs.res_y;
  cloud.has_color = !white_frames.empty();
  ReconstructStats local;
  local.keys = work.size();
  local.gap_max = gap_max;
  local.median_gap = median_gap;
  for (auto& item : work) {
    const auto result = average(item.hits, gap_max, &item.stats);
    local.pairs += item.stats.pairs;
    local.near_parallel += item.stats.near_parallel;
    local.gap_rejected += item.stats.gap_rejected;
    if (!result) {
      ++local.dropped;
      continue;
    }
    GridPoint gp;
    gp.key = item.key;
    gp.point = result->point;
    gp.support = result->support;
    if (cloud.has_color) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t c = 0; c < item.lists->size(); ++c)
        for (const CameraPixel& px : (*item.lists)[c]) {
          sum += white_frames[c].at(px.col, px.row);
          ++n;
        }
      const auto gray = static_cast<std::uint8_t>(std::clamp(std::round(sum / static_cast<double>(n)), 0.0, 255.0));
      gp.color = {gray, gray, gray};
    }
    cloud.points.push_back(gp);
  }
  if (stats) *stats = local;
  return cloud;
}

std::filesystem::path index_path_for(const std::filesystem::path& ply) {
  auto p = ply;
  p.replace_extension(".idx");
  return p;
}

void write_cloud(const std::filesystem::path& ply, const std::filesystem::path& index, const GridCloud& cloud) {
  std::string out;
  out += "ply\nformat ascii 1.0\ncomment sls grid cloud\n";
  out += "element vertex " + std::to_string(cloud.points.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_color) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";
  std::string idx = "sls-grid-index 1\nresolution " + std::to_string(cloud.res_x) + " " + std::to_string(cloud.res_y) +
                    "\ncount " + std::to_string(cloud.points.size()) + "\n";
  for (const auto& p : cloud.points) {
    detail::append_number(out, p.point.x());
    out += ' ';
    detail::append_number(out, p.point.y());
    out += ' ';
    detail::append_number(out, p.point.z());
    if (cloud.has_color)
      for (auto c : p.color) out += ' ' + std::to_string(c);
    out += '\n';
    idx += std::to_string(p.key.x) + ' ' + std::to_string(p.key.y) + ' ' + std::to_string(p.support) + '\n';
  }
  for (const auto& [path, text] : {std::pair{ply, &out}, std::pair{index, &idx}}) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::io, "cannot open for writing: " + path.string());
    f << *text;
    if (!f) fail(ErrorCode::io, "write failed: " + path.string());
  }
}

GridCloud read_cloud(const std::filesystem::path& ply, const std::filesystem::path& index) {
  const detail::PlyData data = detail::read_ply(ply);
  std::ifstream in(index);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + index.string());
  auto bad = [&](const std::string& what) { fail(ErrorCode::format, index.string() + ": " + what); };
  std::string magic, word;
  int version = 0;
  std::size_t count = 0;
  GridCloud cloud;
  if (!(in >> magic >> version) || magic != "sls-grid-index" || version != 1) bad("bad index header");
  if (!(in >> word >> cloud.res_x >> cloud.res_y) || word != "resolution") bad("missing resolution");
  if (!(in >> word >> count) || word != "count") bad("missing count");
  if (count != data.xyz.size()) bad("index count does not match PLY vertex count");
  cloud.has_color = data.has_rgb;
  for (std::size_t i = 0; i < count; ++i) {
    GridPoint p;
    if (!(in >> p.key.x >> p.key.y >> p.support)) bad("truncated index");
    if (p.key.x < 0 || p.key.y < 0 || p.key.x >= cloud.res_x || p.key.y >= cloud.res_y) bad("key out of range");
    p.point = Vec3(data.xyz[i][0], data.xyz[i][1], data.xyz[i][2]);
    if (!p.point.allFinite()) bad("non-finite point");
    if (data.has_rgb) p.color = data.rgb[i];
    if (!cloud.points.empty() && !(cloud.points.back().key < p.key)) bad("keys not strictly increasing");
    cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace sls
