#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sls/camera.hpp"
#include "sls/decode.hpp"

namespace sls {

struct Intersection {
  Vec3 point;        // midpoint of the shortest segment between the lines
  double gap = 0.0;  // length of that segment, mm
  double s = 0.0;    // parameter on the first ray
  double t = 0.0;    // parameter on the second ray
};

inline constexpr double near_parallel_epsilon = 1e-12;

/// Midpoint of the common perpendicular of two lines. Fails with
/// near-parallel when the normal-equation denominator is below 1e-12.
Intersection intersect_rays(const Ray& a, const Ray& b);

struct GroupStats {
  std::size_t pairs = 0;
  std::size_t near_parallel = 0;
  std::size_t gap_rejected = 0;
};

struct GroupResult {
  Vec3 point;
  int support = 0;  // number of ray pairs averaged
};

/// Every intersection across all unordered camera pairs' ray products, with
/// near-parallel pairs already removed.
std::vector<Intersection> pair_intersections(std::span<const std::vector<Ray>> rays_per_camera,
                                             GroupStats* stats = nullptr);

/// Mean of the pair intersections whose gap is within gap_max; nullopt when
/// nothing survives.
std::optional<GroupResult> triangulate_group(std::span<const std::vector<Vec2>> pixels_per_camera, const Rig& rig,
                                             double gap_max, GroupStats* stats = nullptr);

struct GridPoint {
  ProjectorPixel key;
  Vec3 point;
  std::array<std::uint8_t, 3> color{};
  int support = 0;
};

/// Points indexed by projector pixel, sorted by (y, x).
struct GridCloud {
  int res_x = 0;
  int res_y = 0;
  bool has_color = false;
  std::vector<GridPoint> points;

  const GridPoint* find(const ProjectorPixel& key) const;
};

struct ReconstructOptions {
  /// Pairs with a larger gap are discarded; default is 5x the median gap.
  std::optional<double> gap_max;
};

struct ReconstructStats {
  std::size_t keys = 0;
  std::size_t dropped = 0;
  std::size_t pairs = 0;
  std::size_t near_parallel = 0;
  std::size_t gap_rejected = 0;
  double gap_max = 0.0;
  double median_gap = 0.0;
};

inline constexpr double default_gap_factor = 5.0;

/// Triangulates every correspondence key. When white_frames holds one
/// capture per camera, each point gets the mean gray value of its camera
/// pixels as color.
GridCloud reconstruct_cloud(const CorrespondenceMap& corrs, const Rig& rig, const ReconstructOptions& options = {},
                            std::span<const GrayImage> white_frames = {}, ReconstructStats* stats = nullptr);

/// ASCII PLY (x y z as double, optional red green blue) plus a text sidecar
/// mapping vertex order to projector pixel:
///   sls-grid-index 1
///   resolution <res_x> <res_y>
///   count <n>
///   <x> <y> <support>     (one line per vertex, PLY order)
void write_cloud(const std::filesystem::path& ply, const std::filesystem::path& index, const GridCloud& cloud);
GridCloud read_cloud(const std::filesystem::path& ply, const std::filesystem::path& index);

/// The index sidecar path for a cloud PLY: same stem, ".idx" extension.
std::filesystem::path index_path_for(const std::filesystem::path& ply);

}  // namespace sls
