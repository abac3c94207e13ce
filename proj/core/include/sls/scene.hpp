#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sls/camera.hpp"

namespace sls {

/// Bounded rectangle: center, unit normal, in-plane unit u axis, half sizes
/// along u and along normal x u.
struct PlaneShape {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 u_axis = Vec3::UnitX();
  double half_u = 1.0;
  double half_v = 1.0;
};

/// Oriented box; rotation maps box-local axes to world axes.
struct BoxShape {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  Mat3 rotation = Mat3::Identity();
};

struct MeshShape {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

struct Primitive {
  std::variant<PlaneShape, BoxShape, MeshShape> shape;
  double albedo = 1.0;
};

struct Scene {
  std::vector<Primitive> primitives;

  void validate() const;
};

struct Hit {
  Vec3 point;
  Vec3 normal;  // unit, world frame, not oriented toward the ray
  double t = 0.0;
  int primitive = -1;
};

inline constexpr double ray_t_min = 1e-9;

std::optional<Hit> intersect(const Ray& ray, const PlaneShape& plane, double t_min = ray_t_min);
std::optional<Hit> intersect(const Ray& ray, const BoxShape& box, double t_min = ray_t_min);
std::optional<Hit> intersect(const Ray& ray, const MeshShape& mesh, double t_min = ray_t_min);

/// Closest hit with t > t_min over all primitives.
std::optional<Hit> cast_ray(const Ray& ray, const Scene& scene, double t_min = ray_t_min);

/// {"primitives": [{"type": "plane"|"box"|"mesh", ..., "albedo": a}, ...]}
Scene parse_scene(const std::string& json_text);
Scene load_scene(const std::filesystem::path& path);
std::string scene_to_json(const Scene& scene);

}  // namespace sls
