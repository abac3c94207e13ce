#include "sls/scene.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json_io.hpp"
#include "sls/calib.hpp"

namespace sls {

void Scene::validate() const {
  for (const auto& p : primitives) {
    if (!(p.albedo >= 0.0 && p.albedo <= 1.0)) fail(ErrorCode::invalid_argument, "albedo must lie in [0, 1]");
    std::visit(
        [](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, PlaneShape>) {
            if (std::abs(s.normal.norm() - 1.0) > 1e-9 || std::abs(s.u_axis.norm() - 1.0) > 1e-9 ||
                std::abs(s.normal.dot(s.u_axis)) > 1e-9)
              fail(ErrorCode::invalid_argument, "plane normal and u axis must be orthonormal");
            if (!(s.half_u > 0 && s.half_v > 0) || !std::isfinite(s.half_u) || !std::isfinite(s.half_v))
              fail(ErrorCode::invalid_argument, "plane extents must be positive and bounded");
          } else if constexpr (std::is_same_v<T, BoxShape>) {
            if (!(s.half_extents.minCoeff() > 0) || !s.half_extents.allFinite())
              fail(ErrorCode::invalid_argument, "box half extents must be positive and bounded");
            Pose check;
            check.rotation = s.rotation;
            check.validate();
          } else {
            for (const auto& tri : s.triangles)
              for (int idx : tri)
                if (idx < 0 || static_cast<std::size_t>(idx) >= s.vertices.size())
                  fail(ErrorCode::invalid_argument, "mesh triangle index out of range");
            for (const auto& v : s.vertices)
              if (!v.allFinite()) fail(ErrorCode::invalid_argument, "mesh vertices must be finite");
          }
        },
        p.shape);
  }
}

std::optional<Hit> intersect(const Ray& ray, const PlaneShape& plane, double t_min) {
  const double denom = ray.direction.dot(plane.normal);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = (plane.center - ray.origin).dot(plane.normal) / denom;
  if (!(t > t_min)) return std::nullopt;
  const Vec3 p = ray.at(t);
  const Vec3 d = p - plane.center;
  const Vec3 v_axis = plane.normal.cross(plane.u_axis);
  if (std::abs(d.dot(plane.u_axis)) > plane.half_u || std::abs(d.dot(v_axis)) > plane.half_v) return std::nullopt;
  return Hit{p, plane.normal, t, -1};
}

std::optional<Hit> intersect(const Ray& ray, const BoxShape& box, double t_min) {
  const Mat3 to_local = box.rotation.transpose();
  const Vec3 o = to_local * (ray.origin - box.center);
  const Vec3 d = to_local * ray.direction;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_axis = -1;
  int far_axis = -1;
  for (int a = 0; a < 3; ++a) {
    const double h = box.half_extents[a];
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < -h || o[a] > h) return std::nullopt;
      continue;
    }
    double t0 = (-h - o[a]) / d[a];
    double t1 = (h - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      near_axis = a;
    }
    if (t1 < t_far) {
      t_far = t1;
      far_axis = a;
    }
    if (t_near > t_far) return std::nullopt;
  }
  double t = t_near;
  int axis = near_axis;
  if (!(t > t_min)) {
    t = t_far;
    axis = far_axis;
  }
  if (!(t > t_min) || axis < 0) return std::nullopt;
  const Vec3 local_hit = o + t * d;
  Vec3 n_local = Vec3::Zero();
  n_local[axis] = local_hit[axis] > 0 ? 1.0 : -1.0;
  return Hit{ray.at(t), box.rotation * n_local, t, -1};
}

std::optional<Hit> intersect(const Ray& ray, const MeshShape& mesh, double t_min) {
  std::optional<Hit> best;
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Vec3& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Vec3& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 pvec = ray.direction.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-14) continue;
    const double inv = 1.0 / det;
    const Vec3 tvec = ray.origin - a;
    const double u = tvec.dot(pvec) * inv;
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 qvec = tvec.cross(e1);
    const double v = ray.direction.dot(qvec) * inv;
    if (v < 0.0 || u + v > 1.0) continue;
    const double t = e2.dot(qvec) * inv;
    if (!(t > t_min)) continue;
    if (!best || t < best->t) best = Hit{ray.at(t), e1.cross(e2).normalized(), t, -1};
  }
  return best;
}

std::optional<Hit> cast_ray(const Ray& ray, const Scene& scene, double t_min) {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    auto hit = std::visit([&](const auto& s) { return intersect(ray, s, t_min); }, scene.primitives[i].shape);
    if (hit && (!best || hit->t < best->t)) {
      hit->primitive = static_cast<int>(i);
      best = hit;
    }
  }
  return best;
}

namespace {

using detail::get_field;
using detail::json;

Vec3 vec3_field(const json& j, const char* key) {
  const auto v = get_field<std::vector<double>>(j, key);
  if (v.size() != 3) fail(ErrorCode::format, std::string("field '") + key + "' needs 3 values");
  return {v[0], v[1], v[2]};
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Mat3 rotation_field(const json& j) {
  if (j.contains("rotation")) {
    const auto r = get_field<std::vector<double>>(j, "rotation");
    if (r.size() != 9) fail(ErrorCode::format, "rotation needs 9 row-major values");
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) m(i, k) = r[static_cast<std::size_t>(3 * i + k)];
    return m;
  }
  if (j.contains("axis_angle")) return rotation_from_axis_angle(vec3_field(j, "axis_angle"));
  return Mat3::Identity();
}

}  // namespace

Scene parse_scene(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("invalid scene JSON: ") + e.what());
  }
  if (!root.contains("primitives") || !root.at("primitives").is_array())
    fail(ErrorCode::format, "scene needs a 'primitives' array");
  Scene scene;
  for (const auto& p : root.at("primitives")) {
    const auto type = get_field<std::string>(p, "type");
    Primitive prim;
    prim.albedo = p.contains("albedo") ? get_field<double>(p, "albedo") : 1.0;
    if (type == "plane") {
      PlaneShape s;
      s.center = vec3_field(p, "center");
      s.normal = vec3_field(p, "normal").normalized();
      Vec3 u = vec3_field(p, "u_axis");
      u = (u - u.dot(s.normal) * s.normal).normalized();
      s.u_axis = u;
      const auto half = get_field<std::vector<double>>(p, "half_size");
      if (half.size() != 2) fail(ErrorCode::format, "plane half_size needs 2 values");
      s.half_u = half[0];
      s.half_v = half[1];
      prim.shape = s;
    } else if (type == "box") {
      BoxShape s;
      s.center = vec3_field(p, "center");
      s.half_extents = vec3_field(p, "half_extents");
      s.rotation = rotation_field(p);
      prim.shape = s;
    } else if (type == "mesh") {
      MeshShape s;
      for (const auto& v : get_field<std::vector<std::vector<double>>>(p, "vertices")) {
        if (v.size() != 3) fail(ErrorCode::format, "mesh vertex needs 3 values");
        s.vertices.emplace_back(v[0], v[1], v[2]);
      }
      for (const auto& t : get_field<std::vector<std::vector<int>>>(p, "triangles")) {
        if (t.size() != 3) fail(ErrorCode::format, "mesh triangle needs 3 indices");
        s.triangles.push_back({t[0], t[1], t[2]});
      }
      prim.shape = std::move(s);
    } else {
      fail(ErrorCode::format, "unknown primitive type '" + type + "'");
    }
    scene.primitives.push_back(std::move(prim));
  }
  try {
    scene.validate();
  } catch (const Error& e) {
    fail(ErrorCode::format, std::string("invalid scene: ") + e.what());
  }
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

std::string scene_to_json(const Scene& scene) {
  json prims = json::array();
  for (const auto& p : scene.primitives) {
    json j = std::visit(
        [](const auto& s) -> json {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, PlaneShape>) {
            return {{"type", "plane"},
                    {"center", vec3_json(s.center)},
                    {"normal", vec3_json(s.normal)},
                    {"u_axis", vec3_json(s.u_axis)},
                    {"half_size", {s.half_u, s.half_v}}};
          } else if constexpr (std::is_same_v<T, BoxShape>) {
            std::vector<double> r;
            for (int i = 0; i < 3; ++i)
              for (int k = 0; k < 3; ++k) r.push_back(s.rotation(i, k));
            return {{"type", "box"},
                    {"center", vec3_json(s.center)},
                    {"half_extents", vec3_json(s.half_extents)},
                    {"rotation", r}};
          } else {
            json verts = json::array();
            for (const auto& v : s.vertices) verts.push_back(vec3_json(v));
            json tris = json::array();
            for (const auto& t : s.triangles) tris.push_back({t[0], t[1], t[2]});
            return {{"type", "mesh"}, {"vertices", verts}, {"triangles", tris}};
          }
        },
        p.shape);
    j["albedo"] = p.albedo;
    prims.push_back(j);
  }
  return json{{"primitives", prims}}.dump(2);
}

}  // namespace sls
