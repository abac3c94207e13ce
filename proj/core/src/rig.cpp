#include <cmath>

#include "json_io.hpp"
#include "sls/camera.hpp"

namespace sls {
namespace detail {

json camera_to_json(const CameraModel& cam) {
  std::vector<double> r(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[static_cast<std::size_t>(3 * i + j)] = cam.pose.rotation(i, j);
  const auto& in = cam.intrinsics;
  const auto& d = cam.distortion;
  const auto& t = cam.pose.translation;
  return json{{"alpha", in.alpha}, {"beta", in.beta}, {"theta", in.theta}, {"u0", in.u0}, {"v0", in.v0},
              {"k1", d.k1},        {"k2", d.k2},      {"k3", d.k3},        {"p1", d.p1}, {"p2", d.p2},
              {"R", r},            {"T", {t.x(), t.y(), t.z()}},
              {"width", cam.width}, {"height", cam.height}};
}

CameraModel camera_from_json(const json& j) {
  CameraModel cam;
  cam.intrinsics.alpha = get_field<double>(j, "alpha");
  cam.intrinsics.beta = get_field<double>(j, "beta");
  cam.intrinsics.theta = j.contains("theta") ? get_field<double>(j, "theta") : std::numbers::pi / 2;
  cam.intrinsics.u0 = get_field<double>(j, "u0");
  cam.intrinsics.v0 = get_field<double>(j, "v0");
  auto optional = [&](const char* key) { return j.contains(key) ? get_field<double>(j, key) : 0.0; };
  cam.distortion = {optional("k1"), optional("k2"), optional("k3"), optional("p1"), optional("p2")};
  const auto r = get_field<std::vector<double>>(j, "R");
  const auto t = get_field<std::vector<double>>(j, "T");
  if (r.size() != 9) fail(ErrorCode::format, "R must have 9 row-major values");
  if (t.size() != 3) fail(ErrorCode::format, "T must have 3 values");
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) cam.pose.rotation(i, k) = r[static_cast<std::size_t>(3 * i + k)];
  cam.pose.translation = Vec3(t[0], t[1], t[2]);
  cam.width = get_field<int>(j, "width");
  cam.height = get_field<int>(j, "height");
  try {
    cam.validate();
  } catch (const Error& e) {
    fail(ErrorCode::format, std::string("invalid camera record: ") + e.what());
  }
  return cam;
}

json rig_to_json(const Rig& rig) {
  json cams = json::array();
  for (const auto& c : rig.cameras) cams.push_back(camera_to_json(c));
  return json{{"cameras", cams}, {"projector", camera_to_json(rig.projector)}};
}

Rig rig_from_json(const json& j) {
  Rig rig;
  if (!j.contains("cameras") || !j.at("cameras").is_array()) fail(ErrorCode::format, "rig needs a 'cameras' array");
  for (const auto& c : j.at("cameras")) rig.cameras.push_back(camera_from_json(c));
  if (!j.contains("projector")) fail(ErrorCode::format, "rig needs a 'projector' record");
  rig.projector = camera_from_json(j.at("projector"));
  return rig;
}

}  // namespace detail

Rig load_rig(const std::filesystem::path& path) { return detail::rig_from_json(detail::read_json_file(path)); }

void save_rig(const std::filesystem::path& path, const Rig& rig) {
  detail::write_json_file(path, detail::rig_to_json(rig));
}

Rig desk_rig() {
  const Vec3 target(0.0, 0.0, 500.0);

  Rig rig;
  rig.projector.intrinsics = {1900.0, 1900.0, std::numbers::pi / 2, 63.5, 63.5};
  rig.projector.width = 128;
  rig.projector.height = 128;

  for (double side : {-1.0, 1.0}) {
    CameraModel cam;
    cam.intrinsics = {4400.0, 4400.0, std::numbers::pi / 2, 127.5, 127.5};
    cam.distortion = {-0.08, 0.01, 0.0, 0.0005, -0.0003};
    cam.pose = Pose::look_at(Vec3(side * 150.0, 0.0, 0.0), target);
    cam.width = 256;
    cam.height = 256;
    rig.cameras.push_back(cam);
  }
  return rig;
}

}  // namespace sls
