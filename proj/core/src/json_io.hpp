#pragma once

// Internal JSON (de)serialization shared by the file-format writers.

#include <filesystem>

#include "json.hpp"
#include "sls/camera.hpp"
#include "sls/codec.hpp"

namespace sls::detail {

using nlohmann::json;

json meta_to_json(const SequenceMeta& meta);
SequenceMeta meta_from_json(const json& j);

json camera_to_json(const CameraModel& cam);
CameraModel camera_from_json(const json& j);

json rig_to_json(const Rig& rig);
Rig rig_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::format, std::string("missing JSON field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("bad JSON field '") + key + "': " + e.what());
  }
}

}  // namespace sls::detail
