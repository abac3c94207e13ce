#pragma once

// Minimal ASCII PLY support for the files this library writes: a vertex
// element with x y z (any numeric type) and optional red green blue, and an
// optional face element with a vertex_indices list.

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>
#include <system_error>
#include <vector>

namespace sls::detail {

struct PlyData {
  std::vector<std::array<double, 3>> xyz;
  std::vector<std::array<std::uint8_t, 3>> rgb;
  bool has_rgb = false;
  std::vector<std::vector<int>> faces;
};

PlyData read_ply(const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
inline void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace sls::detail
