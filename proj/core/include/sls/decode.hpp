#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "sls/codec.hpp"
#include "sls/geometry.hpp"
#include "sls/image.hpp"

namespace sls {

inline constexpr int default_shadow_threshold = 40;
inline constexpr int default_min_contrast = 10;

struct ShadowMask {
  int width = 0;
  int height = 0;
  int threshold = 0;
  std::vector<std::uint8_t> valid;  // row-major, 1 = valid, 0 = in shadow

  bool is_valid(int col, int row) const {
    return valid[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)] != 0;
  }
};

/// valid iff white - black > threshold.
ShadowMask shadow_mask(const GrayImage& white, const GrayImage& black, int threshold);

enum class Bit : std::uint8_t { zero, one, undecodable };

/// Direct-vs-inverse comparison with a dead band of min_contrast.
Bit classify_bit(int direct, int inverse, int min_contrast) noexcept;

enum class DecodeStatus : std::uint8_t { ok = 0, shadow = 1, low_contrast = 2, out_of_range = 3 };

struct DecodedMap {
  int width = 0;
  int height = 0;
  SequenceMeta sequence;
  std::vector<ProjectorPixel> coords;  // meaningful where status is ok
  std::vector<DecodeStatus> status;

  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col);
  }
  DecodeStatus status_at(int col, int row) const { return status[index(col, row)]; }
  ProjectorPixel at(int col, int row) const { return coords[index(col, row)]; }
};

DecodedMap decode_map(std::span<const GrayImage> stack, const SequenceMeta& meta, const ShadowMask& mask,
                      int min_contrast);

/// Shadow mask from the first two frames, then decode_map.
DecodedMap decode_camera(std::span<const GrayImage> stack, const SequenceMeta& meta,
                         int shadow_threshold = default_shadow_threshold, int min_contrast = default_min_contrast);

/// Projector pixel -> per camera, the camera pixels that decoded to it. Only
/// keys seen by every camera are kept.
struct CorrespondenceMap {
  int res_x = 0;
  int res_y = 0;
  std::size_t camera_count = 0;
  std::map<ProjectorPixel, std::vector<std::vector<CameraPixel>>> entries;
};

CorrespondenceMap build_correspondences(std::span<const DecodedMap> maps);

/// x-map and y-map as 16-bit PGM (65535 where not ok) and status as 8-bit
/// PGM holding the DecodeStatus value.
void write_decoded_map(const std::filesystem::path& dir, const std::string& stem, const DecodedMap& map);

/// Little-endian binary correspondence file:
///   "SLSCORR1" magic, u32 version (1), u32 camera count, u32 res_x,
///   u32 res_y, u32 key count, then per key (ascending y, x): u32 x, u32 y,
///   and per camera u32 pixel count followed by count x (u32 col, u32 row).
void write_correspondences(const std::filesystem::path& path, const CorrespondenceMap& corrs);
CorrespondenceMap read_correspondences(const std::filesystem::path& path);

}  // namespace sls
