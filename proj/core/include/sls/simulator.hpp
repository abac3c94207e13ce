#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <utility>
#include <vector>

#include "sls/codec.hpp"
#include "sls/scene.hpp"

namespace sls {

/// Radiometric constants of the synthetic renderer (8-bit scale).
struct Shading {
  static constexpr double lit_hi = 230.0;
  static constexpr double lit_lo = 25.0;
  static constexpr double ambient = 10.0;
};

struct GroundTruthPixel {
  enum Flags : std::uint8_t { hit = 1, shadow = 2, lit = 4 };

  Vec3 point = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  int proj_x = -1;
  int proj_y = -1;
  std::uint8_t flags = 0;

  bool has_hit() const noexcept { return flags & hit; }
  bool in_shadow() const noexcept { return flags & shadow; }
  bool is_lit() const noexcept { return flags & lit; }
  ProjectorPixel projector() const noexcept { return {proj_x, proj_y}; }
};

struct GroundTruth {
  int width = 0;
  int height = 0;
  std::vector<GroundTruthPixel> pixels;  // row-major

  const GroundTruthPixel& at(int col, int row) const {
    return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)];
  }
};

/// Per-camera-pixel trace: what the pixel sees and which projector pixel
/// lights it. Shared by every frame of an acquisition.
struct SurfaceTrace {
  GroundTruth truth;
  std::vector<double> albedo;  // row-major, 0 where nothing is hit
};

/// Casts every camera pixel ray and tests projector visibility: the hit must
/// face both devices, have an unobstructed path to the projector center and
/// land inside the projector image. Lit pixels record the nearest projector
/// pixel (round-to-nearest with pixel centers at integers).
SurfaceTrace trace_camera(const Scene& scene, const CameraModel& cam, const CameraModel& projector);

/// Shades one frame from a trace. Lit: albedo*(HI ? 230 : 25) + 10; otherwise
/// ambient 10. Gaussian noise (seeded) is added, then rounding and clamping.
GrayImage shade_frame(const SurfaceTrace& trace, const PatternImage& frame, double noise_sigma, std::uint64_t seed);

GrayImage render_capture(const Scene& scene, const CameraModel& cam, const CameraModel& projector,
                         const PatternImage& frame, double noise_sigma, std::uint64_t seed = 0);

struct AcquisitionSet {
  SequenceMeta sequence;
  Rig rig;
  std::vector<std::vector<GrayImage>> stacks;  // [camera][frame]
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Noise seed for one image, derived from the run seed and the image position
/// so parallel rendering cannot change the output.
std::uint64_t image_seed(std::uint64_t seed, std::size_t camera, std::size_t frame) noexcept;

std::pair<AcquisitionSet, std::vector<GroundTruth>> simulate_acquisition(const Scene& scene, const Rig& rig,
                                                                         const PatternSequence& sequence,
                                                                         double noise_sigma, std::uint64_t seed = 0);

/// manifest.json + cam<k>/img_<index:02>.pgm (+ cam<k>/gt.bin when truths given).
std::string capture_filename(std::size_t index);
void write_acquisition(const std::filesystem::path& dir, const AcquisitionSet& acq,
                       const std::vector<GroundTruth>& truths = {});
AcquisitionSet read_acquisition(const std::filesystem::path& dir);

/// Per pixel, row-major, little-endian: 3 x f64 point, 2 x i32 projector
/// pixel, 1 byte flags (33 bytes, no header).
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_ground_truth(const std::filesystem::path& path, int width, int height);

}  // namespace sls
