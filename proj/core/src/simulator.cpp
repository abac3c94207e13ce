#include "sls/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include "json_io.hpp"
#include "sls/parallel.hpp"

namespace sls {
namespace {

constexpr double shadow_ray_offset = 1e-6;  // mm, keeps the shadow ray off its own surface

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void check_rig_pair(const CameraModel& cam, const CameraModel& projector) {
  if ((cam.center() - projector.center()).norm() < 1e-9)
    fail(ErrorCode::invalid_rig, "camera and projector centers coincide");
}

bool projector_lights(const Scene& scene, const Hit& hit, const Vec3& cam_center, const CameraModel& projector,
                      ProjectorPixel& out) {
  const Vec3 proj_center = projector.center();
  const double cam_side = hit.normal.dot(cam_center - hit.point);
  const double proj_side = hit.normal.dot(proj_center - hit.point);
  // A surface lit from its back side is dark from the camera's side.
  if (cam_side * proj_side <= 0.0) return false;

  const Vec3 to_proj = proj_center - hit.point;
  const double dist = to_proj.norm();
  const Ray shadow_ray{hit.point, to_proj / dist};
  if (auto blocker = cast_ray(shadow_ray, scene, shadow_ray_offset); blocker && blocker->t < dist - shadow_ray_offset)
    return false;

  Vec2 uv;
  try {
    uv = project(hit.point, projector);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::behind_camera) return false;
    throw;
  }
  const double px = std::floor(uv.x() + 0.5);
  const double py = std::floor(uv.y() + 0.5);
  if (px < 0 || py < 0 || px >= projector.width || py >= projector.height) return false;
  out = {static_cast<int>(px), static_cast<int>(py)};
  return true;
}

void put_le(std::vector<char>& buf, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

SurfaceTrace trace_camera(const Scene& scene, const CameraModel& cam, const CameraModel& projector) {
  cam.validate();
  projector.validate();
  check_rig_pair(cam, projector);

  SurfaceTrace trace;
  trace.truth.width = cam.width;
  trace.truth.height = cam.height;
  const std::size_t n = static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height);
  trace.truth.pixels.assign(n, GroundTruthPixel{});
  trace.albedo.assign(n, 0.0);
  const Vec3 cam_center = cam.center();

  parallel_for(cam.height, [&](int row_begin, int row_end) {
    for (int row = row_begin; row < row_end; ++row) {
      for (int col = 0; col < cam.width; ++col) {
        const std::size_t idx = static_cast<std::size_t>(row) * static_cast<std::size_t>(cam.width) +
                                static_cast<std::size_t>(col);
        const Ray ray = pixel_to_ray(Vec2(col, row), cam);
        const auto hit = cast_ray(ray, scene);
        if (!hit) continue;
        GroundTruthPixel& gt = trace.truth.pixels[idx];
        gt.point = hit->point;
        gt.flags = GroundTruthPixel::hit;
        trace.albedo[idx] = scene.primitives[static_cast<std::size_t>(hit->primitive)].albedo;
        ProjectorPixel pp;
        if (projector_lights(scene, *hit, cam_center, projector, pp)) {
          gt.proj_x = pp.x;
          gt.proj_y = pp.y;
          gt.flags |= GroundTruthPixel::lit;
        } else {
          gt.flags |= GroundTruthPixel::shadow;
        }
      }
    }
  });
  return trace;
}

GrayImage shade_frame(const SurfaceTrace& trace, const PatternImage& frame, double noise_sigma, std::uint64_t seed) {
  if (noise_sigma < 0) fail(ErrorCode::invalid_argument, "noise sigma must be non-negative");
  const int w = trace.truth.width;
  const int h = trace.truth.height;
  GrayImage img(w, h);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const std::size_t idx = static_cast<std::size_t>(row) * static_cast<std::size_t>(w) + static_cast<std::size_t>(col);
      const GroundTruthPixel& gt = trace.truth.pixels[idx];
      double value = Shading::ambient;
      if (gt.is_lit()) {
        const bool hi = frame.is_hi(gt.proj_x, gt.proj_y);
        value += trace.albedo[idx] * (hi ? Shading::lit_hi : Shading::lit_lo);
      }
      if (noise_sigma > 0) value += noise(rng);
      img.at(col, row) = static_cast<std::uint8_t>(std::clamp(std::round(value), 0.0, 255.0));
    }
  }
  return img;
}

GrayImage render_capture(const Scene& scene, const CameraModel& cam, const CameraModel& projector,
                         const PatternImage& frame, double noise_sigma, std::uint64_t seed) {
  if (frame.width() != projector.width || frame.height() != projector.height)
    fail(ErrorCode::invalid_argument, "frame size does not match projector resolution");
  return shade_frame(trace_camera(scene, cam, projector), frame, noise_sigma, seed);
}

std::uint64_t image_seed(std::uint64_t seed, std::size_t camera, std::size_t frame) noexcept {
  return splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(camera) << 32) ^ static_cast<std::uint64_t>(frame));
}

std::pair<AcquisitionSet, std::vector<GroundTruth>> simulate_acquisition(const Scene& scene, const Rig& rig,
                                                                         const PatternSequence& sequence,
                                                                         double noise_sigma, std::uint64_t seed) {
  if (rig.cameras.size() < 2) fail(ErrorCode::invalid_argument, "simulation needs at least two cameras");
  const SequenceMeta& meta = sequence.meta();
  if (meta.res_x != rig.projector.width || meta.res_y != rig.projector.height)
    fail(ErrorCode::invalid_argument, "pattern resolution does not match projector resolution");
  scene.validate();

  AcquisitionSet acq;
  acq.sequence = meta;
  acq.rig = rig;
  acq.noise_sigma = noise_sigma;
  acq.seed = seed;
  std::vector<GroundTruth> truths;
  for (std::size_t c = 0; c < rig.cameras.size(); ++c) {
    SurfaceTrace trace = trace_camera(scene, rig.cameras[c], rig.projector);
    const auto frames = sequence.frames();
    std::vector<GrayImage> stack(frames.size());
    parallel_for(static_cast<int>(frames.size()), [&](int begin, int end) {
      for (int f = begin; f < end; ++f)
        stack[static_cast<std::size_t>(f)] =
            shade_frame(trace, frames[static_cast<std::size_t>(f)], noise_sigma, image_seed(seed, c, static_cast<std::size_t>(f)));
    });
    acq.stacks.push_back(std::move(stack));
    truths.push_back(std::move(trace.truth));
  }
  return {std::move(acq), std::move(truths)};
}

std::string capture_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%02zu.pgm", index);
  return buf;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  std::vector<char> buf;
  buf.reserve(truth.pixels.size() * 33);
  for (const auto& px : truth.pixels) {
    for (int k = 0; k < 3; ++k) put_le(buf, std::bit_cast<std::uint64_t>(px.point[k]), 8);
    put_le(buf, static_cast<std::uint32_t>(px.proj_x), 4);
    put_le(buf, static_cast<std::uint32_t>(px.proj_y), 4);
    buf.push_back(static_cast<char>(px.flags));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot open for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

GroundTruth read_ground_truth(const std::filesystem::path& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + path.string());
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<unsigned char> buf(n * 33);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()) || in.peek() != EOF)
    fail(ErrorCode::format, "ground truth size does not match image dimensions: " + path.string());
  GroundTruth truth;
  truth.width = width;
  truth.height = height;
  truth.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* p = buf.data() + 33 * i;
    auto& px = truth.pixels[i];
    for (int k = 0; k < 3; ++k) px.point[k] = std::bit_cast<double>(get_le(p + 8 * k, 8));
    px.proj_x = static_cast<std::int32_t>(static_cast<std::uint32_t>(get_le(p + 24, 4)));
    px.proj_y = static_cast<std::int32_t>(static_cast<std::uint32_t>(get_le(p + 28, 4)));
    px.flags = p[32];
  }
  return truth;
}

void write_acquisition(const std::filesystem::path& dir, const AcquisitionSet& acq,
                       const std::vector<GroundTruth>& truths) {
  using detail::json;
  std::filesystem::create_directories(dir);
  json cams = json::array();
  for (std::size_t c = 0; c < acq.stacks.size(); ++c) {
    const std::string sub = "cam" + std::to_string(c);
    std::filesystem::create_directories(dir / sub);
    json images = json::array();
    for (std::size_t f = 0; f < acq.stacks[c].size(); ++f) {
      write_pgm(dir / sub / capture_filename(f), acq.stacks[c][f]);
      images.push_back(sub + "/" + capture_filename(f));
    }
    json entry{{"dir", sub},
               {"width", acq.rig.cameras[c].width},
               {"height", acq.rig.cameras[c].height},
               {"images", images}};
    if (c < truths.size()) {
      write_ground_truth(dir / sub / "gt.bin", truths[c]);
      entry["ground_truth"] = sub + "/gt.bin";
    }
    cams.push_back(entry);
  }
  json manifest{{"format", "sls-acquisition"},
                {"version", 1},
                {"sequence", detail::meta_to_json(acq.sequence)},
                {"rig", detail::rig_to_json(acq.rig)},
                {"noise_sigma", acq.noise_sigma},
                {"seed", acq.seed},
                {"cameras", cams}};
  detail::write_json_file(dir / "manifest.json", manifest);
}

AcquisitionSet read_acquisition(const std::filesystem::path& dir) {
  const auto manifest = detail::read_json_file(dir / "manifest.json");
  if (detail::get_field<std::string>(manifest, "format") != "sls-acquisition")
    fail(ErrorCode::format, "not an acquisition manifest: " + (dir / "manifest.json").string());
  AcquisitionSet acq;
  acq.sequence = detail::meta_from_json(manifest.at("sequence"));
  acq.rig = detail::rig_from_json(manifest.at("rig"));
  acq.noise_sigma = detail::get_field<double>(manifest, "noise_sigma");
  acq.seed = detail::get_field<std::uint64_t>(manifest, "seed");
  const std::size_t cams = acq.rig.cameras.size();
  for (std::size_t c = 0; c < cams; ++c) {
    // Reads the contiguous run of captures present on disk; length checks
    // against the sequence happen where the stack is consumed.
    std::vector<GrayImage> stack;
    const auto sub = dir / ("cam" + std::to_string(c));
    for (std::size_t f = 0;; ++f) {
      const auto path = sub / capture_filename(f);
      if (!std::filesystem::exists(path)) break;
      GrayImage img = read_pgm(path);
      if (img.width() != acq.rig.cameras[c].width || img.height() != acq.rig.cameras[c].height)
        fail(ErrorCode::format, "capture size does not match camera resolution: " + path.string());
      stack.push_back(std::move(img));
    }
    acq.stacks.push_back(std::move(stack));
  }
  return acq;
}

}  // namespace sls
