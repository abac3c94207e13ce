#include "doctest.h"
#include "sls/simulator.hpp"
#include "support.hpp"

using namespace sls;

namespace {

Scene plane_scene() { return load_scene(SLS_DATA_DIR "/scene_plane.json"); }

}  // namespace

TEST_CASE("solid frames give closed-form shading") {
  const Rig rig = desk_rig();
  const Scene scene = plane_scene();
  const PatternSequence seq = generate_sequence(128, 128);
  const double albedo = scene.primitives[0].albedo;
  const SurfaceTrace trace = trace_camera(scene, rig.cameras[0], rig.projector);
  const GrayImage white = shade_frame(trace, seq.frames()[0], 0.0, 0);
  const GrayImage black = shade_frame(trace, seq.frames()[1], 0.0, 0);
  const int expect_white = static_cast<int>(std::lround(albedo * 230 + 10));
  const int expect_black = static_cast<int>(std::lround(albedo * 25 + 10));
  std::size_t lit = 0;
  for (int y = 0; y < white.height(); ++y)
    for (int x = 0; x < white.width(); ++x) {
      const auto& gt = trace.truth.at(x, y);
      if (gt.is_lit()) {
        ++lit;
        REQUIRE(white.at(x, y) == expect_white);
        REQUIRE(black.at(x, y) == expect_black);
      } else {
        REQUIRE(white.at(x, y) == 10);
        REQUIRE(black.at(x, y) == 10);
      }
    }
  CHECK(lit > 10000);
}

TEST_CASE("occluded pixels see no pattern") {
  // a small box in front of the plane casts a projector shadow
  Scene scene = plane_scene();
  BoxShape blocker;
  blocker.center = {0, 0, 300};
  blocker.half_extents = Vec3::Constant(8);
  scene.primitives.push_back({blocker, 0.5});
  const Rig rig = desk_rig();
  const SurfaceTrace trace = trace_camera(scene, rig.cameras[0], rig.projector);
  const PatternSequence seq = generate_sequence(128, 128);
  const GrayImage white = shade_frame(trace, seq.frames()[0], 0.0, 0);
  const GrayImage black = shade_frame(trace, seq.frames()[1], 0.0, 0);
  std::size_t shadowed = 0;
  for (int y = 0; y < white.height(); ++y)
    for (int x = 0; x < white.width(); ++x) {
      const auto& gt = trace.truth.at(x, y);
      if (gt.in_shadow()) {
        ++shadowed;
        CHECK(gt.proj_x == -1);
        CHECK(white.at(x, y) == black.at(x, y));
      }
    }
  CHECK(shadowed > 0);
}

TEST_CASE("ground truth agrees with projection") {
  const Rig rig = desk_rig();
  const SurfaceTrace trace = trace_camera(plane_scene(), rig.cameras[1], rig.projector);
  for (const auto& gt : trace.truth.pixels) {
    if (!gt.is_lit()) continue;
    const Vec2 p = project(gt.point, rig.projector);
    REQUIRE(gt.proj_x == static_cast<int>(std::floor(p.x() + 0.5)));
    REQUIRE(gt.proj_y == static_cast<int>(std::floor(p.y() + 0.5)));
  }
}

TEST_CASE("acquisition size and determinism") {
  const Rig rig = desk_rig();
  const PatternSequence seq = generate_sequence(128, 128);
  auto [acq, truths] = simulate_acquisition(plane_scene(), rig, seq, 5.0, 42);
  REQUIRE(acq.stacks.size() == 2);
  CHECK(acq.stacks[0].size() + acq.stacks[1].size() == 60);
  CHECK(truths.size() == 2);
  auto [again, truths2] = simulate_acquisition(plane_scene(), rig, seq, 5.0, 42);
  CHECK(acq.stacks == again.stacks);
  auto [other, truths3] = simulate_acquisition(plane_scene(), rig, seq, 5.0, 43);
  CHECK(acq.stacks != other.stacks);

  const PatternSequence wrong = generate_sequence(64, 64);
  CHECK_THROWS_AS(simulate_acquisition(plane_scene(), rig, wrong, 0.0), Error);
}

TEST_CASE("empty scene renders ambient only") {
  const Rig rig = desk_rig();
  const PatternSequence seq = generate_sequence(128, 128);
  auto [acq, truths] = simulate_acquisition(Scene{}, rig, seq, 0.0);
  for (const auto& stack : acq.stacks)
    for (const auto& img : stack)
      for (auto v : img.data()) REQUIRE(v == 10);
  for (const auto& t : truths)
    for (const auto& p : t.pixels) REQUIRE_FALSE(p.has_hit());
}

TEST_CASE("coincident camera and projector") {
  Rig rig = desk_rig();
  rig.cameras[0].pose = rig.projector.pose;
  const PatternSequence seq = generate_sequence(128, 128);
  try {
    simulate_acquisition(plane_scene(), rig, seq, 0.0);
    FAIL("expected invalid rig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_rig);
  }
}

TEST_CASE("acquisition files round trip") {
  const auto dir = test::scratch_dir("sim_files");
  const Rig rig = desk_rig();
  const PatternSequence seq = generate_sequence(128, 128);
  auto [acq, truths] = simulate_acquisition(plane_scene(), rig, seq, 0.0);
  write_acquisition(dir, acq, truths);
  CHECK(std::filesystem::exists(dir / "cam1" / "img_29.pgm"));
  CHECK(std::filesystem::file_size(dir / "cam0" / "gt.bin") == 256u * 256u * 33u);
  const AcquisitionSet back = read_acquisition(dir);
  CHECK(back.stacks == acq.stacks);
  CHECK(back.sequence == acq.sequence);
  const GroundTruth gt = read_ground_truth(dir / "cam0" / "gt.bin", 256, 256);
  REQUIRE(gt.pixels.size() == truths[0].pixels.size());
  for (std::size_t i = 0; i < gt.pixels.size(); ++i) {
    REQUIRE(gt.pixels[i].flags == truths[0].pixels[i].flags);
    REQUIRE(gt.pixels[i].proj_x == truths[0].pixels[i].proj_x);
  }

  // a missing capture shortens the stack; decoding it is what fails
  std::filesystem::remove(dir / "cam1" / "img_29.pgm");
  CHECK(read_acquisition(dir).stacks[1].size() == 29);
}
