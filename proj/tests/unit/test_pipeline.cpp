#include <fstream>

#include "doctest.h"
#include "sls/pipeline.hpp"
#include "support.hpp"

using namespace sls;
namespace fs = std::filesystem;

namespace {

PipelineConfig plane_config(const fs::path& out) {
  PipelineConfig config;
  config.scene = SLS_DATA_DIR "/scene_plane.json";
  config.measurements.push_back({{24, 64}, {104, 64}, std::nullopt});
  config.patches.push_back({{64, 64}, 1.0, 1.0});
  config.out = out;
  return config;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(exit_code(ErrorCode::invalid_argument) == 2);
  CHECK(exit_code(ErrorCode::io) == 3);
  CHECK(exit_code(ErrorCode::format) == 4);
  CHECK(exit_code(ErrorCode::non_convergence) == 5);
  CHECK(exit_code(ErrorCode::lock_held) == 6);
}

TEST_CASE("output lock") {
  const auto dir = test::scratch_dir("pipeline_lock");
  {
    OutputLock lock(dir);
    CHECK(fs::exists(dir / ".sls.lock"));
    try {
      OutputLock second(dir);
      FAIL("expected lock-held");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::lock_held);
    }
  }
  CHECK_FALSE(fs::exists(dir / ".sls.lock"));
}

TEST_CASE("pipeline layout and stage equivalence") {
  const auto root = test::scratch_dir("pipeline_run");
  const PipelineResult r = run_pipeline(plane_config(root / "all"));
  for (const char* f : {"rig.json", "patterns/sequence.json", "acquisition/manifest.json", "acquisition/cam0/gt.bin",
                        "decode/correspondences.bin", "decode/decode.json", "cloud.ply", "cloud.idx", "cloud.json",
                        "mesh.ply", "report.json", "report.txt"})
    CHECK_MESSAGE(fs::exists(root / "all" / f), f);
  REQUIRE(r.report.planes.size() == 1);
  CHECK(r.report.planes[0].linearity.rmse < 0.5);
  REQUIRE(r.report.accuracy.size() == 1);
  CHECK(r.report.accuracy[0].error < 0.1);
  REQUIRE(r.decode.audits.size() == 2);
  CHECK(r.decode.audits[0]->bit_errors == 0);

  // the same stages run one at a time
  const fs::path s = root / "stages";
  fs::create_directories(s);
  save_rig(s / "rig.json", desk_rig());
  run_patterns({}, s / "patterns");
  SimulateConfig sim;
  sim.scene = SLS_DATA_DIR "/scene_plane.json";
  sim.rig = s / "rig.json";
  sim.patterns_dir = s / "patterns";
  run_simulate(sim, s / "acquisition");
  run_decode({s / "acquisition"}, s / "decode");
  ReconstructConfig rec;
  rec.decode_dir = s / "decode";
  rec.acquisition = s / "acquisition";
  run_reconstruct(rec, s / "cloud.ply");
  run_mesh({s / "cloud.ply", {}}, s / "mesh.ply");
  EvalConfig ev;
  ev.cloud = s / "cloud.ply";
  ev.mesh = s / "mesh.ply";
  ev.measurements = plane_config(s).measurements;
  ev.patches = plane_config(s).patches;
  ev.scene = SLS_DATA_DIR "/scene_plane.json";
  ev.rig = s / "rig.json";
  run_eval(ev, s);
  for (const char* f : {"decode/correspondences.bin", "cloud.ply", "cloud.idx", "mesh.ply", "report.json", "report.txt"})
    CHECK_MESSAGE(test::read_file(root / "all" / f) == test::read_file(s / f), f);
}

TEST_CASE("fiducial rays hit the scene") {
  const Scene scene = load_scene(SLS_DATA_DIR "/scene_plane.json");
  const Rig rig = desk_rig();
  const Vec3 p = fiducial_point(scene, rig.projector, {64, 64});
  const auto& plane = std::get<PlaneShape>(scene.primitives[0].shape);
  CHECK(std::abs(plane.normal.normalized().dot(p - plane.center)) < 1e-9);
  const Vec2 back = project(p, rig.projector);
  CHECK((back - Vec2(64, 64)).norm() < 1e-6);
  CHECK_THROWS_AS(fiducial_point(Scene{}, rig.projector, {0, 0}), Error);
}

TEST_CASE("calibrate stage writes results") {
  const auto dir = test::scratch_dir("pipeline_calib");
  const Rig rig = desk_rig();
  std::ofstream csv(dir / "c.csv");
  csv << "u,v,X,Y,Z\n";
  std::mt19937_64 rng(5);
  csv.precision(17);
  for (int i = 0; i < 30; ++i) {
    const Vec3 w = test::random_point(rng, 40) + Vec3(0, 0, 500);
    const Vec2 px = project(w, rig.cameras[1]);
    csv << px.x() << "," << px.y() << "," << w.x() << "," << w.y() << "," << w.z() << "\n";
  }
  csv.close();
  CalibrateConfig config;
  config.correspondences = dir / "c.csv";
  config.camera = 1;
  const CalibResult r = run_calibrate(config, dir / "out");
  CHECK(r.converged);
  CHECK(r.residual < 1e-6);
  CHECK(fs::exists(dir / "out" / "calib.json"));
  const Rig back = load_rig(dir / "out" / "rig.json");
  CHECK((back.cameras[1].pose.translation - rig.cameras[1].pose.translation).norm() < 1e-4);
}
