#include "sls/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>

#include "json_io.hpp"

namespace sls {

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument:
      return 2;
    case ErrorCode::io:
      return 3;
    case ErrorCode::format:
      return 4;
    case ErrorCode::lock_held:
      return 6;
    default:
      return 5;
  }
}

OutputLock::OutputLock(const std::filesystem::path& dir) : file_(dir / ".sls.lock") {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory " + dir.string() + ": " + ec.message());
  const int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) fail(ErrorCode::lock_held, "output directory is locked: " + file_.string());
    fail(ErrorCode::io, "cannot create lockfile " + file_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  std::filesystem::remove(file_, ec);
}

namespace {

Rig rig_or_default(const std::optional<std::filesystem::path>& path) { return path ? load_rig(*path) : desk_rig(); }

}  // namespace

void run_patterns(const PatternsConfig& config, const std::filesystem::path& out_dir) {
  write_sequence(generate_sequence(config.res_x, config.res_y, config.scheme), out_dir);
}

void run_simulate(const SimulateConfig& config, const std::filesystem::path& out_dir) {
  const Scene scene = load_scene(config.scene);
  const Rig rig = rig_or_default(config.rig);
  rig.validate();
  if (config.noise_sigma < 0) fail(ErrorCode::invalid_argument, "noise sigma must be non-negative");
  const PatternSequence sequence =
      config.patterns_dir ? load_sequence(*config.patterns_dir)
                          : generate_sequence(config.patterns.res_x, config.patterns.res_y, config.patterns.scheme);
  auto [acq, truths] = simulate_acquisition(scene, rig, sequence, config.noise_sigma, config.seed);
  write_acquisition(out_dir, acq, truths);
}

CalibResult run_calibrate(const CalibrateConfig& config, const std::filesystem::path& out_dir) {
  Rig rig = rig_or_default(config.rig);
  if (!config.projector && (config.camera < 0 || static_cast<std::size_t>(config.camera) >= rig.cameras.size()))
    fail(ErrorCode::invalid_argument, "camera index out of range");
  CameraModel& device = config.projector ? rig.projector : rig.cameras[static_cast<std::size_t>(config.camera)];
  const auto corrs = read_correspondences_csv(config.correspondences);
  const CalibResult result = estimate_pose(device.intrinsics, device.distortion, corrs, device.pose, config.options);
  device.pose = result.pose;

  std::filesystem::create_directories(out_dir);
  detail::json r = detail::json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r.push_back(result.pose.rotation(i, k));
  detail::json out{{"device", config.projector ? std::string("projector") : "camera" + std::to_string(config.camera)},
                   {"R", r},
                   {"T", {result.pose.translation.x(), result.pose.translation.y(), result.pose.translation.z()}},
                   {"residual_px", result.residual},
                   {"iterations", result.iterations},
                   {"converged", result.converged},
                   {"cost_history", result.cost_history},
                   {"correspondences", corrs.size()}};
  detail::write_json_file(out_dir / "calib.json", out);
  save_rig(out_dir / "rig.json", rig);
  if (!result.converged) fail(ErrorCode::non_convergence, "pose estimation did not converge");
  return result;
}

DecodeAudit audit_decode(const DecodedMap& map, const GroundTruth& truth) {
  if (map.width != truth.width || map.height != truth.height)
    fail(ErrorCode::invalid_argument, "ground truth size differs from decoded map");
  const SequenceMeta& meta = map.sequence;
  DecodeAudit audit;
  for (int row = 0; row < map.height; ++row) {
    for (int col = 0; col < map.width; ++col) {
      const auto& gt = truth.at(col, row);
      const bool ok = map.status_at(col, row) == DecodeStatus::ok;
      if (!gt.is_lit()) {
        if (ok) ++audit.false_decode;
        continue;
      }
      ++audit.lit;
      if (!ok) {
        ++audit.missed;
        continue;
      }
      ++audit.decoded;
      const ProjectorPixel got = map.at(col, row);
      auto code = [&](std::uint32_t v, int width) { return width > 0 ? encode_index(v, width, meta.scheme) : 0u; };
      audit.bits += static_cast<std::size_t>(meta.columns + meta.rows);
      audit.bit_errors += static_cast<std::size_t>(
          std::popcount(code(static_cast<std::uint32_t>(got.x), meta.columns) ^
                        code(static_cast<std::uint32_t>(gt.proj_x), meta.columns)) +
          std::popcount(code(static_cast<std::uint32_t>(got.y), meta.rows) ^
                        code(static_cast<std::uint32_t>(gt.proj_y), meta.rows)));
    }
  }
  return audit;
}

DecodeSummary run_decode(const DecodeConfig& config, const std::filesystem::path& out_dir) {
  if (config.shadow_threshold < 0 || config.min_contrast < 0)
    fail(ErrorCode::invalid_argument, "thresholds must be non-negative");
  const AcquisitionSet acq = read_acquisition(config.acquisition);
  const auto manifest = detail::read_json_file(config.acquisition / "manifest.json");
  std::filesystem::create_directories(out_dir);

  DecodeSummary summary;
  std::vector<DecodedMap> maps;
  detail::json cams = detail::json::array();
  for (std::size_t c = 0; c < acq.stacks.size(); ++c) {
    DecodedMap map = decode_camera(acq.stacks[c], acq.sequence, config.shadow_threshold, config.min_contrast);
    write_decoded_map(out_dir, "cam" + std::to_string(c), map);
    DecodeCounts counts;
    for (auto s : map.status) {
      switch (s) {
        case DecodeStatus::ok: ++counts.ok; break;
        case DecodeStatus::shadow: ++counts.shadow; break;
        case DecodeStatus::low_contrast: ++counts.low_contrast; break;
        case DecodeStatus::out_of_range: ++counts.out_of_range; break;
      }
    }
    detail::json entry{{"ok", counts.ok},
                       {"shadow", counts.shadow},
                       {"low_contrast", counts.low_contrast},
                       {"out_of_range", counts.out_of_range}};
    std::optional<DecodeAudit> audit;
    const auto& mcam = manifest.at("cameras").at(c);
    if (mcam.contains("ground_truth")) {
      const GroundTruth truth = read_ground_truth(config.acquisition / mcam.at("ground_truth").get<std::string>(),
                                                  map.width, map.height);
      audit = audit_decode(map, truth);
      entry["audit"] = {{"lit", audit->lit},
                        {"decoded", audit->decoded},
                        {"missed", audit->missed},
                        {"false_decode", audit->false_decode},
                        {"bits", audit->bits},
                        {"bit_errors", audit->bit_errors},
                        {"bit_error_rate", audit->bit_error_rate()}};
    }
    cams.push_back(entry);
    summary.cameras.push_back(counts);
    summary.audits.push_back(audit);
    maps.push_back(std::move(map));
  }
  const CorrespondenceMap corrs = build_correspondences(maps);
  write_correspondences(out_dir / "correspondences.bin", corrs);
  summary.keys = corrs.entries.size();
  detail::write_json_file(out_dir / "decode.json", {{"shadow_threshold", config.shadow_threshold},
                                                    {"min_contrast", config.min_contrast},
                                                    {"cameras", cams},
                                                    {"keys", summary.keys}});
  return summary;
}

ReconstructStats run_reconstruct(const ReconstructConfig& config, const std::filesystem::path& cloud_ply) {
  const CorrespondenceMap corrs = read_correspondences(config.decode_dir / "correspondences.bin");
  const AcquisitionSet acq = read_acquisition(config.acquisition);
  const Rig rig = config.rig ? load_rig(*config.rig) : acq.rig;
  rig.validate();
  std::vector<GrayImage> whites;
  if (config.color) {
    for (const auto& stack : acq.stacks) {
      if (stack.empty()) fail(ErrorCode::format, "acquisition camera has no captures");
      whites.push_back(stack.front());
    }
  }
  ReconstructStats stats;
  const GridCloud cloud = reconstruct_cloud(corrs, rig, {config.gap_max}, whites, &stats);
  if (cloud_ply.has_parent_path()) std::filesystem::create_directories(cloud_ply.parent_path());
  write_cloud(cloud_ply, index_path_for(cloud_ply), cloud);
  auto stats_path = cloud_ply;
  stats_path.replace_extension(".json");
  detail::write_json_file(stats_path, {{"keys", stats.keys},
                                       {"points", cloud.points.size()},
                                       {"dropped", stats.dropped},
                                       {"pairs", stats.pairs},
                                       {"near_parallel", stats.near_parallel},
                                       {"gap_rejected", stats.gap_rejected},
                                       {"gap_max", stats.gap_max},
                                       {"median_gap", stats.median_gap}});
  return stats;
}

MeshStats run_mesh(const MeshConfig& config, const std::filesystem::path& mesh_out) {
  const GridCloud cloud = read_cloud(config.cloud, index_path_for(config.cloud));
  MeshStats stats;
  const GridMesh mesh = grid_mesh(cloud, config.options, &stats);
  if (mesh_out.has_parent_path()) std::filesystem::create_directories(mesh_out.parent_path());
  export_mesh(mesh_out, mesh);
  return stats;
}

Vec3 fiducial_point(const Scene& scene, const CameraModel& projector, const ProjectorPixel& key) {
  const Ray ray = pixel_to_ray(Vec2(key.x, key.y), projector);
  const auto hit = cast_ray(ray, scene);
  if (!hit) fail(ErrorCode::invalid_argument, "projector pixel (" + std::to_string(key.x) + "," + std::to_string(key.y) +
                                                  ") does not hit the scene");
  return hit->point;
}

MetricReport run_eval(const EvalConfig& config, const std::filesystem::path& out_dir) {
  const GridCloud cloud = read_cloud(config.cloud, index_path_for(config.cloud));
  std::vector<Vec3> points;
  points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) points.push_back(p.point);

  MetricReport report;
  report.point_count = points.size();
  std::optional<GridMesh> mesh;
  if (config.mesh) {
    mesh = read_mesh(*config.mesh);
    report.face_count = mesh->faces.size();
  }

  std::vector<ExtractedPlane> planes;
  if (config.planes > 0) planes = extract_planes(points, config.planes, config.ransac);
  for (const auto& e : planes) {
    PlaneReport pr{e.plane, {}};
    if (planes.size() == 1) {
      pr.linearity = linearity(points, e.plane);
    } else {
      std::vector<Vec3> in;
      for (auto i : e.inliers) in.push_back(points[i]);
      if (in.empty()) fail(ErrorCode::degenerate_input, "fitted plane has no inliers");
      pr.linearity = linearity(in, e.plane);
    }
    report.planes.push_back(pr);
  }
  if (planes.size() == 3) report.orthogonality = orthogonality(planes[0].plane, planes[1].plane, planes[2].plane);

  auto point_of = [&](const ProjectorPixel& key) {
    const GridPoint* p = cloud.find(key);
    if (!p)
      fail(ErrorCode::invalid_argument,
           "projector pixel (" + std::to_string(key.x) + "," + std::to_string(key.y) + ") is not in the cloud");
    return p->point;
  };

  if (!config.measurements.empty()) {
    std::optional<Scene> scene;
    std::optional<Rig> rig;
    double sum = 0.0;
    for (const auto& m : config.measurements) {
      double l_orig = 0.0;
      if (m.l_orig) {
        l_orig = *m.l_orig;
      } else {
        if (!config.scene) fail(ErrorCode::invalid_argument, "measurement needs a reference length or a scene");
        if (!scene) scene = load_scene(*config.scene);
        if (!rig) rig = rig_or_default(config.rig);
        l_orig = (fiducial_point(*scene, rig->projector, m.a) - fiducial_point(*scene, rig->projector, m.b)).norm();
      }
      const double l_scan = (point_of(m.a) - point_of(m.b)).norm();
      const AccuracyEntry e{l_orig, l_scan, accuracy(l_orig, l_scan)};
      sum += e.error;
      report.accuracy.push_back(e);
    }
    report.accuracy_mean = sum / static_cast<double>(report.accuracy.size());
  }

  if (!config.patches.empty()) {
    if (planes.empty()) fail(ErrorCode::invalid_argument, "sampling patches need at least one fitted plane");
    static const std::vector<std::vector<int>> no_faces;
    const auto& faces = mesh ? mesh->faces : no_faces;
    const std::vector<Vec3>& verts = mesh ? mesh->vertices : points;
    for (const auto& spec : config.patches) {
      const Vec3 c = point_of(spec.center);
      const ExtractedPlane* home = &planes.front();
      for (const auto& e : planes)
        if (std::abs(e.plane.signed_distance(c)) <= e.plane.inlier_eps) {
          home = &e;
          break;
        }
      const Vec3 n = home->plane.normal;
      Vec3 u = Vec3::UnitX() - Vec3::UnitX().dot(n) * n;
      if (u.norm() < 1e-6) u = Vec3::UnitY() - Vec3::UnitY().dot(n) * n;
      u.normalize();
      PatchRegion region;
      region.center = c - home->plane.signed_distance(c) * n;
      region.u_axis = u;
      region.v_axis = n.cross(u);
      region.half_u = spec.width_cm * 5.0;
      region.half_v = spec.height_cm * 5.0;
      region.thickness = std::max(1.0, 3.0 * home->plane.inlier_eps);
      SamplingPatch patch = count_in_patch(verts, faces, region);
      if (!mesh) patch.faces = 0;
      report.sampling_patches.push_back(patch);
    }
    report.sampling = aggregate_sampling(report.sampling_patches);
  }

  std::filesystem::create_directories(out_dir);
  for (const auto& [name, text] : {std::pair{"report.json", report.to_json()}, std::pair{"report.txt", report.to_table()}}) {
    std::ofstream f(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::io, "cannot open for writing: " + (out_dir / name).string());
    f << text;
    if (!f) fail(ErrorCode::io, "write failed: " + (out_dir / name).string());
  }
  return report;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  const auto& out = config.out;
  std::filesystem::create_directories(out);
  const Rig rig = rig_or_default(config.rig);
  rig.validate();
  save_rig(out / "rig.json", rig);

  PipelineResult result;
  run_patterns(config.patterns, out / "patterns");

  SimulateConfig sim;
  sim.scene = config.scene;
  sim.rig = out / "rig.json";
  sim.patterns_dir = out / "patterns";
  sim.noise_sigma = config.noise_sigma;
  sim.seed = config.seed;
  run_simulate(sim, out / "acquisition");

  result.decode = run_decode({out / "acquisition", config.shadow_threshold, config.min_contrast}, out / "decode");

  ReconstructConfig rec;
  rec.decode_dir = out / "decode";
  rec.acquisition = out / "acquisition";
  rec.gap_max = config.gap_max;
  result.reconstruct = run_reconstruct(rec, out / "cloud.ply");

  const auto mesh_path = out / (config.mesh_format == MeshFormat::ply ? "mesh.ply" : "mesh.obj");
  result.mesh = run_mesh({out / "cloud.ply", config.mesh}, mesh_path);

  EvalConfig ev;
  ev.cloud = out / "cloud.ply";
  ev.mesh = mesh_path;
  ev.planes = config.planes;
  ev.ransac = config.ransac;
  ev.measurements = config.measurements;
  ev.patches = config.patches;
  ev.scene = config.scene;
  ev.rig = out / "rig.json";
  result.report = run_eval(ev, out);
  return result;
}

}  // namespace sls
