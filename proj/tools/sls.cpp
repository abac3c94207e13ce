#include <charconv>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "sls/pipeline.hpp"

namespace {

using sls::ErrorCode;

constexpr const char* exit_codes_help =
    "Exit codes: 0 success, 2 invalid argument, 3 I/O error, 4 file format error,\n"
    "            5 stage failure (geometry, convergence, degenerate data), 6 output directory locked.\n"
    "Failures print one line to stderr: error: code=<name> exit=<n> message=\"...\"";

int report(ErrorCode code, const std::string& message) {
  const int status = sls::exit_code(code);
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += c == '\n' ? ' ' : c;
  }
  std::cerr << "error: code=" << sls::to_string(code) << " exit=" << status << " message=\"" << escaped << "\"\n";
  return status;
}

std::vector<double> split_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find_first_of(",x", pos);
    const std::string item = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    double v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size())
      sls::fail(ErrorCode::invalid_argument, "malformed " + what + " '" + text + "'");
    out.push_back(v);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

int as_int(double v, const std::string& what) {
  if (v != static_cast<int>(v)) sls::fail(ErrorCode::invalid_argument, what + " must be an integer");
  return static_cast<int>(v);
}

void parse_res(const std::string& text, sls::PatternsConfig& cfg) {
  const auto pos = text.find('x');
  if (pos == std::string::npos) sls::fail(ErrorCode::invalid_argument, "resolution must look like WxH");
  const auto v = split_numbers(text, "resolution");
  if (v.size() != 2) sls::fail(ErrorCode::invalid_argument, "resolution must look like WxH");
  cfg.res_x = as_int(v[0], "resolution");
  cfg.res_y = as_int(v[1], "resolution");
}

sls::Measurement parse_measure(const std::string& text) {
  const auto v = split_numbers(text, "measurement");
  if (v.size() != 4 && v.size() != 5)
    sls::fail(ErrorCode::invalid_argument, "measurement must be x1,y1,x2,y2[,length_mm]");
  sls::Measurement m;
  m.a = {as_int(v[0], "pixel"), as_int(v[1], "pixel")};
  m.b = {as_int(v[2], "pixel"), as_int(v[3], "pixel")};
  if (v.size() == 5) m.l_orig = v[4];
  return m;
}

sls::PatchSpec parse_patch(const std::string& text) {
  const auto v = split_numbers(text, "patch");
  if (v.size() != 4) sls::fail(ErrorCode::invalid_argument, "patch must be x,y,width_cm,height_cm");
  return {{as_int(v[0], "pixel"), as_int(v[1], "pixel")}, v[2], v[3]};
}

void check_non_negative(double v, const char* name) {
  if (v < 0) sls::fail(ErrorCode::invalid_argument, std::string(name) + " must be non-negative");
}

std::filesystem::path lock_dir_for_file(const std::filesystem::path& file) {
  return file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
}

// Option storage shared by the subcommands; CLI11 binds into it directly.
struct Options {
  std::string res = "128x128";
  std::string scheme = "gray";
  int shadow_threshold = sls::default_shadow_threshold;
  int min_contrast = sls::default_min_contrast;
  std::optional<double> gap_max;
  std::optional<double> edge_max;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string mode = "tri";
  std::string format = "ply";
  bool shorter_diagonal = false;
  std::string out;
  std::string scene;
  std::string rig;
  std::string patterns;
  std::string acq;
  std::string decode;
  std::string cloud;
  std::string mesh;
  std::string corr;
  int camera = 0;
  bool projector = false;
  bool no_color = false;
  int planes = 1;
  int ransac_iters = 500;
  std::optional<double> ransac_eps;
  std::vector<std::string> measures;
  std::vector<std::string> patches;
};

std::optional<std::filesystem::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

sls::PatternsConfig patterns_config(const Options& o) {
  sls::PatternsConfig cfg;
  parse_res(o.res, cfg);
  cfg.scheme = sls::parse_scheme(o.scheme);
  return cfg;
}

sls::MeshOptions mesh_options(const Options& o) {
  sls::MeshOptions m;
  m.mode = sls::parse_face_mode(o.mode);
  if (o.edge_max) check_non_negative(*o.edge_max, "--edge-max");
  m.edge_max = o.edge_max;
  m.shorter_diagonal = o.shorter_diagonal;
  return m;
}

sls::RansacOptions ransac_options(const Options& o) {
  sls::RansacOptions r;
  r.iterations = o.ransac_iters;
  if (o.ransac_eps) check_non_negative(*o.ransac_eps, "--ransac-eps");
  r.inlier_eps = o.ransac_eps;
  r.seed = o.seed;
  return r;
}

void check_thresholds(const Options& o) {
  check_non_negative(o.shadow_threshold, "--shadow-threshold");
  check_non_negative(o.min_contrast, "--min-contrast");
  check_non_negative(o.noise, "--noise");
  if (o.gap_max) check_non_negative(*o.gap_max, "--gap-max");
}

void print_eval(const sls::MetricReport& r) { std::cout << r.to_table(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured-light scanning: patterns, simulation, decoding, triangulation, meshing, evaluation"};
  app.footer(exit_codes_help);
  app.require_subcommand(1);
  Options o;

  auto add_out = [&](CLI::App* sub, const char* what) { sub->add_option("--out", o.out, what)->required(); };
  auto add_rig = [&](CLI::App* sub) {
    sub->add_option("--rig", o.rig, "Rig JSON (default: built-in desk rig)")->check(CLI::ExistingFile);
  };
  auto add_pattern_flags = [&](CLI::App* sub) {
    sub->add_option("--res", o.res, "Projector resolution WxH")->capture_default_str();
    sub->add_option("--scheme", o.scheme, "Stripe code: gray or binary")->capture_default_str();
  };
  auto add_decode_flags = [&](CLI::App* sub) {
    sub->add_option("--shadow-threshold", o.shadow_threshold, "Minimum white-black difference")->capture_default_str();
    sub->add_option("--min-contrast", o.min_contrast, "Minimum direct-inverse difference")->capture_default_str();
  };
  auto add_eval_flags = [&](CLI::App* sub) {
    sub->add_option("--planes", o.planes, "Planes to extract with sequential RANSAC")->capture_default_str();
    sub->add_option("--ransac-iters", o.ransac_iters, "RANSAC hypotheses per plane")->capture_default_str();
    sub->add_option("--ransac-eps", o.ransac_eps, "RANSAC inlier distance in mm (default: 3x MAD)");
    sub->add_option("--measure", o.measures, "Length between two projector pixels: x1,y1,x2,y2[,L_orig_mm]");
    sub->add_option("--patch", o.patches, "Sampling patch around a projector pixel: x,y,width_cm,height_cm");
  };

  auto* patterns = app.add_subcommand("patterns", "Write the pattern sequence (PGM frames + sequence.json)");
  add_pattern_flags(patterns);
  add_out(patterns, "Output directory");

  auto* simulate = app.add_subcommand("simulate", "Render a scene under every pattern for every camera");
  simulate->add_option("--scene", o.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  add_rig(simulate);
  simulate->add_option("--patterns", o.patterns, "Pattern directory (default: generate from --res/--scheme)")
      ->check(CLI::ExistingDirectory);
  add_pattern_flags(simulate);
  simulate->add_option("--noise", o.noise, "Gaussian noise sigma in gray levels")->capture_default_str();
  simulate->add_option("--seed", o.seed, "Noise seed")->capture_default_str();
  add_out(simulate, "Acquisition directory");

  auto* calibrate = app.add_subcommand("calibrate", "Estimate a device pose from 2D-3D correspondences");
  calibrate->add_option("--corr", o.corr, "CSV with columns u,v,X,Y,Z")->required()->check(CLI::ExistingFile);
  add_rig(calibrate);
  calibrate->add_option("--camera", o.camera, "Camera index in the rig")->capture_default_str();
  calibrate->add_flag("--projector", o.projector, "Calibrate the projector instead of a camera");
  add_out(calibrate, "Output directory (calib.json, rig.json)");

  auto* decode = app.add_subcommand("decode", "Decode captures into projector coordinates and correspondences");
  decode->add_option("--acq", o.acq, "Acquisition directory")->required()->check(CLI::ExistingDirectory);
  add_decode_flags(decode);
  add_out(decode, "Output directory");

  auto* reconstruct = app.add_subcommand("reconstruct", "Triangulate correspondences into a PLY cloud");
  reconstruct->add_option("--decode", o.decode, "Decode directory")->required()->check(CLI::ExistingDirectory);
  reconstruct->add_option("--acq", o.acq, "Acquisition directory")->required()->check(CLI::ExistingDirectory);
  add_rig(reconstruct);
  reconstruct->add_option("--gap-max", o.gap_max, "Maximum ray gap in mm (default: 5x median)");
  reconstruct->add_flag("--no-color", o.no_color, "Do not sample vertex colors");
  add_out(reconstruct, "Output PLY (an .idx sidecar is written next to it)");

  auto* mesh = app.add_subcommand("mesh", "Connect grid neighbours of a cloud into a mesh");
  mesh->add_option("--cloud", o.cloud, "Cloud PLY with .idx sidecar")->required()->check(CLI::ExistingFile);
  mesh->add_option("--mode", o.mode, "Face type: quad or tri")->capture_default_str();
  mesh->add_option("--edge-max", o.edge_max, "Maximum vertex distance in mm (default: 10x median edge)");
  mesh->add_flag("--shorter-diagonal", o.shorter_diagonal, "Split cells along the shorter diagonal");
  add_out(mesh, "Output mesh (.ply or .obj)");

  auto* eval = app.add_subcommand("eval", "Linearity, orthogonality, accuracy and sampling-rate report");
  eval->add_option("--cloud", o.cloud, "Cloud PLY with .idx sidecar")->required()->check(CLI::ExistingFile);
  eval->add_option("--mesh", o.mesh, "Mesh for face counts")->check(CLI::ExistingFile);
  eval->add_option("--scene", o.scene, "Scene for reference lengths")->check(CLI::ExistingFile);
  add_rig(eval);
  eval->add_option("--seed", o.seed, "RANSAC seed")->capture_default_str();
  add_eval_flags(eval);
  add_out(eval, "Output directory (report.json, report.txt)");

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  pipeline->add_option("--scene", o.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  add_rig(pipeline);
  add_pattern_flags(pipeline);
  add_decode_flags(pipeline);
  pipeline->add_option("--gap-max", o.gap_max, "Maximum ray gap in mm (default: 5x median)");
  pipeline->add_option("--edge-max", o.edge_max, "Maximum mesh vertex distance in mm (default: 10x median edge)");
  pipeline->add_option("--noise", o.noise, "Gaussian noise sigma in gray levels")->capture_default_str();
  pipeline->add_option("--seed", o.seed, "Noise and RANSAC seed")->capture_default_str();
  pipeline->add_option("--mode", o.mode, "Face type: quad or tri")->capture_default_str();
  pipeline->add_option("--format", o.format, "Mesh format: ply or obj")->capture_default_str();
  pipeline->add_flag("--shorter-diagonal", o.shorter_diagonal, "Split cells along the shorter diagonal");
  add_eval_flags(pipeline);
  add_out(pipeline, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(ErrorCode::invalid_argument, e.what());
  }

  try {
    const std::filesystem::path out = o.out;
    if (patterns->parsed()) {
      const sls::OutputLock lock(out);
      const auto cfg = patterns_config(o);
      sls::run_patterns(cfg, out);
      std::cout << "wrote " << sls::generate_sequence(cfg.res_x, cfg.res_y, cfg.scheme).frames().size()
                << " frames to " << out.string() << "\n";
    } else if (simulate->parsed()) {
      check_thresholds(o);
      const sls::OutputLock lock(out);
      sls::SimulateConfig cfg;
      cfg.scene = o.scene;
      cfg.rig = opt_path(o.rig);
      cfg.patterns_dir = opt_path(o.patterns);
      cfg.patterns = patterns_config(o);
      cfg.noise_sigma = o.noise;
      cfg.seed = o.seed;
      sls::run_simulate(cfg, out);
      std::cout << "wrote acquisition to " << out.string() << "\n";
    } else if (calibrate->parsed()) {
      const sls::OutputLock lock(out);
      sls::CalibrateConfig cfg;
      cfg.correspondences = o.corr;
      cfg.rig = opt_path(o.rig);
      cfg.camera = o.camera;
      cfg.projector = o.projector;
      const auto result = sls::run_calibrate(cfg, out);
      std::printf("converged after %d iterations, mean reprojection error %.3e px\n", result.iterations,
                  result.residual);
    } else if (decode->parsed()) {
      check_thresholds(o);
      const sls::OutputLock lock(out);
      const auto summary = sls::run_decode({o.acq, o.shadow_threshold, o.min_contrast}, out);
      for (std::size_t c = 0; c < summary.cameras.size(); ++c) {
        const auto& k = summary.cameras[c];
        std::printf("cam%zu: ok %zu, shadow %zu, low contrast %zu, out of range %zu\n", c, k.ok, k.shadow,
                    k.low_contrast, k.out_of_range);
      }
      std::printf("%zu projector pixels seen by every camera\n", summary.keys);
    } else if (reconstruct->parsed()) {
      check_thresholds(o);
      const sls::OutputLock lock(lock_dir_for_file(out));
      sls::ReconstructConfig cfg;
      cfg.decode_dir = o.decode;
      cfg.acquisition = o.acq;
      cfg.rig = opt_path(o.rig);
      cfg.gap_max = o.gap_max;
      cfg.color = !o.no_color;
      const auto stats = sls::run_reconstruct(cfg, out);
      std::printf("%zu points from %zu keys (%zu dropped), gap_max %.4g mm\n", stats.keys - stats.dropped,
                  stats.keys, stats.dropped, stats.gap_max);
    } else if (mesh->parsed()) {
      const sls::OutputLock lock(lock_dir_for_file(out));
      const auto stats = sls::run_mesh({o.cloud, mesh_options(o)}, out);
      std::printf("%zu cells, %zu rejected, edge_max %.4g mm\n", stats.cells, stats.rejected_cells, stats.edge_max);
    } else if (eval->parsed()) {
      const sls::OutputLock lock(out);
      sls::EvalConfig cfg;
      cfg.cloud = o.cloud;
      cfg.mesh = opt_path(o.mesh);
      cfg.planes = o.planes;
      cfg.ransac = ransac_options(o);
      for (const auto& m : o.measures) cfg.measurements.push_back(parse_measure(m));
      for (const auto& p : o.patches) cfg.patches.push_back(parse_patch(p));
      cfg.scene = opt_path(o.scene);
      cfg.rig = opt_path(o.rig);
      print_eval(sls::run_eval(cfg, out));
    } else if (pipeline->parsed()) {
      check_thresholds(o);
      sls::PipelineConfig cfg;
      cfg.scene = o.scene;
      cfg.rig = opt_path(o.rig);
      cfg.patterns = patterns_config(o);
      cfg.shadow_threshold = o.shadow_threshold;
      cfg.min_contrast = o.min_contrast;
      cfg.gap_max = o.gap_max;
      cfg.mesh = mesh_options(o);
      if (o.format == "ply")
        cfg.mesh_format = sls::MeshFormat::ply;
      else if (o.format == "obj")
        cfg.mesh_format = sls::MeshFormat::obj;
      else
        sls::fail(ErrorCode::invalid_argument, "unknown mesh format '" + o.format + "'");
      cfg.noise_sigma = o.noise;
      cfg.seed = o.seed;
      cfg.planes = o.planes;
      cfg.ransac = ransac_options(o);
      for (const auto& m : o.measures) cfg.measurements.push_back(parse_measure(m));
      for (const auto& p : o.patches) cfg.patches.push_back(parse_patch(p));
      cfg.out = out;
      const sls::OutputLock lock(out);
      const auto result = sls::run_pipeline(cfg);
      std::printf("%zu points, %zu faces\n", result.report.point_count, result.report.face_count);
      print_eval(result.report);
    }
  } catch (const sls::Error& e) {
    return report(e.code(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report(ErrorCode::io, e.what());
  } catch (const std::exception& e) {
    return report(ErrorCode::numeric, e.what());
  }
  return 0;
}
