#pragma once

// Stage drivers behind the command-line tool. Each stage reads the files
// written by the previous one; run_pipeline chains them under one directory:
//
//   OUT/rig.json          rig used for the run
//   OUT/patterns/         pattern PGMs + sequence.json
//   OUT/acquisition/      manifest.json, cam<k>/img_XX.pgm, cam<k>/gt.bin
//   OUT/decode/           cam<k>_{x,y,status}.pgm, correspondences.bin, decode.json
//   OUT/cloud.ply         + cloud.idx (projector pixel index) + cloud.json (stats)
//   OUT/mesh.ply|obj
//   OUT/report.json       + report.txt

#include <filesystem>
#include <optional>
#include <vector>

#include "sls/calib.hpp"
#include "sls/codec.hpp"
#include "sls/decode.hpp"
#include "sls/eval.hpp"
#include "sls/mesh.hpp"
#include "sls/reconstruct.hpp"
#include "sls/scene.hpp"
#include "sls/simulator.hpp"

namespace sls {

/// Process exit status for a failure of the given kind:
/// 2 invalid argument, 3 I/O, 4 file format, 5 stage failure, 6 output locked.
int exit_code(ErrorCode code) noexcept;

/// Exclusive lockfile (.sls.lock) in an output directory, created on
/// construction and removed on destruction. Fails with lock-held when the
/// file already exists.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path file_;
};

struct PatternsConfig {
  int res_x = 128;
  int res_y = 128;
  Scheme scheme = Scheme::gray;
};

void run_patterns(const PatternsConfig& config, const std::filesystem::path& out_dir);

struct SimulateConfig {
  std::filesystem::path scene;
  std::optional<std::filesystem::path> rig;           // desk rig when unset
  std::optional<std::filesystem::path> patterns_dir;  // generated from res/scheme when unset
  PatternsConfig patterns;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

void run_simulate(const SimulateConfig& config, const std::filesystem::path& out_dir);

struct CalibrateConfig {
  std::filesystem::path correspondences;  // CSV: u,v,X,Y,Z
  std::optional<std::filesystem::path> rig;
  int camera = 0;          // index into the rig cameras
  bool projector = false;  // calibrate the projector instead
  CalibOptions options;
};

/// Writes calib.json and rig.json (with the refined pose) into out_dir.
/// Fails with non-convergence after writing when LM does not converge.
CalibResult run_calibrate(const CalibrateConfig& config, const std::filesystem::path& out_dir);

struct DecodeConfig {
  std::filesystem::path acquisition;
  int shadow_threshold = default_shadow_threshold;
  int min_contrast = default_min_contrast;
};

/// Decoded pixels compared against simulator ground truth.
struct DecodeAudit {
  std::size_t lit = 0;           // pixels the projector lights
  std::size_t decoded = 0;       // lit pixels decoded ok
  std::size_t missed = 0;        // lit pixels not decoded
  std::size_t false_decode = 0;  // unlit pixels decoded ok
  std::size_t bits = 0;          // code bits over decoded lit pixels
  std::size_t bit_errors = 0;
  double bit_error_rate() const noexcept { return bits ? static_cast<double>(bit_errors) / static_cast<double>(bits) : 0.0; }
};

DecodeAudit audit_decode(const DecodedMap& map, const GroundTruth& truth);

struct DecodeCounts {
  std::size_t ok = 0;
  std::size_t shadow = 0;
  std::size_t low_contrast = 0;
  std::size_t out_of_range = 0;
};

struct DecodeSummary {
  std::vector<DecodeCounts> cameras;
  std::vector<std::optional<DecodeAudit>> audits;
  std::size_t keys = 0;
};

DecodeSummary run_decode(const DecodeConfig& config, const std::filesystem::path& out_dir);

struct ReconstructConfig {
  std::filesystem::path decode_dir;
  std::filesystem::path acquisition;      // white frames and, by default, the rig
  std::optional<std::filesystem::path> rig;
  std::optional<double> gap_max;
  bool color = true;
};

/// Writes the PLY, its .idx sidecar and a .json stats file next to it.
ReconstructStats run_reconstruct(const ReconstructConfig& config, const std::filesystem::path& cloud_ply);

struct MeshConfig {
  std::filesystem::path cloud;  // PLY with .idx sidecar
  MeshOptions options;
};

MeshStats run_mesh(const MeshConfig& config, const std::filesystem::path& mesh_out);

/// Distance between the reconstructed points of two projector pixels. The
/// reference length comes from l_orig or, when unset, from casting both
/// projector pixel centers into the scene.
struct Measurement {
  ProjectorPixel a;
  ProjectorPixel b;
  std::optional<double> l_orig;
};

/// Sampling patch centered on the reconstructed point of a projector pixel,
/// lying in the fitted plane that contains it.
struct PatchSpec {
  ProjectorPixel center;
  double width_cm = 1.0;
  double height_cm = 1.0;
};

struct EvalConfig {
  std::filesystem::path cloud;
  std::optional<std::filesystem::path> mesh;
  /// With one plane, linearity uses every cloud point; with several, each
  /// plane is scored on its own inliers.
  int planes = 1;
  RansacOptions ransac;
  std::vector<Measurement> measurements;
  std::vector<PatchSpec> patches;
  std::optional<std::filesystem::path> scene;
  std::optional<std::filesystem::path> rig;
};

/// Writes report.json and report.txt into out_dir.
MetricReport run_eval(const EvalConfig& config, const std::filesystem::path& out_dir);

/// Surface point hit by the center ray of a projector pixel.
Vec3 fiducial_point(const Scene& scene, const CameraModel& projector, const ProjectorPixel& key);

struct PipelineConfig {
  std::filesystem::path scene;
  std::optional<std::filesystem::path> rig;
  PatternsConfig patterns;
  int shadow_threshold = default_shadow_threshold;
  int min_contrast = default_min_contrast;
  std::optional<double> gap_max;
  MeshOptions mesh;
  MeshFormat mesh_format = MeshFormat::ply;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  int planes = 1;
  RansacOptions ransac;
  std::vector<Measurement> measurements;
  std::vector<PatchSpec> patches;
  std::filesystem::path out;
};

struct PipelineResult {
  DecodeSummary decode;
  ReconstructStats reconstruct;
  MeshStats mesh;
  MetricReport report;
};

/// Runs every stage into config.out. The caller holds the output lock.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace sls
