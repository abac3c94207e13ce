#include <benchmark/benchmark.h>

#include <random>

#include "sls/codec.hpp"
#include "sls/decode.hpp"
#include "sls/eval.hpp"
#include "sls/reconstruct.hpp"
#include "sls/simulator.hpp"

using namespace sls;

namespace {

void BM_GrayRoundTrip(benchmark::State& state) {
  std::uint32_t b = 0;
  for (auto _ : state) {
    const CodeWord g = binary_to_gray(CodeWord(b & 0xFFFFF, 20));
    benchmark::DoNotOptimize(gray_to_binary(g));
    ++b;
  }
}
BENCHMARK(BM_GrayRoundTrip);

void BM_GenerateSequence(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(generate_sequence(1024, 768));
}
BENCHMARK(BM_GenerateSequence);

void BM_IntersectRays(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<Ray> rays;
  for (int i = 0; i < 1024; ++i) rays.push_back(Ray::make({n(rng), n(rng), n(rng)}, {n(rng), n(rng), n(rng) + 3}));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(intersect_rays(rays[i & 1023], rays[(i + 1) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_IntersectRays);

struct PlaneScan {
  AcquisitionSet acq;
  std::vector<DecodedMap> maps;
};

const PlaneScan& plane_scan() {
  static const PlaneScan scan = [] {
    Scene scene;
    PlaneShape plane;
    plane.center = {0, 0, 500};
    plane.normal = Vec3(0.1, 0.05, -1).normalized();
    plane.u_axis = plane.normal.cross(Vec3::UnitY()).normalized();
    plane.half_u = plane.half_v = 40;
    scene.primitives.push_back({plane, 0.9});
    PlaneScan s;
    s.acq = simulate_acquisition(scene, desk_rig(), generate_sequence(128, 128), 3.0, 1).first;
    for (const auto& stack : s.acq.stacks) s.maps.push_back(decode_camera(stack, s.acq.sequence));
    return s;
  }();
  return scan;
}

void BM_DecodeCamera(benchmark::State& state) {
  const PlaneScan& s = plane_scan();
  for (auto _ : state) benchmark::DoNotOptimize(decode_camera(s.acq.stacks[0], s.acq.sequence));
}
BENCHMARK(BM_DecodeCamera)->Unit(benchmark::kMillisecond);

void BM_ReconstructCloud(benchmark::State& state) {
  const PlaneScan& s = plane_scan();
  const CorrespondenceMap corrs = build_correspondences(s.maps);
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_cloud(corrs, s.acq.rig));
}
BENCHMARK(BM_ReconstructCloud)->Unit(benchmark::kMillisecond);

void BM_RansacPlane(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50, 50);
  std::normal_distribution<double> noise(0, 0.05);
  std::vector<Vec3> pts;
  for (int i = 0; i < 10000; ++i) pts.emplace_back(u(rng), u(rng), 500 + noise(rng));
  for (auto _ : state) benchmark::DoNotOptimize(ransac_plane(pts));
}
BENCHMARK(BM_RansacPlane)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
