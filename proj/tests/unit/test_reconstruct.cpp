#include <set>

#include "doctest.h"
#include "sls/reconstruct.hpp"
#include "sls/simulator.hpp"
#include "support.hpp"

using namespace sls;

namespace {

// Squared distance between the lines, minimized by coordinate-free Newton on
// the 2x2 normal equations built from finite differences.
std::pair<double, double> numeric_closest(const Ray& a, const Ray& b) {
  auto f = [&](double s, double t) { return (a.at(s) - b.at(t)).squaredNorm(); };
  double s = 0, t = 0;
  const double h = 1e-3;
  for (int it = 0; it < 20; ++it) {
    const double gs = (f(s + h, t) - f(s - h, t)) / (2 * h);
    const double gt = (f(s, t + h) - f(s, t - h)) / (2 * h);
    const double hss = (f(s + h, t) - 2 * f(s, t) + f(s - h, t)) / (h * h);
    const double htt = (f(s, t + h) - 2 * f(s, t) + f(s, t - h)) / (h * h);
    const double hst = (f(s + h, t + h) - f(s + h, t - h) - f(s - h, t + h) + f(s - h, t - h)) / (4 * h * h);
    const double det = hss * htt - hst * hst;
    s -= (htt * gs - hst * gt) / det;
    t -= (hss * gt - hst * gs) / det;
  }
  return {s, t};
}

}  // namespace

TEST_CASE("ray intersection examples") {
  const Intersection x = intersect_rays(Ray::make({1, 0, 0}, {-1, 0, 0}), Ray::make({0, 1, 0}, {0, -1, 0}));
  CHECK(x.point.norm() < 1e-15);
  CHECK(x.gap == doctest::Approx(0.0));

  const Ray a = Ray::make({0, 0, 0}, {1, 0, 0});
  const Ray b = Ray::make({0, 1, 1}, {0, 1, 0});
  const Intersection y = intersect_rays(a, b);
  CHECK((y.point - Vec3(0, 0, 0.5)).norm() < 1e-12);
  CHECK(y.gap == doctest::Approx(1.0));
  const auto [s, t] = numeric_closest(a, b);
  CHECK((0.5 * (a.at(s) + b.at(t)) - y.point).norm() < 1e-6);

  try {
    intersect_rays(a, Ray::make({0, 5, 0}, {2, 0, 0}));
    FAIL("expected near-parallel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::near_parallel);
  }
}

TEST_CASE("intersection properties") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const Ray a = Ray::make(test::random_point(rng, 100), test::random_unit(rng));
    const Ray b = Ray::make(test::random_point(rng, 100), test::random_unit(rng));
    if (std::abs(a.direction.dot(b.direction)) > 0.999) continue;
    const Intersection ab = intersect_rays(a, b);
    const Intersection ba = intersect_rays(b, a);
    REQUIRE((ab.point - ba.point).norm() < 1e-9);
    REQUIRE(ab.gap == doctest::Approx(ba.gap).epsilon(1e-9));
    // midpoint is equidistant from both lines
    REQUIRE(std::abs(a.distance_to(ab.point) - b.distance_to(ab.point)) < 1e-8);
    // closed-form 2x2 least squares in (s, t)
    Eigen::Matrix<double, 3, 2> m;
    m.col(0) = a.direction;
    m.col(1) = -b.direction;
    const Eigen::Vector2d st = m.colPivHouseholderQr().solve(b.origin - a.origin);
    REQUIRE((0.5 * (a.at(st(0)) + b.at(st(1))) - ab.point).norm() < 1e-8);
    REQUIRE((a.at(st(0)) - b.at(st(1))).norm() == doctest::Approx(ab.gap).epsilon(1e-8));
    // rigid motion moves the midpoint with it
    const Mat3 r = Eigen::AngleAxisd(1.1, test::random_unit(rng)).toRotationMatrix();
    const Vec3 tr = test::random_point(rng, 50);
    const Intersection moved = intersect_rays(Ray::make(r * a.origin + tr, r * a.direction),
                                              Ray::make(r * b.origin + tr, r * b.direction));
    REQUIRE((moved.point - (r * ab.point + tr)).norm() < 1e-8);
  }
}

TEST_CASE("exact correspondences triangulate exactly") {
  const Rig rig = desk_rig();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> lateral(-30, 30), depth(470, 530);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(lateral(rng), lateral(rng), depth(rng));
    const std::vector<std::vector<Vec2>> pixels{{project(p, rig.cameras[0])}, {project(p, rig.cameras[1])}};
    const auto g = triangulate_group(pixels, rig, 1.0);
    REQUIRE(g);
    REQUIRE((g->point - p).norm() < 1e-9);
    CHECK(g->support == 1);
  }
}

TEST_CASE("groups average every pair") {
  const Rig rig = desk_rig();
  const Vec3 p(2, -3, 500);
  const Vec2 c0 = project(p, rig.cameras[0]);
  const Vec2 c1 = project(p, rig.cameras[1]);
  const std::vector<std::vector<Vec2>> pixels{{c0, c0 + Vec2(0.5, 0)}, {c1, c1 + Vec2(0, 0.5)}};
  GroupStats stats;
  const auto g = triangulate_group(pixels, rig, 10.0, &stats);
  REQUIRE(g);
  CHECK(g->support == 4);
  CHECK(stats.pairs == 4);
  Vec3 mean = Vec3::Zero();
  for (const auto& a : pixels[0])
    for (const auto& b : pixels[1]) mean += intersect_rays(pixel_to_ray(a, rig.cameras[0]), pixel_to_ray(b, rig.cameras[1])).point;
  CHECK((g->point - mean / 4).norm() < 1e-12);

  // nothing survives a zero gap limit
  CHECK_FALSE(triangulate_group(pixels, rig, 0.0));
  // parallel rays give no point
  Rig parallel = rig;
  parallel.cameras[1].pose = parallel.cameras[0].pose;
  parallel.cameras[1].pose.translation.x() += 10;
  const std::vector<std::vector<Vec2>> same{{c0}, {c0}};
  GroupStats pstats;
  CHECK_FALSE(triangulate_group(same, parallel, 1e9, &pstats));
  CHECK(pstats.near_parallel == 1);
}

TEST_CASE("simulated plane cloud") {
  const Scene scene = load_scene(SLS_DATA_DIR "/scene_plane.json");
  const auto& shape = std::get<PlaneShape>(scene.primitives[0].shape);
  const Rig rig = desk_rig();
  auto [acq, truths] = simulate_acquisition(scene, rig, generate_sequence(128, 128), 0.0);
  std::vector<DecodedMap> maps;
  for (const auto& s : acq.stacks) maps.push_back(decode_camera(s, acq.sequence));
  const CorrespondenceMap corrs = build_correspondences(maps);

  std::set<ProjectorPixel> visible[2];
  for (int c = 0; c < 2; ++c)
    for (const auto& p : truths[static_cast<std::size_t>(c)].pixels)
      if (p.is_lit()) visible[c].insert(p.projector());
  std::size_t both = 0;
  for (const auto& k : visible[0]) both += visible[1].count(k);

  ReconstructStats stats;
  const std::vector<GrayImage> whites{acq.stacks[0][0], acq.stacks[1][0]};
  const GridCloud cloud = reconstruct_cloud(corrs, rig, {}, whites, &stats);
  CHECK(static_cast<double>(cloud.points.size()) >= 0.95 * static_cast<double>(both));
  CHECK(stats.gap_max == doctest::Approx(5 * stats.median_gap));
  double sq = 0;
  const Vec3 n = shape.normal.normalized();
  for (const auto& p : cloud.points) sq += std::pow(n.dot(p.point - shape.center), 2);
  const double rmse = std::sqrt(sq / static_cast<double>(cloud.points.size()));
  // pixel-footprint quantization bound, far below a projector pixel (~0.26 mm)
  CHECK(rmse < 0.15);
  CHECK(cloud.has_color);
  CHECK(std::is_sorted(cloud.points.begin(), cloud.points.end(),
                       [](const GridPoint& a, const GridPoint& b) { return a.key < b.key; }));

  ReconstructOptions zero;
  zero.gap_max = 0.0;
  auto [noisy, nt] = simulate_acquisition(scene, rig, generate_sequence(128, 128), 8.0, 1);
  std::vector<DecodedMap> nmaps;
  for (const auto& s : noisy.stacks) nmaps.push_back(decode_camera(s, noisy.sequence));
  CHECK(reconstruct_cloud(build_correspondences(nmaps), rig, zero).points.size() < cloud.points.size() / 100);

  const auto dir = test::scratch_dir("reconstruct_files");
  write_cloud(dir / "c.ply", index_path_for(dir / "c.ply"), cloud);
  CHECK(index_path_for(dir / "c.ply") == dir / "c.idx");
  const GridCloud back = read_cloud(dir / "c.ply", dir / "c.idx");
  REQUIRE(back.points.size() == cloud.points.size());
  for (std::size_t i = 0; i < back.points.size(); ++i) {
    REQUIRE(back.points[i].key == cloud.points[i].key);
    REQUIRE((back.points[i].point - cloud.points[i].point).norm() < 1e-9);
    REQUIRE(back.points[i].color == cloud.points[i].color);
  }
  CHECK(back.find(cloud.points[10].key) != nullptr);
  CHECK(back.find({-1, -1}) == nullptr);
}
