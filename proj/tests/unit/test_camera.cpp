#include <numbers>

#include "doctest.h"
#include "sls/calib.hpp"
#include "sls/camera.hpp"
#include "support.hpp"

using namespace sls;

namespace {

CameraModel simple_camera() {
  CameraModel cam;
  cam.intrinsics = {1000.0, 1000.0, std::numbers::pi / 2, 500.0, 500.0};
  cam.width = 1000;
  cam.height = 1000;
  return cam;
}

// Point-to-line distance computed without Ray::distance_to.
double line_distance(const Ray& ray, const Vec3& q) {
  const Vec3 d = ray.direction / ray.direction.norm();
  const Vec3 w = q - ray.origin;
  return (w - w.dot(d) * d).norm();
}

}  // namespace

TEST_CASE("projection examples") {
  CameraModel cam = simple_camera();
  const Vec2 c = project({0, 0, 100}, cam);
  CHECK(c.x() == doctest::Approx(500.0));
  CHECK(c.y() == doctest::Approx(500.0));
  const Vec2 p = project({10, 0, 100}, cam);
  CHECK(p.x() == doctest::Approx(600.0));
  CHECK(p.y() == doctest::Approx(500.0));

  cam.distortion.k1 = -0.1;
  const Vec2 d = project({10, 0, 100}, cam);
  const double r2 = 0.1 * 0.1;
  CHECK(d.x() - 500.0 == doctest::Approx(100.0 * (1 - 0.1 * r2)).epsilon(1e-12));
  CHECK(d.y() == doctest::Approx(500.0));
}

TEST_CASE("behind camera") {
  const CameraModel cam = simple_camera();
  try {
    project({0, 0, -5}, cam);
    FAIL("expected behind-camera");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::behind_camera);
  }
  CHECK_THROWS_AS(project({0, 0, 1e-10}, cam), Error);
}

TEST_CASE("skew terms") {
  Intrinsics in{800.0, 900.0, std::numbers::pi / 3, 10.0, 20.0};
  const Mat3 k = in.matrix();
  CHECK(k(0, 1) == doctest::Approx(-800.0 / std::tan(std::numbers::pi / 3)));
  CHECK(k(1, 1) == doctest::Approx(900.0 / std::sin(std::numbers::pi / 3)));
  const Vec2 n(0.03, -0.02);
  const Vec2 back = in.to_normalized(in.to_pixel(n));
  CHECK((back - n).norm() < 1e-14);
  Intrinsics square{800.0, 800.0, std::numbers::pi / 2, 0.0, 0.0};
  CHECK(square.skew() == 0.0);
}

TEST_CASE("intrinsics validation") {
  CHECK_THROWS_AS((Intrinsics{0.0, 1.0, std::numbers::pi / 2, 0, 0}.validate()), Error);
  CHECK_THROWS_AS((Intrinsics{1.0, 1.0, 2.0, 0, 0}.validate()), Error);
  CHECK_THROWS_AS((Intrinsics{1.0, 1.0, 0.0, 0, 0}.validate()), Error);
  Pose bad;
  bad.rotation(0, 0) = -1.0;  // reflection
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("undistortion") {
  const Intrinsics in{1000.0, 1000.0, std::numbers::pi / 2, 500.0, 500.0};
  const Distortion none;
  const Vec2 p(123.25, 876.5);
  CHECK(undistort_pixel(p, in, none) == p);

  const Distortion k1{-0.1, 0, 0, 0, 0};
  CHECK((undistort_pixel({500.0, 500.0}, in, k1) - Vec2(500.0, 500.0)).norm() == 0.0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> px(0.0, 1000.0);
  std::uniform_real_distribution<double> kc(-0.2, 0.2);
  std::uniform_real_distribution<double> pc(-0.01, 0.01);
  for (int i = 0; i < 1000; ++i) {
    const Distortion d{kc(rng), kc(rng), kc(rng), pc(rng), pc(rng)};
    const Vec2 pix(px(rng), px(rng));
    const Vec2 ideal = undistort_pixel(pix, in, d);
    const Vec2 forward = in.to_pixel(d.apply(in.to_normalized(ideal)));
    REQUIRE((forward - pix).norm() < 1e-6);
  }
}

TEST_CASE("distortion jacobian matches finite differences") {
  const Distortion d{-0.12, 0.05, -0.01, 0.004, -0.007};
  const Vec2 n(0.21, -0.13);
  const Eigen::Matrix2d j = d.jacobian(n);
  const double h = 1e-7;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e(k) = h;
    const Vec2 fd = (d.apply(n + e) - d.apply(n - e)) / (2 * h);
    CHECK((fd - j.col(k)).norm() < 1e-7);
  }
}

TEST_CASE("camera_to_world") {
  Pose id;
  CHECK(camera_to_world({1, 2, 3}, id) == Vec3(1, 2, 3));
  Pose t;
  t.translation = {0, 0, 10};
  CHECK((camera_to_world({0, 0, 0}, t) - Vec3(0, 0, -10)).norm() < 1e-15);
  Pose r;
  r.rotation = rotation_from_axis_angle({0, 0, std::numbers::pi / 2});
  CHECK((camera_to_world({1, 0, 0}, r) - r.rotation.transpose() * Vec3(1, 0, 0)).norm() < 1e-15);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    Pose p;
    p.rotation = rotation_from_axis_angle(test::random_point(rng, 3.0));
    p.translation = test::random_point(rng, 100.0);
    const Vec3 w = test::random_point(rng, 500.0);
    CHECK((camera_to_world(p.world_to_camera(w), p) - w).norm() < 1e-12 * 1000);
    const Mat3 composed = p.rotation * rotation_from_axis_angle(test::random_point(rng, 3.0));
    CHECK((composed * composed.transpose() - Mat3::Identity()).norm() < 1e-12);
  }
}

TEST_CASE("pixel_to_ray examples") {
  CameraModel cam = simple_camera();
  const Ray axis = pixel_to_ray({500.0, 500.0}, cam);
  CHECK(axis.origin.norm() < 1e-15);
  CHECK((axis.direction - Vec3(0, 0, 1)).norm() < 1e-15);
  cam.pose.translation = {0, 0, -100};
  CHECK((pixel_to_ray({500.0, 500.0}, cam).origin - Vec3(0, 0, 100)).norm() < 1e-12);
  CHECK(std::abs(pixel_to_ray({3.0, 7.0}, cam).direction.norm() - 1.0) < 1e-12);
}

TEST_CASE("project and pixel_to_ray agree") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> depth(10.0, 1000.0);
  std::uniform_real_distribution<double> lateral(-0.4, 0.4);
  for (int i = 0; i < 1000; ++i) {
    CameraModel cam = simple_camera();
    cam.pose.rotation = rotation_from_axis_angle(test::random_point(rng, 1.0));
    cam.pose.translation = test::random_point(rng, 50.0);
    const double z = depth(rng);
    const Vec3 q_cam(lateral(rng) * z, lateral(rng) * z, z);
    const Vec3 q = camera_to_world(q_cam, cam.pose);
    REQUIRE(line_distance(pixel_to_ray(project(q, cam), cam), q) < 1e-6);
  }
}

TEST_CASE("rig files round trip") {
  const auto dir = test::scratch_dir("camera_rig");
  const Rig rig = desk_rig();
  rig.validate();
  save_rig(dir / "rig.json", rig);
  const Rig back = load_rig(dir / "rig.json");
  REQUIRE(back.cameras.size() == rig.cameras.size());
  for (std::size_t c = 0; c < rig.cameras.size(); ++c) {
    CHECK(back.cameras[c].pose.rotation == rig.cameras[c].pose.rotation);
    CHECK(back.cameras[c].pose.translation == rig.cameras[c].pose.translation);
    CHECK(back.cameras[c].intrinsics.alpha == rig.cameras[c].intrinsics.alpha);
    CHECK(back.cameras[c].distortion.k1 == rig.cameras[c].distortion.k1);
  }
  CHECK(back.projector.width == 128);

  std::ofstream(dir / "broken.json") << "{\"cameras\": [{\"alpha\": 1}]}";
  try {
    load_rig(dir / "broken.json");
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::format);
  }
}
