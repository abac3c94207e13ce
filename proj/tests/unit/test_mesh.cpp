#include <sstream>

#include "doctest.h"
#include "sls/mesh.hpp"
#include "support.hpp"

using namespace sls;

namespace {

GridCloud grid(int n, double spacing = 1.0) {
  GridCloud cloud;
  cloud.res_x = cloud.res_y = n;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) cloud.points.push_back({{x, y}, {x * spacing, y * spacing, 100.0}, {}, 1});
  return cloud;
}

void remove_key(GridCloud& cloud, ProjectorPixel key) {
  std::erase_if(cloud.points, [&](const GridPoint& p) { return p.key == key; });
}

}  // namespace

TEST_CASE("full grid face counts") {
  const GridCloud cloud = grid(7);
  MeshOptions quad;
  quad.mode = FaceMode::quad;
  CHECK(grid_mesh(cloud, quad).faces.size() == 36);
  const GridMesh tri = grid_mesh(cloud);
  CHECK(tri.faces.size() == 72);
  tri.validate();
}

TEST_CASE("a hole removes its four cells") {
  GridCloud cloud = grid(7);
  remove_key(cloud, {3, 3});
  MeshOptions quad;
  quad.mode = FaceMode::quad;
  CHECK(grid_mesh(cloud, quad).faces.size() == 32);
  CHECK(grid_mesh(cloud).faces.size() == 64);
}

TEST_CASE("winding and diagonal") {
  const GridCloud cloud = grid(2);
  MeshOptions quad;
  quad.mode = FaceMode::quad;
  const GridMesh q = grid_mesh(cloud, quad);
  REQUIRE(q.faces.size() == 1);
  // vertices in (y, x) order: 0=(0,0) 1=(1,0) 2=(0,1) 3=(1,1)
  CHECK(q.faces[0] == std::vector<int>{0, 2, 3, 1});
  const GridMesh t = grid_mesh(cloud);
  REQUIRE(t.faces.size() == 2);
  CHECK(t.faces[0] == std::vector<int>{0, 2, 3});
  CHECK(t.faces[1] == std::vector<int>{0, 3, 1});
  // counter-clockwise as seen in the projector image (y grows downward)
  for (const auto& f : t.faces) {
    const auto k = [&](int i) { return Vec2(cloud.points[static_cast<std::size_t>(i)].key.x, cloud.points[static_cast<std::size_t>(i)].key.y); };
    const Vec2 e1 = k(f[1]) - k(f[0]), e2 = k(f[2]) - k(f[0]);
    CHECK(e1.x() * e2.y() - e1.y() * e2.x() < 0);
  }

  GridCloud skewed = grid(2);
  skewed.points[0].point.z() = 110;  // (0,0) lifted: the (1,0)-(0,1) diagonal is shorter
  MeshOptions shorter;
  shorter.shorter_diagonal = true;
  const GridMesh s = grid_mesh(skewed, shorter);
  REQUIRE(s.faces.size() == 2);
  CHECK(s.faces[0] == std::vector<int>{0, 2, 1});
  CHECK(s.faces[1] == std::vector<int>{2, 3, 1});
}

TEST_CASE("edge_max drops stretched cells") {
  GridCloud cloud = grid(5);
  cloud.points[12].point.z() += 50;  // center (2,2)
  MeshStats stats;
  const GridMesh m = grid_mesh(cloud, {}, &stats);
  CHECK(stats.median_edge == doctest::Approx(1.0));
  CHECK(stats.edge_max == doctest::Approx(10.0));
  CHECK(stats.rejected_cells == 4);
  CHECK(m.faces.size() == 2 * (16 - 4));
  for (const auto& f : m.faces)
    for (std::size_t i = 0; i < f.size(); ++i)
      for (std::size_t j = i + 1; j < f.size(); ++j)
        CHECK((m.vertices[static_cast<std::size_t>(f[i])] - m.vertices[static_cast<std::size_t>(f[j])]).norm() <= stats.edge_max);
}

TEST_CASE("tri faces are twice quad faces") {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution keep(0.8);
  for (int trial = 0; trial < 20; ++trial) {
    GridCloud cloud = grid(12);
    std::erase_if(cloud.points, [&](const GridPoint&) { return !keep(rng); });
    MeshOptions quad;
    quad.mode = FaceMode::quad;
    CHECK(grid_mesh(cloud).faces.size() == 2 * grid_mesh(cloud, quad).faces.size());
  }
}

TEST_CASE("mesh export") {
  const auto dir = test::scratch_dir("mesh_files");
  const GridMesh two = grid_mesh(grid(2));
  export_mesh(dir / "m.obj", two);
  const std::string obj = test::read_file(dir / "m.obj");
  std::istringstream lines(obj);
  int v = 0, f = 0;
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) ++f;
  }
  CHECK(v == 4);
  CHECK(f == 2);
  CHECK(obj.find("f 1 3 4") != std::string::npos);

  GridCloud colored = grid(6);
  colored.has_color = true;
  for (auto& p : colored.points) p.color = {10, 20, 30};
  remove_key(colored, {2, 2});
  for (FaceMode mode : {FaceMode::quad, FaceMode::tri}) {
    MeshOptions opt;
    opt.mode = mode;
    const GridMesh m = grid_mesh(colored, opt);
    for (const char* name : {"r.ply", "r.obj"}) {
      export_mesh(dir / name, m);
      const GridMesh back = read_mesh(dir / name);
      CHECK(back.faces == m.faces);
      REQUIRE(back.vertices.size() == m.vertices.size());
      for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK((back.vertices[i] - m.vertices[i]).norm() < 1e-9);
      CHECK(back.colors == m.colors);
    }
  }

  GridCloud empty;
  empty.res_x = empty.res_y = 4;
  const GridMesh none = grid_mesh(empty);
  CHECK(none.faces.empty());
  export_mesh(dir / "empty.ply", none);
  CHECK(read_mesh(dir / "empty.ply").vertices.empty());
  CHECK_THROWS_AS(mesh_format_for(dir / "x.stl"), Error);
  CHECK(parse_face_mode("quad") == FaceMode::quad);
  CHECK_THROWS_AS(parse_face_mode("hex"), Error);
}
