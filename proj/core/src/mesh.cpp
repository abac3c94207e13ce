#include "sls/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ply_io.hpp"

namespace sls {

std::string_view to_string(FaceMode mode) noexcept { return mode == FaceMode::quad ? "quad" : "tri"; }

FaceMode parse_face_mode(std::string_view text) {
  if (text == "quad") return FaceMode::quad;
  if (text == "tri") return FaceMode::tri;
  fail(ErrorCode::invalid_argument, "unknown face mode '" + std::string(text) + "' (expected quad or tri)");
}

MeshFormat mesh_format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply") return MeshFormat::ply;
  if (ext == ".obj") return MeshFormat::obj;
  fail(ErrorCode::invalid_argument, "cannot infer mesh format from '" + path.string() + "'");
}

void GridMesh::validate() const {
  if (!colors.empty() && colors.size() != vertices.size())
    fail(ErrorCode::invalid_argument, "mesh color count differs from vertex count");
  if (!keys.empty() && keys.size() != vertices.size())
    fail(ErrorCode::invalid_argument, "mesh key count differs from vertex count");
  for (const auto& f : faces) {
    if (f.size() != 3 && f.size() != 4) fail(ErrorCode::invalid_argument, "faces must have 3 or 4 vertices");
    for (int v : f)
      if (v < 0 || static_cast<std::size_t>(v) >= vertices.size())
        fail(ErrorCode::invalid_argument, "face index out of range");
  }
}

namespace {

std::int64_t key_id(int x, int y, int res_x) { return static_cast<std::int64_t>(y) * res_x + x; }

}  // namespace

GridMesh grid_mesh(const GridCloud& cloud, const MeshOptions& options, MeshStats* stats) {
  if (options.edge_max && *options.edge_max < 0) fail(ErrorCode::invalid_argument, "edge_max must be non-negative");
  GridMesh mesh;
  mesh.mode = options.mode;
  std::unordered_map<std::int64_t, int> index;
  index.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    index.emplace(key_id(p.key.x, p.key.y, cloud.res_x), static_cast<int>(mesh.vertices.size()));
    mesh.vertices.push_back(p.point);
    mesh.keys.push_back(p.key);
    if (cloud.has_color) mesh.colors.push_back(p.color);
  }
  auto lookup = [&](int x, int y) -> int {
    if (x < 0 || y < 0 || x >= cloud.res_x || y >= cloud.res_y) return -1;
    auto it = index.find(key_id(x, y, cloud.res_x));
    return it == index.end() ? -1 : it->second;
  };

  double median_edge = 0.0;
  {
    std::vector<double> edges;
    for (const auto& p : cloud.points) {
      for (const auto& [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
        const int n = lookup(p.key.x + dx, p.key.y + dy);
        if (n >= 0) edges.push_back((mesh.vertices[static_cast<std::size_t>(n)] - p.point).norm());
      }
    }
    if (!edges.empty()) {
      const auto mid = edges.begin() + static_cast<std::ptrdiff_t>(edges.size() / 2);
      std::nth_element(edges.begin(), mid, edges.end());
      median_edge = *mid;
    }
  }
  const double edge_max = options.edge_max.value_or(default_edge_factor * median_edge);

  MeshStats local;
  local.edge_max = edge_max;
  local.median_edge = median_edge;
  auto vertex = [&](int i) -> const Vec3& { return mesh.vertices[static_cast<std::size_t>(i)]; };

  // Cloud points are sorted by (y, x), so walking them visits cells in order.
  for (const auto& p : cloud.points) {
    const int x = p.key.x;
    const int y = p.key.y;
    const int a = lookup(x, y);
    const int b = lookup(x, y + 1);
    const int c = lookup(x + 1, y + 1);
    const int d = lookup(x + 1, y);
    if (b < 0 || c < 0 || d < 0) continue;
    ++local.cells;
    const std::array<int, 4> quad{a, b, c, d};
    bool within = true;
    for (std::size_t i = 0; i < 4 && within; ++i)
      for (std::size_t j = i + 1; j < 4; ++j)
        if ((vertex(quad[i]) - vertex(quad[j])).norm() > edge_max) {
          within = false;
          break;
        }
    if (!within) {
      ++local.rejected_cells;
      continue;
    }
    if (options.mode == FaceMode::quad) {
      mesh.faces.push_back({a, b, c, d});
    } else if (options.shorter_diagonal && (vertex(b) - vertex(d)).norm() < (vertex(a) - vertex(c)).norm()) {
      mesh.faces.push_back({a, b, d});
      mesh.faces.push_back({b, c, d});
    } else {
      mesh.faces.push_back({a, b, c});
      mesh.faces.push_back({a, c, d});
    }
  }
  if (stats) *stats = local;
  return mesh;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::io, "cannot open for writing: " + path.string());
  f << text;
  if (!f) fail(ErrorCode::io, "write failed: " + path.string());
}

void append_vertex(std::string& out, const Vec3& v) {
  detail::append_number(out, v.x());
  out += ' ';
  detail::append_number(out, v.y());
  out += ' ';
  detail::append_number(out, v.z());
}

}  // namespace

void export_mesh(const std::filesystem::path& path, const GridMesh& mesh, MeshFormat format) {
  mesh.validate();
  const bool color = !mesh.colors.empty();
  std::string out;
  if (format == MeshFormat::ply) {
    out += "ply\nformat ascii 1.0\ncomment sls grid mesh\n";
    out += "element vertex " + std::to_string(mesh.vertices.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    if (color) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out += "element face " + std::to_string(mesh.faces.size()) + "\n";
    out += "property list uchar int vertex_indices\nend_header\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      append_vertex(out, mesh.vertices[i]);
      if (color)
        for (auto c : mesh.colors[i]) out += ' ' + std::to_string(c);
      out += '\n';
    }
    for (const auto& f : mesh.faces) {
      out += std::to_string(f.size());
      for (int v : f) out += ' ' + std::to_string(v);
      out += '\n';
    }
  } else {
    out += "# sls grid mesh\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      out += "v ";
      append_vertex(out, mesh.vertices[i]);
      if (color)
        for (auto c : mesh.colors[i]) {
          out += ' ';
          detail::append_number(out, c / 255.0);
        }
      out += '\n';
    }
    for (const auto& f : mesh.faces) {
      out += 'f';
      for (int v : f) out += ' ' + std::to_string(v + 1);
      out += '\n';
    }
  }
  write_text(path, out);
}

void export_mesh(const std::filesystem::path& path, const GridMesh& mesh) {
  export_mesh(path, mesh, mesh_format_for(path));
}

namespace {

FaceMode infer_mode(const std::vector<std::vector<int>>& faces) {
  return !faces.empty() && faces.front().size() == 4 ? FaceMode::quad : FaceMode::tri;
}

GridMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + path.string());
  GridMesh mesh;
  std::string line;
  bool any_color = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail(ErrorCode::format, path.string() + ": malformed vertex");
      mesh.vertices.emplace_back(x, y, z);
      double r, g, b;
      if (ls >> r >> g >> b) {
        any_color = true;
        auto q = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::round(v * 255.0), 0.0, 255.0)); };
        mesh.colors.push_back({q(r), q(g), q(b)});
      }
    } else if (tag == "f") {
      std::vector<int> face;
      std::string item;
      while (ls >> item) {
        const int v = std::stoi(item.substr(0, item.find('/')));
        face.push_back(v - 1);
      }
      mesh.faces.push_back(std::move(face));
    }
  }
  if (any_color && mesh.colors.size() != mesh.vertices.size())
    fail(ErrorCode::format, path.string() + ": colors on some vertices only");
  mesh.mode = infer_mode(mesh.faces);
  try {
    mesh.validate();
  } catch (const Error& e) {
    fail(ErrorCode::format, path.string() + ": " + e.what());
  }
  return mesh;
}

}  // namespace

GridMesh read_mesh(const std::filesystem::path& path) {
  if (mesh_format_for(path) == MeshFormat::obj) return read_obj(path);
  detail::PlyData data = detail::read_ply(path);
  GridMesh mesh;
  for (const auto& v : data.xyz) mesh.vertices.emplace_back(v[0], v[1], v[2]);
  if (data.has_rgb) mesh.colors = std::move(data.rgb);
  mesh.faces = std::move(data.faces);
  mesh.mode = infer_mode(mesh.faces);
  try {
    mesh.validate();
  } catch (const Error& e) {
    fail(ErrorCode::format, path.string() + ": " + e.what());
  }
  return mesh;
}

}  // namespace sls
