#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "sls/reconstruct.hpp"

namespace sls {

enum class FaceMode { quad, tri };

std::string_view to_string(FaceMode mode) noexcept;
FaceMode parse_face_mode(std::string_view text);

enum class MeshFormat { ply, obj };

/// Format from a file extension (".ply" or ".obj").
MeshFormat mesh_format_for(const std::filesystem::path& path);

struct GridMesh {
  FaceMode mode = FaceMode::tri;
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint8_t, 3>> colors;  // empty or one per vertex
  std::vector<ProjectorPixel> keys;                 // empty or one per vertex
  std::vector<std::vector<int>> faces;              // 3 or 4 indices each

  void validate() const;
};

inline constexpr double default_edge_factor = 10.0;

struct MeshOptions {
  FaceMode mode = FaceMode::tri;
  /// Faces with any vertex pair farther apart are dropped; default is 10x the
  /// median length of the axis-aligned grid edges.
  std::optional<double> edge_max;
  /// Split each cell along its shorter diagonal instead of (x,y)-(x+1,y+1).
  bool shorter_diagonal = false;
};

struct MeshStats {
  std::size_t cells = 0;
  std::size_t rejected_cells = 0;
  double edge_max = 0.0;
  double median_edge = 0.0;
};

/// Faces are wound counter-clockwise in projector pixel coordinates and
/// emitted in (y, x) cell order. Vertices keep the cloud's order.
GridMesh grid_mesh(const GridCloud& cloud, const MeshOptions& options = {}, MeshStats* stats = nullptr);

void export_mesh(const std::filesystem::path& path, const GridMesh& mesh, MeshFormat format);
void export_mesh(const std::filesystem::path& path, const GridMesh& mesh);

/// Reads back what export_mesh writes. Keys are not stored in either format.
GridMesh read_mesh(const std::filesystem::path& path);

}  // namespace sls
