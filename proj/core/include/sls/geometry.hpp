#pragma once

#include <Eigen/Core>
#include <compare>
#include <cstdint>

namespace sls {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Integer projector pixel. Ordered row-major: by y, then x.
struct ProjectorPixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const ProjectorPixel&, const ProjectorPixel&) = default;
  friend std::strong_ordering operator<=>(const ProjectorPixel& a, const ProjectorPixel& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

/// Integer camera pixel; column is x, row is y, centers at integer coordinates.
struct CameraPixel {
  int col = 0;
  int row = 0;

  friend bool operator==(const CameraPixel&, const CameraPixel&) = default;
  friend std::strong_ordering operator<=>(const CameraPixel& a, const CameraPixel& b) {
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }

  Vec2 coords() const { return {static_cast<double>(col), static_cast<double>(row)}; }
};

}  // namespace sls
