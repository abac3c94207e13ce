#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sls/error.hpp"

namespace sls {

/// Row-major single-channel image.
template <class T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) fail(ErrorCode::invalid_argument, "negative image size");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Image<std::uint8_t>;
using Image16 = Image<std::uint16_t>;

// Binary PGM (P5). 8-bit uses maxval 255, 16-bit uses maxval 65535 with
// big-endian samples as the format requires.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
void write_pgm16(const std::filesystem::path& path, const Image16& image);
GrayImage read_pgm(const std::filesystem::path& path);
Image16 read_pgm16(const std::filesystem::path& path);

}  // namespace sls
