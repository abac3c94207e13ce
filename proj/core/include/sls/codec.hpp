#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sls/image.hpp"

namespace sls {

/// Fixed-width bit string, MSB first: bit(0) is the most significant bit.
class CodeWord {
 public:
  static constexpr int max_width = 31;

  CodeWord(std::uint32_t value, int width);

  /// Parses a string of '0'/'1' characters, MSB first.
  static CodeWord from_bits(std::string_view bits);

  std::uint32_t value() const noexcept { return value_; }
  int width() const noexcept { return width_; }
  bool bit(int k) const;
  std::string to_string() const;

  friend bool operator==(const CodeWord&, const CodeWord&) = default;

 private:
  std::uint32_t value_;
  int width_;
};

/// MSB copied, every following bit is the XOR of the current binary bit and
/// the next more significant binary bit.
CodeWord binary_to_gray(const CodeWord& binary);

/// MSB copied, every following bit is the XOR of the current Gray bit and the
/// binary bit produced just before it.
CodeWord gray_to_binary(const CodeWord& gray);

struct PatternCounts {
  int columns;
  int rows;
  friend bool operator==(const PatternCounts&, const PatternCounts&) = default;
};

/// (ceil(log2 res_x), ceil(log2 res_y)).
PatternCounts pattern_counts(long res_x, long res_y);

enum class Scheme { gray, binary };

std::string_view to_string(Scheme scheme) noexcept;
Scheme parse_scheme(std::string_view text);

std::uint32_t encode_index(std::uint32_t index, int width, Scheme scheme);
std::uint32_t decode_index(std::uint32_t code, int width, Scheme scheme);

enum class FrameKind { solid_white, solid_black, column_bit, column_bit_inverse, row_bit, row_bit_inverse };

struct FrameRole {
  FrameKind kind = FrameKind::solid_white;
  int bit = 0;  // MSB-first bit index for column/row frames, 0 otherwise

  bool inverse() const noexcept {
    return kind == FrameKind::column_bit_inverse || kind == FrameKind::row_bit_inverse;
  }
  bool columns() const noexcept {
    return kind == FrameKind::column_bit || kind == FrameKind::column_bit_inverse;
  }
  bool rows() const noexcept { return kind == FrameKind::row_bit || kind == FrameKind::row_bit_inverse; }

  /// "white", "black", "col03", "col03inv", "row07", ...
  std::string name() const;
  static FrameRole parse(std::string_view name);

  friend bool operator==(const FrameRole&, const FrameRole&) = default;
};

/// Description of a sequence without its pixels; enough to decode captures.
struct SequenceMeta {
  int res_x = 0;
  int res_y = 0;
  Scheme scheme = Scheme::gray;
  int columns = 0;
  int rows = 0;

  std::size_t frame_count() const noexcept { return 2 + 2 * static_cast<std::size_t>(columns + rows); }
  std::vector<FrameRole> roles() const;
  std::size_t index_of(const FrameRole& role) const;

  friend bool operator==(const SequenceMeta&, const SequenceMeta&) = default;
};

/// One projector frame. Stripe frames are stored as their 1-D profile since
/// column frames are constant down each column and row frames along each row.
class PatternImage {
 public:
  static constexpr std::uint8_t lo = 0;
  static constexpr std::uint8_t hi = 255;

  PatternImage(FrameRole role, int width, int height, std::vector<std::uint8_t> profile);

  const FrameRole& role() const noexcept { return role_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  bool is_hi(int x, int y) const;
  std::uint8_t level(int x, int y) const { return is_hi(x, y) ? hi : lo; }
  GrayImage render() const;

 private:
  FrameRole role_;
  int width_;
  int height_;
  std::vector<std::uint8_t> profile_;  // one flag per column (or row); empty for solid frames
};

/// Immutable ordered frame stack: white, black, then each column bit MSB..LSB
/// followed by its inverse, then the row bits likewise.
class PatternSequence {
 public:
  PatternSequence(SequenceMeta meta, std::vector<PatternImage> frames);

  const SequenceMeta& meta() const noexcept { return meta_; }
  std::span<const PatternImage> frames() const noexcept { return frames_; }
  const PatternImage& frame(const FrameRole& role) const { return frames_[meta_.index_of(role)]; }

 private:
  SequenceMeta meta_;
  std::vector<PatternImage> frames_;
};

PatternSequence generate_sequence(long res_x, long res_y, Scheme scheme = Scheme::gray);

/// pat_<index:02>_<role>.pgm per frame plus sequence.json manifest.
std::string pattern_filename(std::size_t index, const FrameRole& role);
void write_sequence(const PatternSequence& sequence, const std::filesystem::path& dir);
SequenceMeta read_sequence_manifest(const std::filesystem::path& manifest);

/// Reads a sequence written by write_sequence, checking every frame against
/// the stripe structure its role requires.
PatternSequence load_sequence(const std::filesystem::path& dir);

}  // namespace sls
