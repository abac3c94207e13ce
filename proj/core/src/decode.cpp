#include "sls/decode.hpp"

#include <cstring>
#include <fstream>

#include "sls/parallel.hpp"

namespace sls {

ShadowMask shadow_mask(const GrayImage& white, const GrayImage& black, int threshold) {
  if (!white.same_shape(black)) fail(ErrorCode::invalid_argument, "white and black images differ in size");
  if (threshold < 0) fail(ErrorCode::invalid_argument, "shadow threshold must be non-negative");
  ShadowMask mask{white.width(), white.height(), threshold, std::vector<std::uint8_t>(white.size())};
  for (std::size_t i = 0; i < white.size(); ++i)
    mask.valid[i] = static_cast<int>(white.data()[i]) - static_cast<int>(black.data()[i]) > threshold;
  return mask;
}

Bit classify_bit(int direct, int inverse, int min_contrast) noexcept {
  if (direct - inverse > min_contrast) return Bit::one;
  if (inverse - direct > min_contrast) return Bit::zero;
  return Bit::undecodable;
}

DecodedMap decode_map(std::span<const GrayImage> stack, const SequenceMeta& meta, const ShadowMask& mask,
                      int min_contrast) {
  if (stack.size() != meta.frame_count())
    fail(ErrorCode::invalid_argument, "stack length " + std::to_string(stack.size()) + " does not match sequence (" +
                                          std::to_string(meta.frame_count()) + " frames)");
  if (min_contrast < 0) fail(ErrorCode::invalid_argument, "min contrast must be non-negative");
  const int w = mask.width;
  const int h = mask.height;
  for (const auto& img : stack)
    if (img.width() != w || img.height() != h) fail(ErrorCode::invalid_argument, "capture size differs from mask");

  DecodedMap map;
  map.width = w;
  map.height = h;
  map.sequence = meta;
  map.coords.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), ProjectorPixel{-1, -1});
  map.status.assign(map.coords.size(), DecodeStatus::shadow);

  // Reads `bits` direct/inverse pairs starting at frame `first`; false when
  // any bit is undecodable.
  auto read_code = [&](std::size_t first, int bits, int col, int row, std::uint32_t& code) {
    code = 0;
    for (int k = 0; k < bits; ++k) {
      const int direct = stack[first + 2 * static_cast<std::size_t>(k)].at(col, row);
      const int inverse = stack[first + 2 * static_cast<std::size_t>(k) + 1].at(col, row);
      const Bit b = classify_bit(direct, inverse, min_contrast);
      if (b == Bit::undecodable) return false;
      code = (code << 1) | static_cast<std::uint32_t>(b == Bit::one);
    }
    return true;
  };

  const std::size_t col_first = meta.index_of({FrameKind::column_bit, 0});
  const std::size_t row_first = 2 + 2 * static_cast<std::size_t>(meta.columns);

  parallel_for(h, [&](int row_begin, int row_end) {
    for (int row = row_begin; row < row_end; ++row) {
      for (int col = 0; col < w; ++col) {
        const std::size_t idx = map.index(col, row);
        if (!mask.is_valid(col, row)) continue;
        std::uint32_t xcode = 0;
        std::uint32_t ycode = 0;
        if (!read_code(col_first, meta.columns, col, row, xcode) ||
            !read_code(row_first, meta.rows, col, row, ycode)) {
          map.status[idx] = DecodeStatus::low_contrast;
          continue;
        }
        const std::uint32_t x = meta.columns > 0 ? decode_index(xcode, meta.columns, meta.scheme) : 0;
        const std::uint32_t y = meta.rows > 0 ? decode_index(ycode, meta.rows, meta.scheme) : 0;
        if (x >= static_cast<std::uint32_t>(meta.res_x) || y >= static_cast<std::uint32_t>(meta.res_y)) {
          map.status[idx] = DecodeStatus::out_of_range;
          continue;
        }
        map.coords[idx] = {static_cast<int>(x), static_cast<int>(y)};
        map.status[idx] = DecodeStatus::ok;
      }
    }
  });
  return map;
}

DecodedMap decode_camera(std::span<const GrayImage> stack, const SequenceMeta& meta, int shadow_threshold,
                         int min_contrast) {
  if (stack.size() != meta.frame_count())
    fail(ErrorCode::invalid_argument, "stack length " + std::to_string(stack.size()) + " does not match sequence (" +
                                          std::to_string(meta.frame_count()) + " frames)");
  const ShadowMask mask = shadow_mask(stack[0], stack[1], shadow_threshold);
  return decode_map(stack, meta, mask, min_contrast);
}

CorrespondenceMap build_correspondences(std::span<const DecodedMap> maps) {
  if (maps.size() < 2) fail(ErrorCode::invalid_argument, "correspondences need at least two decoded maps");
  const SequenceMeta& meta = maps[0].sequence;
  for (const auto& m : maps)
    if (m.sequence.res_x != meta.res_x || m.sequence.res_y != meta.res_y)
      fail(ErrorCode::invalid_argument, "decoded maps disagree on projector resolution");

  CorrespondenceMap out;
  out.res_x = meta.res_x;
  out.res_y = meta.res_y;
  out.camera_count = maps.size();

  std::map<ProjectorPixel, std::vector<std::vector<CameraPixel>>> all;
  for (std::size_t c = 0; c < maps.size(); ++c) {
    const DecodedMap& m = maps[c];
    for (int row = 0; row < m.height; ++row) {
      for (int col = 0; col < m.width; ++col) {
        if (m.status_at(col, row) != DecodeStatus::ok) continue;
        auto& lists = all[m.at(col, row)];
        if (lists.empty()) lists.resize(maps.size());
        lists[c].push_back({col, row});
      }
    }
  }
  for (auto& [key, lists] : all) {
    bool everywhere = true;
    for (const auto& l : lists) everywhere = everywhere && !l.empty();
    if (everywhere) out.entries.emplace(key, std::move(lists));
  }
  return out;
}

void write_decoded_map(const std::filesystem::path& dir, const std::string& stem, const DecodedMap& map) {
  std::filesystem::create_directories(dir);
  Image16 xs(map.width, map.height, 65535);
  Image16 ys(map.width, map.height, 65535);
  GrayImage st(map.width, map.height);
  for (int row = 0; row < map.height; ++row) {
    for (int col = 0; col < map.width; ++col) {
      const auto s = map.status_at(col, row);
      st.at(col, row) = static_cast<std::uint8_t>(s);
      if (s == DecodeStatus::ok) {
        xs.at(col, row) = static_cast<std::uint16_t>(map.at(col, row).x);
        ys.at(col, row) = static_cast<std::uint16_t>(map.at(col, row).y);
      }
    }
  }
  write_pgm16(dir / (stem + "_x.pgm"), xs);
  write_pgm16(dir / (stem + "_y.pgm"), ys);
  write_pgm(dir / (stem + "_status.pgm"), st);
}

namespace {

constexpr char corr_magic[8] = {'S', 'L', 'S', 'C', 'O', 'R', 'R', '1'};

void put_u32(std::vector<char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::vector<unsigned char> data, std::filesystem::path path) : data_(std::move(data)), path_(std::move(path)) {}

  std::uint32_t u32() {
    if (pos_ + 4 > data_.size()) fail(ErrorCode::format, "truncated correspondence file: " + path_.string());
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::vector<unsigned char> data_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_correspondences(const std::filesystem::path& path, const CorrespondenceMap& corrs) {
  std::vector<char> buf(corr_magic, corr_magic + 8);
  put_u32(buf, 1);
  put_u32(buf, static_cast<std::uint32_t>(corrs.camera_count));
  put_u32(buf, static_cast<std::uint32_t>(corrs.res_x));
  put_u32(buf, static_cast<std::uint32_t>(corrs.res_y));
  put_u32(buf, static_cast<std::uint32_t>(corrs.entries.size()));
  for (const auto& [key, lists] : corrs.entries) {
    put_u32(buf, static_cast<std::uint32_t>(key.x));
    put_u32(buf, static_cast<std::uint32_t>(key.y));
    for (const auto& l : lists) {
      put_u32(buf, static_cast<std::uint32_t>(l.size()));
      for (const auto& p : l) {
        put_u32(buf, static_cast<std::uint32_t>(p.col));
        put_u32(buf, static_cast<std::uint32_t>(p.row));
      }
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot open for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

CorrespondenceMap read_correspondences(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 8 || std::memcmp(data.data(), corr_magic, 8) != 0)
    fail(ErrorCode::format, "not a correspondence file: " + path.string());
  Reader r(std::move(data), path);
  r.skip(8);
  if (r.u32() != 1) fail(ErrorCode::format, "unsupported correspondence file version");
  CorrespondenceMap out;
  out.camera_count = r.u32();
  out.res_x = static_cast<int>(r.u32());
  out.res_y = static_cast<int>(r.u32());
  const std::uint32_t keys = r.u32();
  for (std::uint32_t k = 0; k < keys; ++k) {
    ProjectorPixel key{static_cast<int>(r.u32()), static_cast<int>(r.u32())};
    if (key.x >= out.res_x || key.y >= out.res_y) fail(ErrorCode::format, "correspondence key out of range");
    std::vector<std::vector<CameraPixel>> lists(out.camera_count);
    for (auto& l : lists) {
      const std::uint32_t n = r.u32();
      if (static_cast<std::size_t>(n) * 8 > r.remaining()) fail(ErrorCode::format, "truncated correspondence file");
      l.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) l.push_back({static_cast<int>(r.u32()), static_cast<int>(r.u32())});
    }
    out.entries.emplace(key, std::move(lists));
  }
  if (!r.at_end()) fail(ErrorCode::format, "trailing bytes in correspondence file");
  return out;
}

}  // namespace sls
