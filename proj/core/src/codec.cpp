#include "sls/codec.hpp"

#include <bit>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "json_io.hpp"

namespace sls {

CodeWord::CodeWord(std::uint32_t value, int width) : value_(value), width_(width) {
  if (width < 1 || width > max_width) fail(ErrorCode::invalid_argument, "code word width out of range");
  if (value >> width) fail(ErrorCode::invalid_argument, "value not representable in code word width");
}

CodeWord CodeWord::from_bits(std::string_view bits) {
  if (bits.empty() || bits.size() > static_cast<std::size_t>(max_width))
    fail(ErrorCode::invalid_argument, "bit string length out of range");
  std::uint32_t value = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') fail(ErrorCode::invalid_argument, "bit string must contain only 0 and 1");
    value = (value << 1) | static_cast<std::uint32_t>(c == '1');
  }
  return {value, static_cast<int>(bits.size())};
}

bool CodeWord::bit(int k) const {
  if (k < 0 || k >= width_) fail(ErrorCode::invalid_argument, "bit index out of range");
  return (value_ >> (width_ - 1 - k)) & 1U;
}

std::string CodeWord::to_string() const {
  std::string s(static_cast<std::size_t>(width_), '0');
  for (int k = 0; k < width_; ++k)
    if (bit(k)) s[static_cast<std::size_t>(k)] = '1';
  return s;
}

CodeWord binary_to_gray(const CodeWord& binary) {
  std::uint32_t gray = 0;
  bool previous = false;
  for (int k = 0; k < binary.width(); ++k) {
    const bool current = binary.bit(k);
    gray = (gray << 1) | static_cast<std::uint32_t>(k == 0 ? current : current != previous);
    previous = current;
  }
  return {gray, binary.width()};
}

CodeWord gray_to_binary(const CodeWord& gray) {
  std::uint32_t binary = 0;
  bool previous = false;
  for (int k = 0; k < gray.width(); ++k) {
    const bool out = k == 0 ? gray.bit(k) : gray.bit(k) != previous;
    binary = (binary << 1) | static_cast<std::uint32_t>(out);
    previous = out;
  }
  return {binary, gray.width()};
}

PatternCounts pattern_counts(long res_x, long res_y) {
  if (res_x < 1 || res_y < 1) fail(ErrorCode::invalid_argument, "projector resolution must be positive");
  if (res_x > (1L << CodeWord::max_width) || res_y > (1L << CodeWord::max_width))
    fail(ErrorCode::invalid_argument, "projector resolution too large");
  auto bits = [](long n) { return static_cast<int>(std::bit_width(static_cast<unsigned long>(n - 1))); };
  return {bits(res_x), bits(res_y)};
}

std::string_view to_string(Scheme scheme) noexcept { return scheme == Scheme::gray ? "gray" : "binary"; }

Scheme parse_scheme(std::string_view text) {
  if (text == "gray") return Scheme::gray;
  if (text == "binary") return Scheme::binary;
  fail(ErrorCode::invalid_argument, "unknown scheme '" + std::string(text) + "'");
}

std::uint32_t encode_index(std::uint32_t index, int width, Scheme scheme) {
  const CodeWord word(index, width);
  return scheme == Scheme::gray ? binary_to_gray(word).value() : word.value();
}

std::uint32_t decode_index(std::uint32_t code, int width, Scheme scheme) {
  const CodeWord word(code, width);
  return scheme == Scheme::gray ? gray_to_binary(word).value() : word.value();
}

std::string FrameRole::name() const {
  char buf[16];
  switch (kind) {
    case FrameKind::solid_white: return "white";
    case FrameKind::solid_black: return "black";
    case FrameKind::column_bit: std::snprintf(buf, sizeof buf, "col%02d", bit); break;
    case FrameKind::column_bit_inverse: std::snprintf(buf, sizeof buf, "col%02dinv", bit); break;
    case FrameKind::row_bit: std::snprintf(buf, sizeof buf, "row%02d", bit); break;
    case FrameKind::row_bit_inverse: std::snprintf(buf, sizeof buf, "row%02dinv", bit); break;
  }
  return buf;
}

FrameRole FrameRole::parse(std::string_view name) {
  if (name == "white") return {FrameKind::solid_white, 0};
  if (name == "black") return {FrameKind::solid_black, 0};
  const bool inv = name.ends_with("inv");
  std::string_view body = inv ? name.substr(0, name.size() - 3) : name;
  if (body.size() == 5 && (body.starts_with("col") || body.starts_with("row")) &&
      std::isdigit(static_cast<unsigned char>(body[3])) && std::isdigit(static_cast<unsigned char>(body[4]))) {
    const int bit = (body[3] - '0') * 10 + (body[4] - '0');
    if (body.starts_with("col")) return {inv ? FrameKind::column_bit_inverse : FrameKind::column_bit, bit};
    return {inv ? FrameKind::row_bit_inverse : FrameKind::row_bit, bit};
  }
  fail(ErrorCode::format, "unknown frame role '" + std::string(name) + "'");
}

std::vector<FrameRole> SequenceMeta::roles() const {
  std::vector<FrameRole> out;
  out.reserve(frame_count());
  out.push_back({FrameKind::solid_white, 0});
  out.push_back({FrameKind::solid_black, 0});
  for (int k = 0; k < columns; ++k) {
    out.push_back({FrameKind::column_bit, k});
    out.push_back({FrameKind::column_bit_inverse, k});
  }
  for (int k = 0; k < rows; ++k) {
    out.push_back({FrameKind::row_bit, k});
    out.push_back({FrameKind::row_bit_inverse, k});
  }
  return out;
}

std::size_t SequenceMeta::index_of(const FrameRole& role) const {
  const auto k = static_cast<std::size_t>(role.bit);
  const auto cols = static_cast<std::size_t>(columns);
  switch (role.kind) {
    case FrameKind::solid_white: return 0;
    case FrameKind::solid_black: return 1;
    case FrameKind::column_bit:
    case FrameKind::column_bit_inverse:
      if (role.bit < 0 || role.bit >= columns) break;
      return 2 + 2 * k + (role.inverse() ? 1 : 0);
    case FrameKind::row_bit:
    case FrameKind::row_bit_inverse:
      if (role.bit < 0 || role.bit >= rows) break;
      return 2 + 2 * cols + 2 * k + (role.inverse() ? 1 : 0);
  }
  fail(ErrorCode::invalid_argument, "frame role " + role.name() + " not in sequence");
}

PatternImage::PatternImage(FrameRole role, int width, int height, std::vector<std::uint8_t> profile)
    : role_(role), width_(width), height_(height), profile_(std::move(profile)) {
  if (width < 1 || height < 1) fail(ErrorCode::invalid_argument, "pattern size must be positive");
  std::size_t expected = 0;
  if (role.columns()) expected = static_cast<std::size_t>(width);
  if (role.rows()) expected = static_cast<std::size_t>(height);
  if (profile_.size() != expected) fail(ErrorCode::invalid_argument, "pattern profile length mismatch");
}

bool PatternImage::is_hi(int x, int y) const {
  switch (role_.kind) {
    case FrameKind::solid_white: return true;
    case FrameKind::solid_black: return false;
    case FrameKind::column_bit:
    case FrameKind::column_bit_inverse: return profile_[static_cast<std::size_t>(x)] != 0;
    case FrameKind::row_bit:
    case FrameKind::row_bit_inverse: return profile_[static_cast<std::size_t>(y)] != 0;
  }
  return false;
}

GrayImage PatternImage::render() const {
  GrayImage img(width_, height_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) img.at(x, y) = level(x, y);
  return img;
}

PatternSequence::PatternSequence(SequenceMeta meta, std::vector<PatternImage> frames)
    : meta_(meta), frames_(std::move(frames)) {
  if (frames_.size() != meta_.frame_count()) fail(ErrorCode::invalid_argument, "frame count does not match sequence");
  const auto roles = meta_.roles();
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    if (!(frames_[i].role() == roles[i])) fail(ErrorCode::invalid_argument, "frame order does not match sequence");
    if (frames_[i].width() != meta_.res_x || frames_[i].height() != meta_.res_y)
      fail(ErrorCode::invalid_argument, "frame size does not match projector resolution");
  }
}

namespace {

std::vector<std::uint8_t> stripe_profile(int length, int width, int bit, bool inverse, Scheme scheme) {
  std::vector<std::uint8_t> profile(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    const CodeWord code(encode_index(static_cast<std::uint32_t>(i), width, scheme), width);
    profile[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(code.bit(bit) != inverse);
  }
  return profile;
}

}  // namespace

PatternSequence generate_sequence(long res_x, long res_y, Scheme scheme) {
  if (res_x < 2 || res_y < 2) fail(ErrorCode::invalid_argument, "projector resolution must be at least 2x2");
  const PatternCounts counts = pattern_counts(res_x, res_y);
  SequenceMeta meta{static_cast<int>(res_x), static_cast<int>(res_y), scheme, counts.columns, counts.rows};
  std::vector<PatternImage> frames;
  frames.reserve(meta.frame_count());
  for (const FrameRole& role : meta.roles()) {
    std::vector<std::uint8_t> profile;
    if (role.columns()) profile = stripe_profile(meta.res_x, meta.columns, role.bit, role.inverse(), scheme);
    if (role.rows()) profile = stripe_profile(meta.res_y, meta.rows, role.bit, role.inverse(), scheme);
    frames.emplace_back(role, meta.res_x, meta.res_y, std::move(profile));
  }
  return {meta, std::move(frames)};
}

std::string pattern_filename(std::size_t index, const FrameRole& role) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "pat_%02zu_%s.pgm", index, role.name().c_str());
  return buf;
}

namespace detail {

json meta_to_json(const SequenceMeta& meta) {
  json roles = json::array();
  for (const auto& r : meta.roles()) roles.push_back(r.name());
  return json{{"resolution", {meta.res_x, meta.res_y}},
              {"scheme", std::string(to_string(meta.scheme))},
              {"column_patterns", meta.columns},
              {"row_patterns", meta.rows},
              {"frame_count", meta.frame_count()},
              {"bit_order", "msb-first"},
              {"frames", roles}};
}

SequenceMeta meta_from_json(const json& j) {
  const auto res = get_field<std::vector<int>>(j, "resolution");
  if (res.size() != 2) fail(ErrorCode::format, "resolution must have two entries");
  SequenceMeta meta;
  meta.res_x = res[0];
  meta.res_y = res[1];
  meta.scheme = parse_scheme(get_field<std::string>(j, "scheme"));
  const PatternCounts counts = pattern_counts(meta.res_x, meta.res_y);
  meta.columns = counts.columns;
  meta.rows = counts.rows;
  if (get_field<int>(j, "column_patterns") != meta.columns || get_field<int>(j, "row_patterns") != meta.rows)
    fail(ErrorCode::format, "pattern counts inconsistent with resolution");
  if (j.contains("frames")) {
    const auto names = get_field<std::vector<std::string>>(j, "frames");
    const auto roles = meta.roles();
    if (names.size() != roles.size()) fail(ErrorCode::format, "manifest frame list length mismatch");
    for (std::size_t i = 0; i < names.size(); ++i)
      if (!(FrameRole::parse(names[i]) == roles[i])) fail(ErrorCode::format, "manifest frame order mismatch");
  }
  return meta;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::format, "invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

}  // namespace detail

void write_sequence(const PatternSequence& sequence, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto frames = sequence.frames();
  detail::json files = detail::json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string name = pattern_filename(i, frames[i].role());
    write_pgm(dir / name, frames[i].render());
    files.push_back(name);
  }
  auto manifest = detail::meta_to_json(sequence.meta());
  manifest["files"] = files;
  detail::write_json_file(dir / "sequence.json", manifest);
}

SequenceMeta read_sequence_manifest(const std::filesystem::path& manifest) {
  return detail::meta_from_json(detail::read_json_file(manifest));
}

PatternSequence load_sequence(const std::filesystem::path& dir) {
  const SequenceMeta meta = read_sequence_manifest(dir / "sequence.json");
  std::vector<PatternImage> frames;
  const auto roles = meta.roles();
  for (std::size_t i = 0; i < roles.size(); ++i) {
    const FrameRole& role = roles[i];
    const GrayImage img = read_pgm(dir / pattern_filename(i, role));
    if (img.width() != meta.res_x || img.height() != meta.res_y)
      fail(ErrorCode::format, "pattern frame size mismatch: " + role.name());
    auto binary = [&](int x, int y) {
      const auto v = img.at(x, y);
      if (v != PatternImage::lo && v != PatternImage::hi) fail(ErrorCode::format, "pattern frame is not binary");
      return static_cast<std::uint8_t>(v == PatternImage::hi);
    };
    std::vector<std::uint8_t> profile;
    if (role.columns()) {
      for (int x = 0; x < meta.res_x; ++x) profile.push_back(binary(x, 0));
    } else if (role.rows()) {
      for (int y = 0; y < meta.res_y; ++y) profile.push_back(binary(0, y));
    }
    PatternImage frame(role, meta.res_x, meta.res_y, std::move(profile));
    for (int y = 0; y < meta.res_y; ++y)
      for (int x = 0; x < meta.res_x; ++x)
        if (binary(x, y) != static_cast<std::uint8_t>(frame.is_hi(x, y)))
          fail(ErrorCode::format, "pattern frame violates stripe structure: " + role.name());
    frames.push_back(std::move(frame));
  }
  return {meta, std::move(frames)};
}

}  // namespace sls
