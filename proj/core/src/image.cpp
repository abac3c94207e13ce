#include "sls/image.hpp"

#include <cctype>
#include <fstream>
#include <string>

namespace sls {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot open for writing: " + path.string());
  return out;
}

int read_header_int(std::istream& in, const std::filesystem::path& path) {
  // Skips whitespace and '#' comments between header tokens.
  int c = in.peek();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      std::string discard;
      std::getline(in, discard);
    } else {
      in.get();
    }
    c = in.peek();
  }
  int value = 0;
  if (!(in >> value)) fail(ErrorCode::format, "malformed PGM header: " + path.string());
  return value;
}

struct PgmHeader {
  int width;
  int height;
  int maxval;
};

PgmHeader read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') fail(ErrorCode::format, "not a binary PGM: " + path.string());
  PgmHeader h{};
  h.width = read_header_int(in, path);
  h.height = read_header_int(in, path);
  h.maxval = read_header_int(in, path);
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535)
    fail(ErrorCode::format, "invalid PGM dimensions or maxval: " + path.string());
  // Exactly one whitespace byte separates the header from the raster.
  in.get();
  return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + path.string());
  return in;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data().data()), static_cast<std::streamsize>(image.size()));
  if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

void write_pgm16(const std::filesystem::path& path, const Image16& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
  std::vector<char> raster(image.size() * 2);
  for (std::size_t i = 0; i < image.size(); ++i) {
    raster[2 * i] = static_cast<char>(image.data()[i] >> 8);
    raster[2 * i + 1] = static_cast<char>(image.data()[i] & 0xFF);
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const PgmHeader h = read_header(in, path);
  if (h.maxval > 255) fail(ErrorCode::format, "expected 8-bit PGM: " + path.string());
  GrayImage image(h.width, h.height);
  in.read(reinterpret_cast<char*>(image.data().data()), static_cast<std::streamsize>(image.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.size()))
    fail(ErrorCode::format, "truncated PGM raster: " + path.string());
  return image;
}

Image16 read_pgm16(const std::filesystem::path& path) {
  auto in = open_in(path);
  const PgmHeader h = read_header(in, path);
  if (h.maxval <= 255) fail(ErrorCode::format, "expected 16-bit PGM: " + path.string());
  Image16 image(h.width, h.height);
  std::vector<unsigned char> raster(image.size() * 2);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.size()))
    fail(ErrorCode::format, "truncated PGM raster: " + path.string());
  for (std::size_t i = 0; i < image.size(); ++i)
    image.data()[i] = static_cast<std::uint16_t>((raster[2 * i] << 8) | raster[2 * i + 1]);
  return image;
}

}  // namespace sls
