#include "ply_io.hpp"

#include <fstream>
#include <sstream>

#include "sls/error.hpp"

namespace sls::detail {
namespace {

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
  bool has_list = false;
};

}  // namespace

PlyData read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + path.string());
  auto bad = [&](const std::string& what) { fail(ErrorCode::format, path.string() + ": " + what); };

  std::string line;
  if (!std::getline(in, line) || line != "ply") bad("missing ply magic");
  if (!std::getline(in, line) || line != "format ascii 1.0") bad("only ascii 1.0 PLY is supported");

  std::vector<Element> elements;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "element") {
      Element e;
      ls >> e.name >> e.count;
      if (!ls) bad("malformed element line");
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) bad("property before element");
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type, name;
        ls >> count_type >> item_type >> name;
        elements.back().has_list = true;
        elements.back().properties.push_back(name);
      } else {
        std::string name;
        ls >> name;
        elements.back().properties.push_back(name);
      }
    } else {
      bad("unexpected header line '" + line + "'");
    }
  }
  if (line != "end_header") bad("missing end_header");

  PlyData data;
  for (const auto& e : elements) {
    if (e.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const auto& p = e.properties[k];
        const int idx = static_cast<int>(k);
        if (p == "x") ix = idx;
        if (p == "y") iy = idx;
        if (p == "z") iz = idx;
        if (p == "red") ir = idx;
        if (p == "green") ig = idx;
        if (p == "blue") ib = idx;
      }
      if (ix < 0 || iy < 0 || iz < 0) bad("vertex element lacks x y z");
      data.has_rgb = ir >= 0 && ig >= 0 && ib >= 0;
      std::vector<double> values(e.properties.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        if (!std::getline(in, line)) bad("truncated vertex list");
        std::istringstream ls(line);
        for (auto& v : values)
          if (!(ls >> v)) bad("malformed vertex line");
        data.xyz.push_back({values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                            values[static_cast<std::size_t>(iz)]});
        if (data.has_rgb)
          data.rgb.push_back({static_cast<std::uint8_t>(values[static_cast<std::size_t>(ir)]),
                              static_cast<std::uint8_t>(values[static_cast<std::size_t>(ig)]),
                              static_cast<std::uint8_t>(values[static_cast<std::size_t>(ib)])});
      }
    } else if (e.name == "face") {
      for (std::size_t i = 0; i < e.count; ++i) {
        if (!std::getline(in, line)) bad("truncated face list");
        std::istringstream ls(line);
        std::size_t n = 0;
        if (!(ls >> n)) bad("malformed face line");
        std::vector<int> face(n);
        for (auto& v : face)
          if (!(ls >> v)) bad("malformed face line");
        for (int v : face)
          if (v < 0 || static_cast<std::size_t>(v) >= data.xyz.size()) bad("face index out of range");
        data.faces.push_back(std::move(face));
      }
    } else {
      for (std::size_t i = 0; i < e.count; ++i)
        if (!std::getline(in, line)) bad("truncated element " + e.name);
    }
  }
  return data;
}

}  // namespace sls::detail
