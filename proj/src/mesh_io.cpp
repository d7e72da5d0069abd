#include <algorithm>
#include <atomic>
#include <unistd.h>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include "scancad/error.hpp"
#include "scancad/io.hpp"

namespace scancad {

namespace {

enum class PlyFormat { kAscii, kBinaryLittle, kBinaryBig };

enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

PlyType parse_ply_type(const std::string& name, const fs::path& path) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUInt8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUInt16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUInt32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  throw Error(ErrorCode::kMeshParseError, path.string() + ": unknown PLY type '" + name + "'");
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUInt8: return 1;
    case PlyType::kInt16:
    case PlyType::kUInt16: return 2;
    case PlyType::kInt32:
    case PlyType::kUInt32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

class PlyReader {
 public:
  PlyReader(std::istream& in, PlyFormat format, const fs::path& path) : in_(in), format_(format), path_(path) {}

  double read(PlyType type) {
    if (format_ == PlyFormat::kAscii) {
      double v = 0.0;
      if (!(in_ >> v)) fail("truncated ascii body");
      return v;
    }
    unsigned char buf[8];
    const std::size_t n = type_size(type);
    if (!in_.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n))) fail("truncated binary body");
    const bool swap = (format_ == PlyFormat::kBinaryBig) == (std::endian::native == std::endian::little);
    if (swap) std::reverse(buf, buf + n);
    switch (type) {
      case PlyType::kInt8: return static_cast<std::int8_t>(buf[0]);
      case PlyType::kUInt8: return buf[0];
      case PlyType::kInt16: return load<std::int16_t>(buf);
      case PlyType::kUInt16: return load<std::uint16_t>(buf);
      case PlyType::kInt32: return load<std::int32_t>(buf);
      case PlyType::kUInt32: return load<std::uint32_t>(buf);
      case PlyType::kFloat32: return load<float>(buf);
      case PlyType::kFloat64: return load<double>(buf);
    }
    return 0.0;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kMeshParseError, path_.string() + ": " + what);
  }

 private:
  template <typename T>
  static T load(const unsigned char* buf) {
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  std::istream& in_;
  PlyFormat format_;
  const fs::path& path_;
};

void fan_triangulate(const std::vector<std::uint32_t>& poly, std::vector<Face>& faces) {
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    if (poly[0] == poly[i] || poly[i] == poly[i + 1] || poly[0] == poly[i + 1]) continue;
    faces.push_back({poly[0], poly[i], poly[i + 1]});
  }
}

void check_indices(const TriMesh& mesh, const fs::path& path) {
  for (const auto& f : mesh.faces) {
    for (auto idx : f) {
      if (idx >= mesh.vertices.size()) {
        throw Error(ErrorCode::kMeshParseError, path.string() + ": face index out of range");
      }
    }
  }
}

std::string lower_ext(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

TriMesh read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingAsset, path.string());

  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw Error(ErrorCode::kMeshParseError, path.string() + ": missing ply magic");

  std::optional<PlyFormat> format;
  std::vector<PlyElement> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string f;
      ls >> f;
      if (f == "ascii") format = PlyFormat::kAscii;
      else if (f == "binary_little_endian") format = PlyFormat::kBinaryLittle;
      else if (f == "binary_big_endian") format = PlyFormat::kBinaryBig;
      else throw Error(ErrorCode::kMeshParseError, path.string() + ": unknown format " + f);
    } else if (key == "element") {
      PlyElement el;
      ls >> el.name >> el.count;
      elements.push_back(el);
    } else if (key == "property") {
      if (elements.empty()) throw Error(ErrorCode::kMeshParseError, path.string() + ": property before element");
      PlyProperty prop;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> prop.name;
        prop.is_list = true;
        prop.count_type = parse_ply_type(count_type, path);
        prop.type = parse_ply_type(item_type, path);
      } else {
        prop.type = parse_ply_type(type, path);
        ls >> prop.name;
      }
      elements.back().properties.push_back(prop);
    } else if (key == "end_header") {
      break;
    }
  }
  if (!format) throw Error(ErrorCode::kMeshParseError, path.string() + ": missing format line");

  PlyReader reader(in, *format, path);
  TriMesh mesh;
  bool has_instance = false;
  std::vector<std::uint32_t> poly;
  for (const auto& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    if (is_vertex) {
      mesh.vertices.resize(el.count, Vec3::Zero());
      has_instance = std::any_of(el.properties.begin(), el.properties.end(),
                                 [](const PlyProperty& p) { return p.name == "instance_id"; });
      if (has_instance) mesh.instance_ids.assign(el.count, -1);
    }
    for (std::size_t i = 0; i < el.count; ++i) {
      for (const auto& prop : el.properties) {
        if (prop.is_list) {
          const auto n = static_cast<std::size_t>(reader.read(prop.count_type));
          poly.resize(n);
          for (std::size_t k = 0; k < n; ++k) poly[k] = static_cast<std::uint32_t>(reader.read(prop.type));
          if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
            fan_triangulate(poly, mesh.faces);
          }
          continue;
        }
        const double v = reader.read(prop.type);
        if (!is_vertex) continue;
        if (prop.name == "x") mesh.vertices[i].x() = v;
        else if (prop.name == "y") mesh.vertices[i].y() = v;
        else if (prop.name == "z") mesh.vertices[i].z() = v;
        else if (prop.name == "instance_id") mesh.instance_ids[i] = static_cast<std::int32_t>(v);
      }
    }
  }
  check_indices(mesh, path);
  return mesh;
}

TriMesh read_obj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingAsset, path.string());
  TriMesh mesh;
  std::string line;
  std::vector<std::uint32_t> poly;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) {
        throw Error(ErrorCode::kMeshParseError, path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      }
      mesh.vertices.push_back(p);
    } else if (key == "f") {
      poly.clear();
      std::string token;
      while (ls >> token) {
        // v, v/vt, v//vn, v/vt/vn; negative indices are relative
        const long idx = std::stol(token.substr(0, token.find('/')));
        const long resolved = idx < 0 ? static_cast<long>(mesh.vertices.size()) + idx : idx - 1;
        if (resolved < 0) {
          throw Error(ErrorCode::kMeshParseError, path.string() + ":" + std::to_string(line_no) + ": bad index");
        }
        poly.push_back(static_cast<std::uint32_t>(resolved));
      }
      fan_triangulate(poly, mesh.faces);
    }
  }
  check_indices(mesh, path);
  return mesh;
}

TriMesh read_mesh(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingAsset, path.string());
  const std::string ext = lower_ext(path);
  if (ext == ".ply") return read_ply(path);
  if (ext == ".obj") return read_obj(path);
  throw Error(ErrorCode::kMeshParseError, path.string() + ": unsupported mesh extension");
}

void write_ply(const fs::path& path, const TriMesh& mesh) {
  std::ostringstream out(std::ios::binary);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (mesh.has_instance_ids()) out << "property int instance_id\n";
  out << "element face " << mesh.faces.size() << "\n";
  out << "property list uchar uint vertex_indices\nend_header\n";
  static_assert(std::endian::native == std::endian::little, "PLY writer assumes a little-endian host");
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const double xyz[3] = {mesh.vertices[i].x(), mesh.vertices[i].y(), mesh.vertices[i].z()};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    if (mesh.has_instance_ids()) out.write(reinterpret_cast<const char*>(&mesh.instance_ids[i]), 4);
  }
  for (const auto& f : mesh.faces) {
    const unsigned char n = 3;
    out.write(reinterpret_cast<const char*>(&n), 1);
    out.write(reinterpret_cast<const char*>(f.data()), 12);
  }
  write_file_atomic(path, out.str());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingAsset, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static std::atomic<unsigned long> counter{0};
  const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::kIoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace scancad
