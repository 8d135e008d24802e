#include <posekit/mesh_io.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace posekit {

namespace {

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

bool parseScalar(const std::string& name, Scalar& out) {
  static const std::pair<const char*, Scalar> table[] = {
      {"char", Scalar::Int8},     {"int8", Scalar::Int8},       {"uchar", Scalar::UInt8},
      {"uint8", Scalar::UInt8},   {"short", Scalar::Int16},     {"int16", Scalar::Int16},
      {"ushort", Scalar::UInt16}, {"uint16", Scalar::UInt16},   {"int", Scalar::Int32},
      {"int32", Scalar::Int32},   {"uint", Scalar::UInt32},     {"uint32", Scalar::UInt32},
      {"float", Scalar::Float32}, {"float32", Scalar::Float32}, {"double", Scalar::Float64},
      {"float64", Scalar::Float64}};
  for (const auto& [n, s] : table)
    if (name == n) {
      out = s;
      return true;
    }
  return false;
}

struct Property {
  std::string name;
  Scalar type = Scalar::Float32;
  bool is_list = false;
  Scalar count_type = Scalar::UInt8;
};

struct Element {
  std::string name;
  size_t count = 0;
  std::vector<Property> props;
};

template <typename T>
T readRaw(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

class ValueReader {
 public:
  ValueReader(std::istream& in, bool binary, std::string where) : in_(in), binary_(binary), where_(std::move(where)) {}

  double read(Scalar s, const std::string& element) {
    double v = 0.0;
    if (binary_) {
      switch (s) {
        case Scalar::Int8: v = readRaw<std::int8_t>(in_); break;
        case Scalar::UInt8: v = readRaw<std::uint8_t>(in_); break;
        case Scalar::Int16: v = readRaw<std::int16_t>(in_); break;
        case Scalar::UInt16: v = readRaw<std::uint16_t>(in_); break;
        case Scalar::Int32: v = readRaw<std::int32_t>(in_); break;
        case Scalar::UInt32: v = readRaw<std::uint32_t>(in_); break;
        case Scalar::Float32: v = readRaw<float>(in_); break;
        case Scalar::Float64: v = readRaw<double>(in_); break;
      }
    } else {
      in_ >> v;
    }
    if (!in_) throw Error(where_ + ": truncated or malformed " + element + " data");
    return v;
  }

 private:
  std::istream& in_;
  bool binary_;
  std::string where_;
};

bool littleEndianHost() {
  const std::uint16_t probe = 1;
  std::uint8_t first;
  std::memcpy(&first, &probe, 1);
  return first == 1;
}

}  // namespace

TriangleMesh loadPly(const std::filesystem::path& path, double scale) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open PLY file " + where);

  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw Error(where + ": missing 'ply' magic");
  bool binary = false;
  bool have_format = false;
  std::vector<Element> elements;
  while (true) {
    if (!std::getline(in, line)) throw Error(where + ": header has no end_header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw Error(where + ": unsupported PLY format '" + fmt + "'");
      }
      have_format = true;
    } else if (word == "element") {
      Element e;
      ls >> e.name >> e.count;
      if (!ls) throw Error(where + ": malformed element line '" + line + "'");
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) throw Error(where + ": property before any element");
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string ct, vt;
        ls >> ct >> vt >> p.name;
        p.is_list = true;
        if (!parseScalar(ct, p.count_type) || !parseScalar(vt, p.type))
          throw Error(where + ": unsupported list type in element '" + elements.back().name + "'");
      } else {
        ls >> p.name;
        if (!parseScalar(type, p.type))
          throw Error(where + ": unsupported property type '" + type + "' in element '" + elements.back().name + "'");
      }
      elements.back().props.push_back(p);
    } else {
      throw Error(where + ": unknown header keyword '" + word + "'");
    }
  }
  if (!have_format) throw Error(where + ": header has no format line");
  if (binary && !littleEndianHost()) throw Error(where + ": binary PLY requires a little-endian host");

  TriangleMesh mesh;
  ValueReader reader(in, binary, where);
  bool saw_vertex = false;
  for (const auto& e : elements) {
    if (e.name == "vertex") {
      saw_vertex = true;
      int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
      for (size_t k = 0; k < e.props.size(); ++k) {
        const auto& n = e.props[k].name;
        const int ki = static_cast<int>(k);
        if (n == "x") ix = ki;
        if (n == "y") iy = ki;
        if (n == "z") iz = ki;
        if (n == "red" || n == "r") ir = ki;
        if (n == "green" || n == "g") ig = ki;
        if (n == "blue" || n == "b") ib = ki;
        if (e.props[k].is_list) throw Error(where + ": list property '" + n + "' in element 'vertex'");
      }
      if (ix < 0 || iy < 0 || iz < 0) throw Error(where + ": element 'vertex' lacks x, y or z");
      const bool colors = ir >= 0 && ig >= 0 && ib >= 0;
      std::vector<double> row(e.props.size());
      mesh.vertices.reserve(e.count);
      for (size_t i = 0; i < e.count; ++i) {
        for (size_t k = 0; k < e.props.size(); ++k) row[k] = reader.read(e.props[k].type, "vertex");
        mesh.vertices.emplace_back(row[static_cast<size_t>(ix)] * scale, row[static_cast<size_t>(iy)] * scale,
                                   row[static_cast<size_t>(iz)] * scale);
        if (colors) {
          auto channel = [&](int k) {
            const Scalar t = e.props[static_cast<size_t>(k)].type;
            const double v = row[static_cast<size_t>(k)];
            if (t == Scalar::Float32 || t == Scalar::Float64) return v;
            if (t == Scalar::UInt16) return v / 65535.0;
            return v / 255.0;
          };
          mesh.vertex_colors.emplace_back(channel(ir), channel(ig), channel(ib));
        }
      }
    } else if (e.name == "face") {
      int il = -1;
      for (size_t k = 0; k < e.props.size(); ++k)
        if (e.props[k].is_list && (e.props[k].name == "vertex_indices" || e.props[k].name == "vertex_index"))
          il = static_cast<int>(k);
      if (il < 0) throw Error(where + ": element 'face' lacks vertex_indices");
      for (size_t i = 0; i < e.count; ++i) {
        std::vector<int> poly;
        for (size_t k = 0; k < e.props.size(); ++k) {
          const auto& p = e.props[k];
          if (!p.is_list) {
            reader.read(p.type, "face");
            continue;
          }
          const double cnt = reader.read(p.count_type, "face");
          if (cnt < 0 || cnt != std::floor(cnt)) throw Error(where + ": bad list length in element 'face'");
          std::vector<int> values(static_cast<size_t>(cnt));
          for (auto& v : values) v = static_cast<int>(reader.read(p.type, "face"));
          if (static_cast<int>(k) == il) poly = std::move(values);
        }
        if (poly.size() < 3) throw Error(where + ": face " + std::to_string(i) + " has fewer than 3 vertices");
        for (size_t j = 1; j + 1 < poly.size(); ++j) mesh.triangles.push_back({poly[0], poly[j], poly[j + 1]});
      }
    } else {
      // Skip unknown elements property by property.
      for (size_t i = 0; i < e.count; ++i)
        for (const auto& p : e.props) {
          if (!p.is_list) {
            reader.read(p.type, e.name);
            continue;
          }
          const double cnt = reader.read(p.count_type, e.name);
          for (int j = 0; j < static_cast<int>(cnt); ++j) reader.read(p.type, e.name);
        }
    }
  }
  if (!saw_vertex) throw Error(where + ": no 'vertex' element");
  for (const auto& t : mesh.triangles)
    for (int v : t)
      if (v < 0 || static_cast<size_t>(v) >= mesh.vertices.size())
        throw Error(where + ": face index " + std::to_string(v) + " out of range");
  return mesh;
}

void savePly(const std::filesystem::path& path, const TriangleMesh& mesh, double scale) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (mesh.hasColors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.triangles.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3 v = mesh.vertices[i] / scale;
    out << v.x() << " " << v.y() << " " << v.z();
    if (mesh.hasColors()) {
      for (int c = 0; c < 3; ++c)
        out << " " << static_cast<int>(std::lround(std::clamp(mesh.vertex_colors[i][c], 0.0, 1.0) * 255.0));
    }
    out << "\n";
  }
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  if (!out) throw Error("failed writing " + path.string());
}

void savePointCloudPly(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.precision(9);
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.hasNormals()) out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (cloud.hasColors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << p.x() << " " << p.y() << " " << p.z();
    if (cloud.hasNormals()) out << " " << cloud.normals[i].x() << " " << cloud.normals[i].y() << " " << cloud.normals[i].z();
    if (cloud.hasColors())
      for (int c = 0; c < 3; ++c)
        out << " " << static_cast<int>(std::lround(std::clamp(cloud.colors[i][c], 0.0, 1.0) * 255.0));
    out << "\n";
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace posekit
