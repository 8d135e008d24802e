#include <posekit/shapes.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace posekit {

FaceColors distinctFaceColors() {
  return {Vec3(0.90, 0.10, 0.10), Vec3(0.10, 0.75, 0.15), Vec3(0.10, 0.20, 0.90),
          Vec3(0.95, 0.85, 0.10), Vec3(0.85, 0.15, 0.85), Vec3(0.10, 0.85, 0.85)};
}

TriangleMesh makeBox(const Vec3& half_extents, const Vec3& center, const FaceColors& colors, int subdiv) {
  if (subdiv < 1) throw Error("box subdivision must be positive");
  TriangleMesh mesh;
  int face = 0;
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {1, -1}) {
      Vec3 n = Vec3::Zero();
      n[axis] = sign;
      Vec3 u = Vec3::Zero(), v = Vec3::Zero();
      u[(axis + 1) % 3] = 1.0;
      v[(axis + 2) % 3] = 1.0;
      if (sign < 0) std::swap(u, v);  // keep u x v == n
      const double hu = half_extents.dot(u.cwiseAbs());
      const double hv = half_extents.dot(v.cwiseAbs());
      const Vec3 base = center + n * half_extents[axis];
      const int first = static_cast<int>(mesh.vertices.size());
      for (int j = 0; j <= subdiv; ++j)
        for (int i = 0; i <= subdiv; ++i) {
          const double a = -1.0 + 2.0 * i / subdiv;
          const double b = -1.0 + 2.0 * j / subdiv;
          mesh.vertices.push_back(base + u * (a * hu) + v * (b * hv));
          mesh.vertex_colors.push_back(colors[static_cast<size_t>(face)]);
        }
      const int stride = subdiv + 1;
      for (int j = 0; j < subdiv; ++j)
        for (int i = 0; i < subdiv; ++i) {
          const int a = first + j * stride + i;
          const int b = a + 1;
          const int c = a + stride + 1;
          const int d = a + stride;
          mesh.triangles.push_back({a, b, c});
          mesh.triangles.push_back({a, c, d});
        }
      ++face;
    }
  }
  return mesh;
}

Vec3 paletteColor(int k) {
  // Golden-angle spiral over 64 shell directions, visited with a large stride.
  constexpr int kSlots = 64;
  const int slot = static_cast<int>((static_cast<long long>(k) * 37) % kSlots);
  const double z = 1.0 - 2.0 * (slot + 0.5) / kSlots;
  const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = M_PI * (3.0 - std::sqrt(5.0)) * slot;
  return Vec3::Constant(0.5) + 0.42 * Vec3(rho * std::cos(phi), rho * std::sin(phi), z);
}

TriangleMesh makeTiledBox(const Vec3& half_extents, const Vec3& center, double tile, int first_color,
                          int* next_color) {
  if (!(tile > 0.0)) throw Error("tile size must be positive");
  TriangleMesh mesh;
  int color = first_color;
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {1, -1}) {
      Vec3 n = Vec3::Zero();
      n[axis] = sign;
      Vec3 u = Vec3::Zero(), v = Vec3::Zero();
      u[(axis + 1) % 3] = 1.0;
      v[(axis + 2) % 3] = 1.0;
      if (sign < 0) std::swap(u, v);
      const double hu = half_extents.dot(u.cwiseAbs());
      const double hv = half_extents.dot(v.cwiseAbs());
      const int nu = std::max(1, static_cast<int>(std::lround(2.0 * hu / tile)));
      const int nv = std::max(1, static_cast<int>(std::lround(2.0 * hv / tile)));
      const Vec3 base = center + n * half_extents[axis];
      for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) {
          const double a0 = -hu + 2.0 * hu * i / nu, a1 = -hu + 2.0 * hu * (i + 1) / nu;
          const double b0 = -hv + 2.0 * hv * j / nv, b1 = -hv + 2.0 * hv * (j + 1) / nv;
          const int first = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(base + u * a0 + v * b0);
          mesh.vertices.push_back(base + u * a1 + v * b0);
          mesh.vertices.push_back(base + u * a1 + v * b1);
          mesh.vertices.push_back(base + u * a0 + v * b1);
          const Vec3 c = paletteColor(color++);
          for (int k = 0; k < 4; ++k) mesh.vertex_colors.push_back(c);
          mesh.triangles.push_back({first, first + 1, first + 2});
          mesh.triangles.push_back({first, first + 2, first + 3});
        }
    }
  }
  if (next_color) *next_color = color;
  return mesh;
}

TriangleMesh makeCube(double size, const FaceColors& colors, int subdiv) {
  return makeBox(Vec3::Constant(size / 2.0), Vec3::Zero(), colors, subdiv);
}

TriangleMesh makeCylinder(double radius, double height, int segments, const Vec3& color) {
  if (segments < 3) throw Error("cylinder needs at least 3 segments");
  TriangleMesh mesh;
  const double h = height / 2.0;
  auto ring = [&](double z) {
    const int first = static_cast<int>(mesh.vertices.size());
    for (int i = 0; i < segments; ++i) {
      const double a = 2.0 * M_PI * i / segments;
      mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
    }
    return first;
  };
  const int bottom = ring(-h);
  const int top = ring(h);
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    mesh.triangles.push_back({bottom + i, bottom + j, top + j});
    mesh.triangles.push_back({bottom + i, top + j, top + i});
  }
  // Caps with their own vertices so they stay flat.
  const int cap_bottom = ring(-h);
  const int cap_top = ring(h);
  const int c0 = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(0.0, 0.0, -h);
  mesh.vertices.emplace_back(0.0, 0.0, h);
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    mesh.triangles.push_back({c0, cap_bottom + j, cap_bottom + i});
    mesh.triangles.push_back({c0 + 1, cap_top + i, cap_top + j});
  }
  mesh.vertex_colors.assign(mesh.vertices.size(), color);
  return mesh;
}

TriangleMesh makeSphere(double radius, int subdivisions, const std::function<Vec3(const Vec3&)>& color_of) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> dirs = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                            {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& d : dirs) d.normalize();
  std::vector<std::array<int, 3>> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                           {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                           {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                           {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      dirs.push_back((dirs[static_cast<size_t>(a)] + dirs[static_cast<size_t>(b)]).normalized());
      const int idx = static_cast<int>(dirs.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  TriangleMesh mesh;
  for (auto f : faces) {
    const Vec3& a = dirs[static_cast<size_t>(f[0])];
    const Vec3& b = dirs[static_cast<size_t>(f[1])];
    const Vec3& c = dirs[static_cast<size_t>(f[2])];
    if ((b - a).cross(c - a).dot(a + b + c) < 0.0) std::swap(f[1], f[2]);
    mesh.triangles.push_back(f);
  }
  for (const auto& d : dirs) {
    mesh.vertices.push_back(d * radius);
    mesh.vertex_colors.push_back(color_of(d));
  }
  return mesh;
}

TriangleMesh mergeMeshes(const TriangleMesh& a, const TriangleMesh& b) {
  if (a.hasColors() != b.hasColors() && !a.vertices.empty() && !b.vertices.empty())
    throw Error("cannot merge coloured and uncoloured meshes");
  TriangleMesh out = a;
  const int offset = static_cast<int>(a.vertices.size());
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  out.vertex_colors.insert(out.vertex_colors.end(), b.vertex_colors.begin(), b.vertex_colors.end());
  for (const auto& t : b.triangles) out.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  return out;
}

TriangleMesh makeAsymmetricObject() {
  constexpr double kTile = 0.025;
  int color = 0;
  TriangleMesh mesh = makeTiledBox(Vec3(0.050, 0.030, 0.020), Vec3(0.0, 0.0, 0.0), kTile, color, &color);
  mesh = mergeMeshes(mesh, makeTiledBox(Vec3(0.015, 0.015, 0.025), Vec3(0.030, 0.010, 0.045), kTile, color, &color));
  mesh = mergeMeshes(mesh, makeTiledBox(Vec3(0.012, 0.020, 0.010), Vec3(-0.035, -0.045, -0.005), kTile, color, &color));
  return mesh;
}

TriangleMesh makeTexturedCube() { return makeTiledBox(Vec3(0.05, 0.05, 0.05), Vec3::Zero(), 0.1 / 3.0); }

}  // namespace posekit
