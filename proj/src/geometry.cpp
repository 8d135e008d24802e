#include <posekit/geometry.hpp>
#include <posekit/kdtree.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace posekit {

void PointCloud::validate() const {
  if (hasNormals() && normals.size() != points.size())
    throw Error("normals length does not match points");
  if (hasColors() && colors.size() != points.size())
    throw Error("colors length does not match points");
  for (const auto& n : normals)
    if (std::abs(n.norm() - 1.0) > 1e-6) throw Error("normal is not unit length");
}

PointCloud PointCloud::subset(const std::vector<int>& indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  for (int i : indices) out.points.push_back(points[i]);
  if (hasNormals())
    for (int i : indices) out.normals.push_back(normals[i]);
  if (hasColors())
    for (int i : indices) out.colors.push_back(colors[i]);
  return out;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

bool RigidTransform::isProper(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

double rotationAngle(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

double rotationDistance(const Mat3& a, const Mat3& b) { return rotationAngle(a.transpose() * b); }

Mat3 axisAngle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error("image size must be positive");
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
    throw Error("principal point outside the image");
}

void TriangleMesh::validate() const {
  const int nv = static_cast<int>(vertices.size());
  for (const auto& tri : triangles) {
    for (int i : tri)
      if (i < 0 || i >= nv) throw Error("triangle index out of range");
    if (vertices[tri[0]] == vertices[tri[1]] && vertices[tri[1]] == vertices[tri[2]])
      throw Error("triangle collapses to a single vertex");
  }
  if (hasColors() && vertex_colors.size() != vertices.size())
    throw Error("vertex colors length does not match vertices");
}

TriangleMesh TriangleMesh::transformed(const RigidTransform& t) const {
  TriangleMesh out = *this;
  for (auto& v : out.vertices) v = t.apply(v);
  return out;
}

PixelRect maskBounds(const MaskImage& mask) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

PointCloud sampleSurface(const TriangleMesh& mesh, size_t n, std::uint64_t seed) {
  mesh.validate();
  std::vector<double> cumulative;
  std::vector<int> faces;
  double total = 0.0;
  for (size_t f = 0; f < mesh.triangles.size(); ++f) {
    const auto& tri = mesh.triangles[f];
    const double area = 0.5 * (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                                  .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]])
                                  .norm();
    if (area <= 0.0) continue;
    total += area;
    cumulative.push_back(total);
    faces.push_back(static_cast<int>(f));
  }
  if (faces.empty()) throw Error("empty mesh");

  PointCloud cloud;
  cloud.points.reserve(n);
  cloud.normals.reserve(n);
  if (mesh.hasColors()) cloud.colors.reserve(n);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (size_t i = 0; i < n; ++i) {
    const double pick = uniform(rng) * total;
    size_t slot = std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin();
    slot = std::min(slot, faces.size() - 1);
    const auto& tri = mesh.triangles[faces[slot]];

    const double s = std::sqrt(uniform(rng));
    const double r = uniform(rng);
    const double wa = 1.0 - s, wb = s * (1.0 - r), wc = s * r;

    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    cloud.points.push_back(wa * a + wb * b + wc * c);
    cloud.normals.push_back((b - a).cross(c - a).normalized());
    if (mesh.hasColors())
      cloud.colors.push_back(wa * mesh.vertex_colors[tri[0]] + wb * mesh.vertex_colors[tri[1]] +
                             wc * mesh.vertex_colors[tri[2]]);
  }
  return cloud;
}

BackprojectedCloud backprojectDepthIndexed(const DepthImage& depth, const MaskImage& mask,
                                           const CameraIntrinsics& intrinsics) {
  if (depth.width != intrinsics.width || depth.height != intrinsics.height ||
      mask.width != intrinsics.width || mask.height != intrinsics.height)
    throw Error("depth/mask dimensions do not match intrinsics");
  BackprojectedCloud out;
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u) {
      const double d = depth.at(u, v);
      if (!mask.at(u, v) || !(d > 0.0)) continue;
      out.cloud.points.push_back(intrinsics.unproject(u, v, d));
      out.pixels.push_back(v * depth.width + u);
    }
  return out;
}

PointCloud backprojectDepth(const DepthImage& depth, const MaskImage& mask,
                            const CameraIntrinsics& intrinsics) {
  return backprojectDepthIndexed(depth, mask, intrinsics).cloud;
}

RigidTransform estimateRigid(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size() || src.size() < 3) throw Error("degenerate correspondence set");
  const double n = static_cast<double>(src.size());
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= n;
  cd /= n;

  Mat3 cross = Mat3::Zero();
  Mat3 scatter = Mat3::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    const Vec3 a = src[i] - cs;
    cross += a * (dst[i] - cd).transpose();
    scatter += a * a.transpose();
  }

  // Collinear (or coincident) sources leave the rotation about the line free.
  Eigen::SelfAdjointEigenSolver<Mat3> spread(scatter);
  const Vec3 ev = spread.eigenvalues();  // ascending
  if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) throw Error("degenerate correspondence set");

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 fix = Mat3::Identity();
  if ((v * u.transpose()).determinant() < 0.0) fix(2, 2) = -1.0;
  const Mat3 r = v * fix * u.transpose();
  return {r, cd - r * cs};
}

double chamferDistance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw Error("chamfer distance of an empty cloud");
  const KdTree ta(a), tb(b);
  double sa = 0.0, sb = 0.0;
  for (const auto& p : a.points) sa += tb.nearest(p).distance;
  for (const auto& p : b.points) sb += ta.nearest(p).distance;
  return 0.5 * (sa / a.size() + sb / b.size());
}

namespace {

double pairwiseMax(std::span<const Vec3> pts) {
  double best = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(best);
}

// Exact below the cap; above it, restricted to extreme points along a
// direction fan, which are hull vertices and usually contain the diameter pair.
double diameterOf(std::span<const Vec3> pts) {
  constexpr size_t kExactCap = 6000;
  if (pts.size() <= kExactCap) return pairwiseMax(pts);
  std::vector<Vec3> extremes;
  const int kDirs = 400;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < kDirs; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / kDirs;
    const double r = std::sqrt(1.0 - z * z);
    const Vec3 d(r * std::cos(golden * i), r * std::sin(golden * i), z);
    size_t lo = 0, hi = 0;
    for (size_t k = 1; k < pts.size(); ++k) {
      const double s = d.dot(pts[k]);
      if (s < d.dot(pts[lo])) lo = k;
      if (s > d.dot(pts[hi])) hi = k;
    }
    extremes.push_back(pts[lo]);
    extremes.push_back(pts[hi]);
  }
  return pairwiseMax(extremes);
}

}  // namespace

double meshDiameter(const TriangleMesh& mesh) { return diameterOf(mesh.vertices); }

double cloudDiameter(const PointCloud& cloud) { return diameterOf(cloud.points); }

PointCloud transformCloud(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = t.apply(p);
  for (auto& n : out.normals) n = t.rotation * n;
  return out;
}

void estimateNormals(PointCloud& cloud, int k, const Vec3& viewpoint) {
  const KdTree tree(cloud);
  cloud.normals.assign(cloud.size(), Vec3::UnitZ());
  for (size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud.points[i], static_cast<size_t>(k));
    if (nn.size() < 3) continue;
    Vec3 mean = Vec3::Zero();
    for (const auto& m : nn) mean += cloud.points[m.index];
    mean /= static_cast<double>(nn.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& m : nn) {
      const Vec3 d = cloud.points[m.index] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 n = eig.eigenvectors().col(0).normalized();
    if (n.dot(viewpoint - cloud.points[i]) < 0.0) n = -n;
    cloud.normals[i] = n;
  }
}

double pointTriangleDistance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Closest point by Voronoi region (Ericson, Real-Time Collision Detection 5.1.5).
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return (p - (a + ab * (d1 / (d1 - d3)))).norm();
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return (p - (a + ac * (d2 / (d2 - d6)))).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return (p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))))).norm();
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

}  // namespace posekit
