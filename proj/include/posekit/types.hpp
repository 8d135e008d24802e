#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace posekit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Library-wide error type. Messages are stable and tested against.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Ordered 3D points in meters with optional per-point normals and colors.
 *
 * Normals and colors are either empty or exactly as long as `points`.
 */
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<Vec3> colors;  // RGB in [0, 1]

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool hasNormals() const { return !normals.empty(); }
  bool hasColors() const { return !colors.empty(); }

  /// Throws Error when attribute lengths or normal norms are inconsistent.
  void validate() const;

  /// Copy of the rows listed in `indices`, in that order.
  PointCloud subset(const std::vector<int>& indices) const;
};

/**
 * @brief Proper rigid motion x -> R x + t.
 */
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  RigidTransform() = default;
  RigidTransform(const Mat3& r, const Vec3& t) : rotation(r), translation(t) {}

  static RigidTransform identity() { return {}; }
  static RigidTransform fromRotation(const Mat3& r) { return {r, Vec3::Zero()}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 operator*(const Vec3& p) const { return apply(p); }

  /// Composition: (a * b)(x) = a(b(x)).
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  RigidTransform inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  Eigen::Matrix4d matrix() const;

  /// Orthonormal with det +1 within `tol`.
  bool isProper(double tol = 1e-6) const;
};

/// Geodesic angle of a rotation matrix, radians in [0, pi].
double rotationAngle(const Mat3& r);

/// Angle between two rotations, radians.
double rotationDistance(const Mat3& a, const Mat3& b);

/// Rotation by `angle` radians about unit `axis`.
Mat3 axisAngle(const Vec3& axis, double angle);

/// Pinhole camera. Pixel (u, v) has its center at integer coordinates.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;
  Vec2 project(const Vec3& p) const { return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy}; }
  Vec3 unproject(double u, double v, double depth) const {
    return {(u - cx) * depth / fx, (v - cy) * depth / fy, depth};
  }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> vertex_colors;  // optional, RGB in [0, 1]

  bool hasColors() const { return !vertex_colors.empty(); }
  void validate() const;
  TriangleMesh transformed(const RigidTransform& t) const;
};

/// Dense interleaved image, row-major, `channels` values per pixel.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c = 1, T fill = T{})
      : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

  bool empty() const { return data.empty(); }
  size_t pixelCount() const { return static_cast<size_t>(width) * height; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  T& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  T* pixel(int x, int y) { return &data[(static_cast<size_t>(y) * width + x) * channels]; }
  const T* pixel(int x, int y) const {
    return &data[(static_cast<size_t>(y) * width + x) * channels];
  }
};

using RgbImage = Image<float>;
using DepthImage = Image<double>;
using MaskImage = Image<std::uint8_t>;
using FeatureMap = Image<float>;

/// Axis-aligned pixel rectangle [x, x + width) x [y, y + height).
struct PixelRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool empty() const { return width <= 0 || height <= 0; }
  bool operator==(const PixelRect&) const = default;
};

/// Tight bounds of the non-zero pixels; empty rect when the mask is empty.
PixelRect maskBounds(const MaskImage& mask);

}  // namespace posekit
