#pragma once

#include <posekit/types.hpp>

#include <span>
#include <vector>

namespace posekit {

struct Neighbor {
  int index = -1;
  double distance = 0.0;
};

/**
 * @brief Exact k-d tree over a fixed set of 3D points.
 *
 * Results are ordered by ascending distance with ties broken by the lower
 * point index, so they match a linear scan exactly. The tree is immutable
 * after construction and safe for concurrent queries.
 */
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);
  explicit KdTree(const PointCloud& cloud) : KdTree(std::span<const Vec3>(cloud.points)) {}

  size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(int i) const { return points_[i]; }

  /// k nearest points; returns all points when k exceeds the tree size.
  std::vector<Neighbor> knn(const Vec3& query, size_t k) const;

  Neighbor nearest(const Vec3& query) const;

  /// All points with distance <= radius, sorted.
  std::vector<Neighbor> radius(const Vec3& query, double radius) const;

 private:
  struct Node {
    int begin = 0;
    int end = 0;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(int begin, int end);

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace posekit
