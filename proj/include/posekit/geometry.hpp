#pragma once

#include <posekit/types.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace posekit {

/**
 * @brief Area-weighted random sampling of a mesh surface.
 *
 * Positions and vertex colors are interpolated barycentrically; normals are
 * the (outward, by winding) face normals. Output is bitwise reproducible for a
 * fixed seed. Throws Error("empty mesh") when no triangle has positive area.
 */
PointCloud sampleSurface(const TriangleMesh& mesh, size_t n, std::uint64_t seed);

/// Result of lifting masked depth pixels; `pixels[i]` is the row-major pixel
/// index (y * width + x) that produced point i.
struct BackprojectedCloud {
  PointCloud cloud;
  std::vector<int> pixels;
};

/// Lifts every masked pixel with depth > 0 through `intrinsics`, row-major order.
BackprojectedCloud backprojectDepthIndexed(const DepthImage& depth, const MaskImage& mask,
                                           const CameraIntrinsics& intrinsics);

PointCloud backprojectDepth(const DepthImage& depth, const MaskImage& mask,
                            const CameraIntrinsics& intrinsics);

/**
 * @brief Least-squares rigid fit dst ~ R * src + t (Kabsch with reflection fix).
 *
 * Throws Error("degenerate correspondence set") for fewer than three pairs or
 * when the pairs are (numerically) collinear.
 */
RigidTransform estimateRigid(std::span<const Vec3> src, std::span<const Vec3> dst);

/// Symmetric mean nearest-neighbour distance, meters.
double chamferDistance(const PointCloud& a, const PointCloud& b);

/// Largest pairwise distance between vertices.
double meshDiameter(const TriangleMesh& mesh);

/// Largest pairwise distance between points (exact, quadratic).
double cloudDiameter(const PointCloud& cloud);

PointCloud transformCloud(const PointCloud& cloud, const RigidTransform& t);

/**
 * @brief PCA normals from the k nearest neighbours, flipped to face `viewpoint`.
 */
void estimateNormals(PointCloud& cloud, int k, const Vec3& viewpoint);

/// Unsigned distance from `p` to triangle (a, b, c).
double pointTriangleDistance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace posekit
