#pragma once

#include <posekit/features.hpp>
#include <posekit/types.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace posekit {

struct Correspondence {
  int query = -1;
  int target = -1;
  double distance = 0.0;  // feature-space Euclidean distance
};

/**
 * @brief Nearest target row for every valid query row (Euclidean, fused space).
 *
 * Ties go to the lower target index. With `mutual`, only pairs that are each
 * other's nearest neighbour are kept. Throws Error when either side has no
 * valid rows.
 */
std::vector<Correspondence> matchFeatures(const FeatureSet& fq, const FeatureSet& ft, bool mutual = false);

struct RansacParams {
  int iterations = 50000;
  double inlier_threshold = 0.02;  // fraction of diameter
  double edge_tolerance = 0.03;    // fraction of diameter
  double min_triangle_height = 1e-3;  // fraction of diameter
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct PoseEstimate {
  RigidTransform transform;
  int inliers = 0;
  double fitness = 0.0;  // inliers / correspondences
  double rmse = 0.0;     // over inliers, meters
  int candidate = 0;
};

/**
 * @brief Triplet RANSAC over feature correspondences.
 *
 * Iteration i draws its triplet from a stream seeded by (seed, i), so any
 * thread partition yields the same winner. Candidates are ranked by inlier
 * count, then inlier RMSE, then iteration index; the winner is re-fit on its
 * inliers when that does not lose inliers. Throws Error("registration
 * failed") when no triplet survives the consistency checks.
 */
PoseEstimate ransacRegister(const PointCloud& cloud_q, const PointCloud& cloud_t,
                            std::span<const Correspondence> matches, double diameter,
                            const RansacParams& params);

/// Most inliers, then higher fitness, then lower candidate index.
PoseEstimate selectCandidate(std::span<const PoseEstimate> estimates);

struct IcpResult {
  RigidTransform transform;
  std::vector<double> rmse_history;  // one entry per accepted transform, starting at init
  int iterations = 0;
  bool no_correspondences = false;  // init returned untouched
};

/**
 * @brief Point-to-point ICP of cloud_q onto cloud_t starting at `init`.
 *
 * Correspondences are nearest neighbours within `corr_dist`. A step is kept
 * only if it does not raise the inlier RMSE; iteration stops when the RMSE
 * improvement drops below `eps` or after `max_iter` steps.
 */
IcpResult icpRefine(const PointCloud& cloud_q, const PointCloud& cloud_t, const RigidTransform& init,
                    int max_iter, double corr_dist, double eps);

}  // namespace posekit
