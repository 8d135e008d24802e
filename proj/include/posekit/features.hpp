#pragma once

#include <posekit/types.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace posekit {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Order-sensitive fingerprint of a cloud's coordinates; 0 is reserved for "unknown".
std::uint64_t cloudFingerprint(const PointCloud& cloud);

/**
 * @brief Per-point feature matrix aligned with a point cloud.
 *
 * Row i describes point i of the cloud identified by `aligned_to`. Rows with
 * `valid[i] == 0` carry zeros and are skipped by matching.
 */
struct FeatureSet {
  FeatureMatrix features;
  std::vector<std::uint8_t> valid;
  std::uint64_t aligned_to = 0;

  FeatureSet() = default;
  FeatureSet(size_t rows, int dim, std::uint64_t cloud_id = 0)
      : features(FeatureMatrix::Zero(static_cast<Eigen::Index>(rows), dim)),
        valid(rows, 1),
        aligned_to(cloud_id) {}

  size_t rows() const { return static_cast<size_t>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
  size_t validCount() const;

  /// Throws Error on non-finite entries or a validity vector of the wrong length.
  void validate() const;

  /// Rows listed in `indices`, in that order.
  FeatureSet subset(const std::vector<int>& indices, std::uint64_t cloud_id = 0) const;
};

/// Column-wise concatenation; a row is valid only if valid in every part.
FeatureSet concatenate(const std::vector<FeatureSet>& parts);

}  // namespace posekit
