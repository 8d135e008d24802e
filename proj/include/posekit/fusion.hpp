#pragma once

#include <posekit/features.hpp>

namespace posekit {

/// Scale applied to each unit-normalised block. A zero weight removes the
/// block from the distance and from the validity test.
struct FusionWeights {
  double visual = 1.0;
  double geometric = 1.0;
};

/**
 * @brief Row n = [w_v * v_n / |v_n| | w_g * g_n / |g_n|].
 *
 * A row is invalid (and zero) when a block with non-zero weight is invalid or
 * has zero norm. Throws Error("row count mismatch") for misaligned inputs.
 */
FeatureSet fuse(const FeatureSet& visual, const FeatureSet& geometric, const FusionWeights& weights = {});

}  // namespace posekit
