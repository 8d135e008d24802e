#pragma once

#include <posekit/metrics.hpp>
#include <posekit/types.hpp>

#include <vector>

namespace posekit {

/// One localization-prior proposal for an object.
struct Candidate {
  MaskImage mask;
  PixelRect bbox;  // tight bounds of `mask`
  double score = 1.0;
  int object_id = 0;

  /// Builds a candidate whose bbox is computed from the mask.
  static Candidate fromMask(MaskImage mask, double score, int object_id = 0);
};

/// One RGBD observation with its detection candidates and optional GT.
struct ScenePacket {
  RgbImage rgb;
  DepthImage depth;  // meters, 0 = no measurement
  CameraIntrinsics intrinsics;
  std::vector<Candidate> candidates;
  std::vector<GroundTruthAnnotation> ground_truth;
  int scene_id = 0;
  int image_id = 0;

  /// Throws Error when image, depth, mask and intrinsics sizes disagree.
  void validate() const;
};

}  // namespace posekit
