#pragma once

#include <posekit/scene.hpp>

#include <cstdint>

namespace posekit {

struct SyntheticScene {
  ScenePacket packet;      // one candidate holding the visible mask, plus GT
  MaskImage full_mask;     // unoccluded render footprint
  double cut_angle = 0.0;  // direction of the occluding half-plane, radians
};

/**
 * @brief Renders `mesh` at `pose` into a black scene with noisy depth and a
 * straight-edged occluder.
 *
 * Depth noise is Gaussian with sigma = noise_sigma * diameter on foreground
 * pixels. The occluder covers the part of the mask beyond a line whose
 * normal points along a seeded angle; the line is placed (through the mask
 * centroid for a 50% cut) so that `occlusion_fraction` of the mask pixels
 * are hidden. Hidden pixels turn grey and move 10% closer to the camera.
 * The GT visibility is the exact visible pixel fraction.
 * Throws Error("object out of frustum") when any vertex falls outside the
 * image or behind the camera.
 */
SyntheticScene generateSyntheticScene(const TriangleMesh& mesh, const RigidTransform& pose,
                                      const CameraIntrinsics& intrinsics, double noise_sigma,
                                      double occlusion_fraction, std::uint64_t seed);

/// Random pose with the model origin at `distance` on the optical axis,
/// jittered laterally by up to `lateral` meters.
RigidTransform randomPose(std::uint64_t seed, double distance, double lateral = 0.0);

}  // namespace posekit
