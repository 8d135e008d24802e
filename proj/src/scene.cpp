#include <posekit/scene.hpp>

#include <cmath>

namespace posekit {

Candidate Candidate::fromMask(MaskImage mask, double score, int object_id) {
  Candidate c;
  c.bbox = maskBounds(mask);
  c.mask = std::move(mask);
  c.score = score;
  c.object_id = object_id;
  return c;
}

void ScenePacket::validate() const {
  intrinsics.validate();
  if (rgb.channels != 3) throw Error("scene rgb must have 3 channels");
  if (depth.channels != 1) throw Error("scene depth must have 1 channel");
  if (rgb.width != depth.width || rgb.height != depth.height) throw Error("rgb and depth sizes differ");
  if (intrinsics.width != depth.width || intrinsics.height != depth.height)
    throw Error("intrinsics size differs from the images");
  for (const auto& c : candidates) {
    if (c.mask.width != depth.width || c.mask.height != depth.height)
      throw Error("candidate mask size differs from the images");
    if (!std::isfinite(c.score)) throw Error("candidate score is not finite");
  }
}

}  // namespace posekit
