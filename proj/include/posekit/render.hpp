#pragma once

#include <posekit/types.hpp>

#include <filesystem>
#include <vector>

namespace posekit {

/**
 * @brief One rendered RGBD template of a mesh.
 *
 * `camera_pose` maps model coordinates into the camera frame. The mask is
 * set exactly where depth is positive.
 */
struct TemplateView {
  RgbImage rgb;
  DepthImage depth;
  MaskImage mask;
  RigidTransform camera_pose;
  CameraIntrinsics intrinsics;
};

/**
 * @brief Camera poses on a Fibonacci sphere looking at the model origin.
 *
 * Each returned transform is model-to-camera (x right, y down, z forward).
 * The image "up" follows global +z, falling back to +x when the optical axis
 * is parallel to z.
 */
std::vector<RigidTransform> sampleViewpoints(int count, double radius);

/// Model-to-camera pose for a camera at `center` looking at the origin.
RigidTransform lookAtOrigin(const Vec3& center);

/**
 * @brief Z-buffered rasterization of `mesh` under `pose` (model-to-camera).
 *
 * Pixel centers sit at integer coordinates; shared edges follow the top-left
 * rule. Depth is perspective-correct camera-space z and colors are flat vertex
 * colors (grey when the mesh has none). Triangles with a vertex at or behind
 * the camera plane are skipped.
 */
TemplateView render(const TriangleMesh& mesh, const RigidTransform& pose,
                    const CameraIntrinsics& intrinsics);

/// Square camera for template rendering: the diameter-sized sphere at
/// `distance` spans `fill` of the image width.
CameraIntrinsics templateCamera(int size, double diameter, double distance, double fill = 0.5);

/**
 * @brief Affine map between a square crop and its source image.
 *
 * source = origin + (crop + 0.5) * scale - 0.5, per axis.
 */
struct CropMapping {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double scale = 1.0;
  int size = 0;
  PixelRect bbox;  // clipped source rectangle holding content

  Vec2 toSource(double u, double v) const {
    return {origin_x + (u + 0.5) * scale - 0.5, origin_y + (v + 0.5) * scale - 0.5};
  }
  Vec2 toCrop(double x, double y) const {
    return {(x + 0.5 - origin_x) / scale - 0.5, (y + 0.5 - origin_y) / scale - 0.5};
  }
};

struct CroppedImage {
  Image<float> image;
  CropMapping mapping;
};

/**
 * @brief Square, aspect-preserving crop of `bbox` resized to out_size.
 *
 * The box is padded symmetrically to a square; padding is 0. Sampling is
 * bilinear and never reads outside the (clipped) box. Throws Error when the
 * box does not intersect the image.
 */
CroppedImage cropToBbox(const Image<float>& image, const PixelRect& bbox, int out_size);

/// Mask as a 0/1 float image, for cropping into fractional coverage.
Image<float> maskToFloat(const MaskImage& mask);

/**
 * @brief Resamples a crop-space feature map back onto source pixels.
 *
 * Only pixels with a non-zero `mask` are filled; the rest stay 0.
 */
FeatureMap uncropFeatures(const FeatureMap& crop_features, const CropMapping& mapping,
                          const MaskImage& mask);

/// Bilinear sample with border clamping; writes `image.channels` values.
void sampleBilinear(const Image<float>& image, double x, double y, float* out);

/**
 * @brief Writes `<stem>_rgb.png` (8-bit RGB) and `<stem>_depth_x<scale>mm.png`
 * (16-bit, raw = depth_mm / scale).
 */
void exportTemplateView(const TemplateView& view, const std::filesystem::path& dir,
                        const std::string& stem, double depth_scale_mm = 0.1);

}  // namespace posekit
