#pragma once

#include <posekit/scene.hpp>
#include <posekit/types.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace posekit {

/// Camera entry of a BOP scene_camera.json.
struct BopCamera {
  CameraIntrinsics intrinsics;  // width/height are left at 0 until an image is read
  double depth_scale = 1.0;     // raw depth units -> millimetres
};

/// Parses the entry for `image_id`. Errors name the file and the key.
BopCamera readSceneCamera(const std::filesystem::path& json_path, int image_id);

/// Accepts a whole scene_camera.json (entry `image_id` is used) or a single
/// entry object holding cam_K and optional depth_scale.
BopCamera readCameraFile(const std::filesystem::path& json_path, int image_id = 0);

/// Entry `image_id` of a scene_gt.json; translations mm -> m.
std::vector<GroundTruthAnnotation> readSceneGt(const std::filesystem::path& json_path, int image_id);

/// Raw 16-bit depth to meters: raw * depth_scale / 1000.
DepthImage depthFromRaw(const Image<std::uint16_t>& raw, double depth_scale);

/// 8/16-bit RGB(A) or grey PNG into [0, 1] floats.
RgbImage rgbFromRaw(const Image<std::uint16_t>& raw, int bit_depth);

/// Reads an RGB PNG as floats in [0, 1].
RgbImage loadRgbPng(const std::filesystem::path& path);

/// Any non-zero pixel counts as foreground.
MaskImage loadMaskPng(const std::filesystem::path& path);

/**
 * @brief Loads one image of a BOP-layout scene directory.
 *
 * Reads `<root>/<scene:06d>/scene_camera.json`, `rgb/<im:06d>.png` and
 * `depth/<im:06d>.png`. Candidate masks are optional and read from
 * `masks/<im:06d>_<k:06d>.png` in index order, each with score 1 unless
 * `masks/<im:06d>_scores.json` lists per-mask scores (and optional obj_id).
 * Ground truth from `scene_gt.json` is attached when present.
 */
ScenePacket ingestBopScene(const std::filesystem::path& root, int scene_id, int image_id);

/**
 * @brief Writes `packet` in the layout ingestBopScene() reads: camera and
 * GT entries are merged into existing scene JSON files; depth is stored as
 * round(meters * 1000 / depth_scale).
 */
void writeBopImage(const std::filesystem::path& root, const ScenePacket& packet, double depth_scale = 0.1);

/// `<root>/models/obj_<id:06d>.ply` in meters.
TriangleMesh loadBopModel(const std::filesystem::path& root, int object_id);

/// One row of a BOP result file.
struct ResultRow {
  int scene_id = 0;
  int im_id = 0;
  int obj_id = 0;
  double score = 0.0;
  RigidTransform pose;  // meters
  double time = -1.0;   // seconds; -1 when not measured
};

/// CSV header scene_id,im_id,obj_id,score,R,t,time; R row-major, t in mm.
void emitResults(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
void emitResults(const std::vector<ResultRow>& rows, std::ostream& out);
std::vector<ResultRow> parseResults(const std::filesystem::path& path);

}  // namespace posekit
