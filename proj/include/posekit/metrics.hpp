#pragma once

#include <posekit/symmetry.hpp>
#include <posekit/types.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace posekit {

struct GroundTruthAnnotation {
  RigidTransform pose;
  int object_id = 0;
  SymmetrySet symmetries = SymmetrySet::identityOnly();
  double visibility = 1.0;
};

/// Maximum symmetry-aware surface distance, meters.
double mssd(const RigidTransform& pred, const GroundTruthAnnotation& gt, const PointCloud& model);

/// Maximum symmetry-aware projection distance, pixels. Throws
/// Error("point behind camera") on non-positive depth.
double mspd(const RigidTransform& pred, const GroundTruthAnnotation& gt, const PointCloud& model,
            const CameraIntrinsics& intrinsics);

/**
 * @brief Visible surface discrepancy in [0, 1].
 *
 * Without `scene_depth` this is the full-render variant ("VSD-full"): both
 * masks are complete render footprints. With a scene depth map, visibility
 * masks follow the usual occlusion test with tolerance `delta` (meters).
 * Throws Error("object out of view") if both renders are empty.
 */
double vsd(const RigidTransform& pred, const GroundTruthAnnotation& gt, const TriangleMesh& mesh,
           const CameraIntrinsics& intrinsics, double tau, const DepthImage* scene_depth = nullptr,
           double delta = 0.015);

/// Same as vsd() for a list of tau values, rendering each pose once.
std::vector<double> vsdSweep(const RigidTransform& pred, const GroundTruthAnnotation& gt,
                             const TriangleMesh& mesh, const CameraIntrinsics& intrinsics,
                             const std::vector<double>& taus, const DepthImage* scene_depth = nullptr,
                             double delta = 0.015);

/// Threshold grids. MSSD and VSD tau are fractions of the diameter; MSPD
/// pixels are for a 640-pixel-wide image and scale with width / 640.
struct RecallGrids {
  std::vector<double> mssd{0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
  std::vector<double> mspd{5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  std::vector<double> vsd_tau{0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
  std::vector<double> vsd_theta{0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
};

/// Per-instance errors; `vsd` holds one value per vsd_tau entry.
struct ErrorRecord {
  std::string instance;
  double mssd = 0.0;
  double mspd = 0.0;
  std::vector<double> vsd;
};

struct RecallSummary {
  double ar = 0.0;
  double ar_vsd = 0.0;
  double ar_mssd = 0.0;
  double ar_mspd = 0.0;
  std::vector<double> mssd_recall;  // per threshold
  std::vector<double> mspd_recall;
  std::vector<double> vsd_recall;  // tau-major, theta-minor
};

/// Fraction of `errors` strictly below `threshold`.
double recallAt(const std::vector<double>& errors, double threshold);

RecallSummary averageRecall(const std::vector<ErrorRecord>& records, double diameter, int image_width,
                            const RecallGrids& grids = {});

/// One CSV row per (instance, metric, value) plus a JSON summary.
void writeMetricReport(const std::filesystem::path& csv_path, const std::filesystem::path& json_path,
                       const std::vector<ErrorRecord>& records, const RecallSummary& summary,
                       const RecallGrids& grids, double diameter, int image_width);

}  // namespace posekit
