#pragma once

#include <posekit/descriptors.hpp>
#include <posekit/fusion.hpp>
#include <posekit/registration.hpp>
#include <posekit/scene.hpp>
#include <posekit/symmetry.hpp>
#include <posekit/visual.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace posekit {

enum class RefineMode { None, Icp, IcpSar };

RefineMode parseRefineMode(const std::string& text);
std::string toString(RefineMode mode);

struct VisualEncoderConfig {
  enum class Kind { Rgb, External };
  Kind kind = Kind::Rgb;
  int grid_p = 16;               // patches per side for the built-in encoder
  int crop_size = 224;
  int pca_dim = 64;              // clamped to the encoder's channel count
  double accept_radius = 0.005;  // back-projection match radius, fraction of diameter
  /// For External: directory with view_<r:03d>.frzf (template crops) and
  /// target_<k:03d>.frzf (candidate crops) patch grids.
  std::filesystem::path external_dir;
};

struct IcpParams {
  int max_iterations = 50;
  double corr_dist = 0.02;   // fraction of diameter
  double eps = 1e-6;         // meters of RMSE improvement
  int model_points = 20000;  // dense model sample used as the ICP target
  int stages = 1;            // radii corr_dist * 2^(stages-1), ..., corr_dist
};

/**
 * @brief Every knob of the estimator. Lengths are fractions of the object
 * diameter unless stated otherwise.
 */
struct PipelineConfig {
  int n_query = 5000;   // N
  int m_target = 1000;  // M
  int n_views = 42;     // R
  double camera_distance = 2.5;  // template camera distance / diameter
  int template_size = 256;
  double template_fill = 0.5;
  GeometricEncoderConfig geometric;
  int target_normal_k = 30;  // neighbours for target normals, full-resolution cloud
  VisualEncoderConfig visual;
  FusionWeights fusion;
  bool mutual_matching = false;
  RansacParams ransac;
  IcpParams icp;
  SymmetryParams symmetry;
  RefineMode refine = RefineMode::IcpSar;
  int top_k = 5;
  bool bbox_prior = false;  // treat the whole candidate box as foreground
  std::uint64_t seed = 0;

  void validate() const;
};

/// Applies `key = value` (or `key value`) to `cfg`; throws Error naming the key.
void setConfigValue(PipelineConfig& cfg, const std::string& key, const std::string& value);
/// Flat key-value file; '#' starts a comment.
PipelineConfig loadConfig(const std::filesystem::path& path, PipelineConfig base = {});
/// All keys with their current values, one per line, loadable by loadConfig.
std::string dumpConfig(const PipelineConfig& cfg);

/// Named wall-clock durations in the order they were recorded.
struct StageTimings {
  std::vector<std::pair<std::string, double>> stages;  // seconds
  double total = 0.0;

  void add(const std::string& name, double seconds);
  double sum() const;
  double get(const std::string& name) const;  // summed over repeats, 0 if absent
};

/// Everything derived from the model alone; reusable across scenes.
struct QueryModel {
  TriangleMesh mesh;
  double diameter = 0.0;
  PointCloud cloud;        // N surface samples with normals
  PointCloud dense_cloud;  // ICP target
  FeatureSet geometric;
  FeatureSet visual;       // after PCA
  std::optional<PcaModel> pca;
  FeatureSet fused;
  SymmetrySet symmetries = SymmetrySet::identityOnly();
  CameraIntrinsics template_intrinsics;
  StageTimings timings;
};

/// Built-in RGB encoder unless the config selects external features.
std::unique_ptr<VisualEncoder> makeVisualEncoder(const PipelineConfig& cfg);

QueryModel prepareQuery(const TriangleMesh& mesh, const PipelineConfig& cfg);

/// Template views used for query features (also exported by the CLI).
std::vector<TemplateView> renderTemplates(const TriangleMesh& mesh, const PipelineConfig& cfg,
                                          double diameter);

struct CandidateReport {
  int index = -1;
  double score = 0.0;
  std::string status;  // "ok", "skipped: ..." or "failed: ..."
  int inliers = 0;
  double fitness = 0.0;
};

struct PoseResult {
  PoseEstimate coarse;
  RigidTransform refined;
  bool has_refined = false;
  int sar_selected = 0;
  std::vector<CandidateReport> candidates;
  StageTimings timings;

  const RigidTransform& best() const { return has_refined ? refined : coarse.transform; }
};

/// Thrown when no candidate registers; carries one report per candidate.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& what, std::vector<CandidateReport> reports)
      : Error(what), diagnostics(std::move(reports)) {}
  std::vector<CandidateReport> diagnostics;
};

/// Per-candidate target features, exposed for the CLI feature dump.
struct TargetFeatures {
  PointCloud cloud;  // M samples, camera frame
  FeatureSet geometric;
  FeatureSet visual;
  FeatureSet fused;
  PatchFeatureGrid grid;
  PixelRect bbox;
};

TargetFeatures prepareTarget(const ScenePacket& packet, int candidate_index, const QueryModel& query,
                             const PipelineConfig& cfg, StageTimings* timings = nullptr);

struct RefinedPose {
  RigidTransform transform;
  int sar_selected = 0;
  std::vector<double> sar_scores;  // one per query symmetry; empty when SAR did not run
};

/**
 * @brief ICP (and SAR when cfg.refine is icp+sar) starting from `init`, a
 * model-to-camera pose. `refine = none` returns `init` unchanged.
 */
RefinedPose refinePose(const TargetFeatures& target, const QueryModel& query, const CameraIntrinsics& intrinsics,
                       const PipelineConfig& cfg, const RigidTransform& init, StageTimings* timings = nullptr);

/**
 * @brief Coarse registration over the top-k candidates, then optional ICP
 * and symmetry-aware refinement. Candidates that cannot be processed are
 * reported and skipped; throws PipelineError("registration failed") when
 * none succeeds.
 */
PoseResult estimatePose(const ScenePacket& packet, const QueryModel& query, const PipelineConfig& cfg);

/// Convenience overload that prepares the query first (its timings included).
PoseResult estimatePose(const ScenePacket& packet, const TriangleMesh& mesh, const PipelineConfig& cfg);

}  // namespace posekit
