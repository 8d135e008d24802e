#pragma once

#include <posekit/types.hpp>
#include <posekit/visual.hpp>

#include <span>
#include <vector>

namespace posekit {

/// Rotations about the model origin that map the model onto itself.
/// The identity is always first.
struct SymmetrySet {
  std::vector<RigidTransform> rotations;
  std::vector<double> chamfer;  // meters, one per rotation

  size_t size() const { return rotations.size(); }
  static SymmetrySet identityOnly();
};

struct SymmetryParams {
  int n_rotations = 4608;          // sample size, 24 in-plane angles per axis
  double threshold = 0.02;         // Chamfer acceptance, fraction of diameter
  double spacing_factor = 1.25;    // Chamfer acceptance, multiple of mean point spacing
  double dedup_degrees = 5.0;
  double coarse_factor = 4.0;      // screening slack before polishing
  double cluster_degrees = 20.0;   // survivors this close share one polish
  int screen_points = 256;
  int polish_points = 512;
  int polish_iterations = 30;
};

/// Deterministic quasi-uniform SO(3) sample: Fibonacci axes x uniform in-plane angles.
std::vector<Mat3> sampleRotations(int count, int in_plane = 24);

/**
 * @brief Rotational self-symmetries of a cloud.
 *
 * Sampled rotations are screened with a subsampled one-sided Chamfer. The
 * best survivor of each cluster is polished by rotation-only ICP of the
 * cloud onto itself (point-to-plane when normals exist), deduplicated
 * (closer than dedup_degrees keeps the better fit), and accepted when the full symmetric Chamfer is at most
 * threshold * diameter and at most spacing_factor times the mean distance
 * from a point to its nearest distinct neighbour. An exact symmetry of the
 * surface maps the sample onto an equally dense resample, so its Chamfer
 * stays at that spacing; small rotations of blocky shapes that merely slide
 * along faces do not. `diameter` <= 0 means compute it from the cloud.
 */
SymmetrySet estimateSymmetries(const PointCloud& cloud, const SymmetryParams& params = {},
                               double diameter = 0.0);

/// Index of the highest score; scores within `tie_tolerance` of the maximum
/// resolve to the lowest index.
int selectSymmetry(std::span<const double> scores, double tie_tolerance = 1e-9);

/**
 * @brief Mean cosine similarity over cells that are foreground in both grids
 * (coverage > min_coverage). Returns -1 when no cell qualifies.
 */
double patchCosineScore(const PatchFeatureGrid& a, const PatchFeatureGrid& b, double min_coverage = 0.5);

struct SarResult {
  RigidTransform transform;
  int selected = 0;
  std::vector<double> scores;
};

/**
 * @brief Renders the model at pose * R_s for every symmetry, encodes the
 * target-box crop, and keeps the symmetry whose patch features best match
 * `target_grid`. Empty renders score -1.
 */
SarResult symmetryAwareRefine(const TriangleMesh& mesh, const RigidTransform& pose,
                              const SymmetrySet& symmetries, const PatchFeatureGrid& target_grid,
                              const CameraIntrinsics& intrinsics, const PixelRect& bbox,
                              const VisualEncoder& encoder);

}  // namespace posekit
