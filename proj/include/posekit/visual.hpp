#pragma once

#include <posekit/features.hpp>
#include <posekit/render.hpp>
#include <posekit/types.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace posekit {

/**
 * @brief Patch-level feature grid produced by a visual encoder for one crop.
 *
 * Cell (r, c) covers crop pixels [c*patch, (c+1)*patch) x [r*patch, (r+1)*patch).
 * `coverage`, when present, is the foreground fraction of each cell.
 */
struct PatchFeatureGrid {
  int rows = 0;
  int cols = 0;
  int channels = 0;
  int crop_size = 0;
  int patch_size = 0;
  std::vector<float> values;    // rows * cols * channels
  std::vector<float> coverage;  // rows * cols, optional

  float* cell(int r, int c) { return &values[(static_cast<size_t>(r) * cols + c) * channels]; }
  const float* cell(int r, int c) const {
    return &values[(static_cast<size_t>(r) * cols + c) * channels];
  }
  bool hasCoverage() const { return !coverage.empty(); }

  void validate() const;
};

/// Abstract image encoder: square crop in, patch grid out.
class VisualEncoder {
 public:
  virtual ~VisualEncoder() = default;
  virtual std::string name() const = 0;
  virtual int channels() const = 0;
  /// `coverage` (optional, same size as `crop`) holds per-pixel foreground fractions.
  virtual PatchFeatureGrid encode(const RgbImage& crop, const Image<float>* coverage) const = 0;
};

/// Mean colour per patch on a grid_p x grid_p layout.
class RgbPatchEncoder final : public VisualEncoder {
 public:
  explicit RgbPatchEncoder(int grid_p = 16) : grid_p_(grid_p) {}
  std::string name() const override { return "rgb"; }
  int channels() const override { return 3; }
  PatchFeatureGrid encode(const RgbImage& crop, const Image<float>* coverage) const override;

 private:
  int grid_p_;
};

/**
 * @brief Mean colour of each patch; with `coverage`, the coverage-weighted
 * mean (zero for cells without foreground). Throws Error when the crop is not square or
 * grid_p does not divide its side.
 */
PatchFeatureGrid encodeRgbPatches(const RgbImage& crop, int grid_p,
                                  const Image<float>* coverage = nullptr);

/// Reads a patch grid stored as FRZF (rows = P*P row-major cells, dim = C).
PatchFeatureGrid loadPatchGrid(const std::filesystem::path& path, int crop_size);

/**
 * @brief Bilinear upsampling with each cell value anchored at its patch centre.
 *
 * Pixels beyond the outermost centres clamp to the border cells.
 */
FeatureMap patchesToPixels(const PatchFeatureGrid& grid, int out_h, int out_w);

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;  // C x V, orthonormal columns
  Eigen::VectorXd explained_variance;  // non-increasing

  int inputDim() const { return static_cast<int>(basis.rows()); }
  int outputDim() const { return static_cast<int>(basis.cols()); }
};

/**
 * @brief Principal components of the rows of `samples` (K x C), top `v`.
 *
 * Throws Error("insufficient rank: achieved r") when fewer than v
 * components carry variance.
 */
PcaModel fitPca(const Eigen::MatrixXd& samples, int v);

/// Like fitPca but keeps min(v, rank) components; still throws when the
/// samples carry no variance at all.
PcaModel fitPcaUpTo(const Eigen::MatrixXd& samples, int v);

Eigen::VectorXd applyPca(const PcaModel& model, const Eigen::VectorXd& x);

/// Row-wise projection; invalid rows stay zero and invalid.
FeatureSet applyPca(const PcaModel& model, const FeatureSet& features);

/**
 * @brief Maps features to RGB through their top three principal components,
 * for visualizing feature agreement between query and target.
 *
 * Each component is rescaled to [0, 1] using the range seen on the fitting
 * set and clamped elsewhere. Invalid rows are black.
 */
struct PcaColorizer {
  PcaModel pca;
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Ones();

  static PcaColorizer fit(const FeatureSet& reference);
  std::vector<Vec3> colors(const FeatureSet& features) const;
};

/**
 * @brief Lifts rendered per-pixel features onto the sampled model points.
 *
 * For each view, masked depth pixels are back-projected into the model frame
 * and matched to their nearest model point; matches farther than
 * `accept_radius` are dropped. A point's per-view feature is the mean of its
 * matched pixels, and its final feature is the mean over the views that
 * touched it. Untouched points are zero and invalid. `pixel_maps[r]` is in
 * the image space of `views[r]`.
 */
FeatureSet backprojectQueryFeatures(const std::vector<TemplateView>& views,
                                    const std::vector<FeatureMap>& pixel_maps,
                                    const PointCloud& cloud_q, double accept_radius);

/**
 * @brief Gathers pixel features for a cloud produced by backprojectDepth over
 * the same mask and depth, in the same row-major order.
 */
FeatureSet transferTargetFeatures(const FeatureMap& pixel_map, const MaskImage& mask,
                                  const DepthImage& depth, const PointCloud& cloud_t);

/// Encodes a crop of `rgb` around `bbox` and returns the grid with coverage from `mask`.
struct EncodedCrop {
  PatchFeatureGrid grid;
  CropMapping mapping;
};
EncodedCrop encodeCrop(const VisualEncoder& encoder, const RgbImage& rgb, const MaskImage& mask,
                       const PixelRect& bbox, int crop_size);

}  // namespace posekit
