#pragma once

#include <posekit/features.hpp>
#include <posekit/types.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace posekit {

/// Number of bins per angular sub-histogram and the resulting FPFH width.
inline constexpr int kFpfhBins = 11;
inline constexpr int kFpfhDim = 3 * kFpfhBins;

struct GeometricEncoderConfig {
  enum class Kind { Fpfh, External };

  Kind kind = Kind::Fpfh;
  std::vector<double> radii{0.3, 0.4};  // fractions of the object diameter
  int per_scale_dim = kFpfhDim;
  std::filesystem::path external_path;  // FRZF file read when kind == External

  void validate() const;
};

/// Darboux-frame pair features: theta = atan2(w.n2, u.n2), alpha = v.n2,
/// phi = u.(p2 - p1)/|p2 - p1|, after choosing the source with the smaller
/// normal-to-line angle. Theta within 1e-9 of -pi is reported as pi. Returns
/// false when the frame is undefined.
bool pairFeatures(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2, double& theta,
                  double& alpha, double& phi);

/**
 * @brief Fast Point Feature Histograms at a fixed support radius.
 *
 * Each row is three 11-bin histograms (theta in [-pi, pi], alpha and phi in
 * [-1, 1]). A point's row is its own simplified histogram averaged with the
 * inverse-distance weighted mean of its neighbours' histograms; each block
 * sums to 1. Points without neighbours get a zero row marked invalid.
 * Clouds without normals get 30-NN PCA normals oriented toward `viewpoint`.
 */
FeatureSet encodeFpfh(const PointCloud& cloud, double radius, const Vec3& viewpoint = Vec3::Zero());

/// Per-scale encodings at radius_i = radii[i] * diameter, concatenated.
FeatureSet encodeMultiscale(const PointCloud& cloud, const GeometricEncoderConfig& config,
                            double diameter, const Vec3& viewpoint = Vec3::Zero());

/**
 * @brief Features computed elsewhere, read from an FRZF file.
 *
 * Throws Error("row count mismatch") when the file does not have one row per
 * point. All-zero rows are marked invalid; values are returned unchanged.
 */
FeatureSet loadExternalFeatures(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace posekit
