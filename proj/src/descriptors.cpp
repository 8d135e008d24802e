#include <posekit/descriptors.hpp>
#include <posekit/frzf.hpp>
#include <posekit/geometry.hpp>
#include <posekit/kdtree.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>

namespace posekit {

std::uint64_t cloudFingerprint(const PointCloud& cloud) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(cloud.size());
  for (const auto& p : cloud.points)
    for (int k = 0; k < 3; ++k) mix(std::bit_cast<std::uint64_t>(p[k]));
  return h == 0 ? 1 : h;
}

size_t FeatureSet::validCount() const {
  return static_cast<size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

void FeatureSet::validate() const {
  if (valid.size() != rows()) throw Error("validity vector length does not match rows");
  if (!features.allFinite()) throw Error("feature set contains non-finite values");
}

FeatureSet FeatureSet::subset(const std::vector<int>& indices, std::uint64_t cloud_id) const {
  FeatureSet out(indices.size(), dim(), cloud_id);
  for (size_t i = 0; i < indices.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(indices[i]);
    out.valid[i] = valid[indices[i]];
  }
  return out;
}

FeatureSet concatenate(const std::vector<FeatureSet>& parts) {
  if (parts.empty()) return {};
  const size_t rows = parts.front().rows();
  int dim = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw Error("row count mismatch");
    dim += p.dim();
  }
  FeatureSet out(rows, dim, parts.front().aligned_to);
  int col = 0;
  for (const auto& p : parts) {
    out.features.middleCols(col, p.dim()) = p.features;
    for (size_t i = 0; i < rows; ++i) out.valid[i] = out.valid[i] && p.valid[i];
    col += p.dim();
  }
  return out;
}

void GeometricEncoderConfig::validate() const {
  if (radii.empty()) throw Error("at least one radius is required");
  for (double r : radii)
    if (!(r > 0.0 && r <= 1.0)) throw Error("radius fractions must lie in (0, 1]");
  if (per_scale_dim < 1) throw Error("per-scale dimension must be positive");
  if (kind == Kind::External && external_path.empty()) throw Error("external feature path missing");
}

namespace {
constexpr double kThetaSeam = 1e-9;
}  // namespace

bool pairFeatures(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2, double& theta,
                  double& alpha, double& phi) {
  Vec3 dp = p2 - p1;
  const double dist = dp.norm();
  if (dist == 0.0) return false;
  const double a1 = n1.dot(dp) / dist;
  const double a2 = n2.dot(dp) / dist;

  const Vec3* src = &n1;
  const Vec3* dst = &n2;
  if (std::abs(a1) < std::abs(a2)) {
    std::swap(src, dst);
    dp = -dp;
    phi = -a2;
  } else {
    phi = a1;
  }
  Vec3 v = dp.cross(*src);
  const double vnorm = v.norm();
  if (vnorm == 0.0) return false;
  v /= vnorm;
  const Vec3 w = src->cross(v);
  alpha = v.dot(*dst);
  theta = std::atan2(w.dot(*dst), src->dot(*dst));
  // Antiparallel normals sit on the +-pi seam; rounding noise must not pick the side.
  if (std::abs(theta) > M_PI - kThetaSeam) theta = M_PI;
  return true;
}

namespace {

using Histogram = std::array<double, kFpfhDim>;

int binOf(double value, double lo, double hi) {
  const int b = static_cast<int>(std::floor(kFpfhBins * (value - lo) / (hi - lo)));
  return std::clamp(b, 0, kFpfhBins - 1);
}

void normalizeBlocks(Histogram& h) {
  for (int b = 0; b < 3; ++b) {
    double sum = 0.0;
    for (int i = 0; i < kFpfhBins; ++i) sum += h[b * kFpfhBins + i];
    if (sum > 0.0)
      for (int i = 0; i < kFpfhBins; ++i) h[b * kFpfhBins + i] /= sum;
  }
}

}  // namespace

FeatureSet encodeFpfh(const PointCloud& input, double radius, const Vec3& viewpoint) {
  if (!(radius > 0.0)) throw Error("radius must be positive");
  PointCloud with_normals;
  const PointCloud* cloud = &input;
  if (!input.hasNormals()) {
    with_normals.points = input.points;
    estimateNormals(with_normals, 30, viewpoint);
    cloud = &with_normals;
  }
  const size_t n = cloud->size();
  const KdTree tree(*cloud);

  std::vector<Histogram> spfh(n);
  std::vector<std::uint8_t> has_pairs(n, 0);
  for (size_t i = 0; i < n; ++i) {
    Histogram h{};
    int pairs = 0;
    for (const auto& nb : tree.radius(cloud->points[i], radius)) {
      if (nb.index == static_cast<int>(i) || nb.distance == 0.0) continue;
      double theta, alpha, phi;
      if (!pairFeatures(cloud->points[i], cloud->normals[i], cloud->points[nb.index],
                        cloud->normals[nb.index], theta, alpha, phi))
        continue;
      h[binOf(theta, -M_PI, M_PI)] += 1.0;
      h[kFpfhBins + binOf(alpha, -1.0, 1.0)] += 1.0;
      h[2 * kFpfhBins + binOf(phi, -1.0, 1.0)] += 1.0;
      ++pairs;
    }
    if (pairs > 0) {
      normalizeBlocks(h);
      has_pairs[i] = 1;
    }
    spfh[i] = h;
  }

  FeatureSet out(n, kFpfhDim, cloudFingerprint(input));
  for (size_t i = 0; i < n; ++i) {
    if (!has_pairs[i]) {
      out.valid[i] = 0;
      continue;
    }
    Histogram neighbours{};
    for (const auto& nb : tree.radius(cloud->points[i], radius)) {
      if (nb.index == static_cast<int>(i) || nb.distance == 0.0) continue;
      const double weight = 1.0 / nb.distance;
      for (int k = 0; k < kFpfhDim; ++k) neighbours[k] += weight * spfh[nb.index][k];
    }
    normalizeBlocks(neighbours);
    Histogram row = spfh[i];
    for (int k = 0; k < kFpfhDim; ++k) row[k] += neighbours[k];
    normalizeBlocks(row);
    for (int k = 0; k < kFpfhDim; ++k)
      out.features(static_cast<Eigen::Index>(i), k) = static_cast<float>(row[k]);
  }
  return out;
}

FeatureSet encodeMultiscale(const PointCloud& cloud, const GeometricEncoderConfig& config,
                            double diameter, const Vec3& viewpoint) {
  config.validate();
  if (!(diameter > 0.0)) throw Error("diameter must be positive");
  if (config.kind == GeometricEncoderConfig::Kind::External)
    return loadExternalFeatures(config.external_path, cloud);

  PointCloud with_normals;
  const PointCloud* source = &cloud;
  if (!cloud.hasNormals()) {
    with_normals = cloud;
    estimateNormals(with_normals, 30, viewpoint);
    source = &with_normals;
  }
  std::vector<FeatureSet> scales;
  for (double r : config.radii) scales.push_back(encodeFpfh(*source, r * diameter, viewpoint));
  FeatureSet out = concatenate(scales);
  out.aligned_to = cloudFingerprint(cloud);
  return out;
}

FeatureSet loadExternalFeatures(const std::filesystem::path& path, const PointCloud& cloud) {
  FeatureMatrix m = readFrzf(path);
  if (static_cast<size_t>(m.rows()) != cloud.size()) throw Error("row count mismatch");
  FeatureSet out;
  out.features = std::move(m);
  out.valid.assign(out.rows(), 1);
  for (size_t i = 0; i < out.rows(); ++i)
    if (out.features.row(static_cast<Eigen::Index>(i)).isZero(0.0)) out.valid[i] = 0;
  out.aligned_to = cloudFingerprint(cloud);
  return out;
}

}  // namespace posekit
