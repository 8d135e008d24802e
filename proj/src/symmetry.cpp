#include <posekit/geometry.hpp>
#include <posekit/kdtree.hpp>
#include <posekit/render.hpp>
#include <posekit/symmetry.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace posekit {

SymmetrySet SymmetrySet::identityOnly() {
  SymmetrySet s;
  s.rotations.push_back(RigidTransform::identity());
  s.chamfer.push_back(0.0);
  return s;
}

std::vector<Mat3> sampleRotations(int count, int in_plane) {
  if (count < 1 || in_plane < 1) throw Error("rotation sample size must be positive");
  const int axes = (count + in_plane - 1) / in_plane;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  std::vector<Mat3> out;
  out.reserve(static_cast<size_t>(axes) * in_plane);
  for (int i = 0; i < axes; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / axes;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 axis(rho * std::cos(golden * i), rho * std::sin(golden * i), z);
    // Base rotation taking +z onto the axis.
    const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 x = helper.cross(axis).normalized();
    const Vec3 y = axis.cross(x);
    Mat3 base;
    base.col(0) = x;
    base.col(1) = y;
    base.col(2) = axis;
    for (int k = 0; k < in_plane; ++k) out.push_back(axisAngle(axis, 2.0 * M_PI * k / in_plane) * base);
  }
  return out;
}

namespace {

std::vector<int> stridedIndices(size_t n, int count) {
  std::vector<int> out;
  if (count <= 0 || static_cast<size_t>(count) >= n) {
    out.resize(n);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  out.reserve(static_cast<size_t>(count));
  const double step = static_cast<double>(n) / count;
  for (int i = 0; i < count; ++i) out.push_back(static_cast<int>(i * step));
  return out;
}

double oneSided(const Mat3& r, const PointCloud& cloud, const std::vector<int>& idx, const KdTree& tree,
                double give_up) {
  double sum = 0.0;
  const double limit = give_up * idx.size();
  for (int i : idx) {
    sum += tree.nearest(r * cloud.points[static_cast<size_t>(i)]).distance;
    if (sum > limit) return std::numeric_limits<double>::infinity();
  }
  return sum / idx.size();
}

// Rotation-only alignment of the cloud onto itself. With normals each step
// solves the damped point-to-plane normal equations for a small rotation
// vector; without them it falls back to the point-to-point SVD update.
Mat3 polish(Mat3 r, const PointCloud& cloud, const std::vector<int>& idx, const KdTree& tree, int iterations) {
  const bool planar = cloud.hasNormals();
  for (int it = 0; it < iterations; ++it) {
    Mat3 next;
    if (planar) {
      Mat3 a = Mat3::Zero();
      Vec3 b = Vec3::Zero();
      for (int i : idx) {
        const Vec3 p = r * cloud.points[static_cast<size_t>(i)];
        const int j = tree.nearest(p).index;
        const Vec3& n = cloud.normals[static_cast<size_t>(j)];
        const Vec3 row = p.cross(n);
        a += row * row.transpose();
        b -= row * (p - cloud.points[static_cast<size_t>(j)]).dot(n);
      }
      a += 1e-9 * (a.trace() + 1.0) * Mat3::Identity();
      const Vec3 w = a.ldlt().solve(b);
      const double angle = w.norm();
      next = angle > 0.0 ? Mat3(axisAngle(w / angle, angle) * r) : r;
    } else {
      Mat3 cross = Mat3::Zero();
      for (int i : idx) {
        const Vec3& p = cloud.points[static_cast<size_t>(i)];
        cross += p * tree.point(tree.nearest(r * p).index).transpose();
      }
      Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Mat3 fix = Mat3::Identity();
      if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) fix(2, 2) = -1.0;
      next = svd.matrixV() * fix * svd.matrixU().transpose();
    }
    const double step = rotationDistance(next, r);
    r = next;
    if (step < 1e-10) break;
  }
  return r;
}

double meanSpacing(const PointCloud& cloud, const KdTree& tree) {
  double sum = 0.0;
  for (const Vec3& p : cloud.points)
    for (const auto& nb : tree.knn(p, 4))
      if (nb.distance > 0.0) {
        sum += nb.distance;
        break;
      }
  return sum / static_cast<double>(cloud.size());
}

}  // namespace

SymmetrySet estimateSymmetries(const PointCloud& cloud, const SymmetryParams& params, double diameter) {
  if (cloud.empty()) throw Error("symmetry estimation on an empty cloud");
  if (!(diameter > 0.0)) diameter = cloudDiameter(cloud);
  const double thr = params.threshold * diameter;
  const KdTree tree(cloud);
  const double accept = std::min(thr, params.spacing_factor * meanSpacing(cloud, tree));
  const std::vector<int> screen = stridedIndices(cloud.size(), params.screen_points);
  const std::vector<int> fine = stridedIndices(cloud.size(), params.polish_points);

  struct Found {
    Mat3 rotation;
    double score;
  };
  // Screen the whole sample, then polish only the best sample of each
  // cluster: survivors closer than cluster_degrees to a better one are
  // assumed to fall into the same basin.
  std::vector<Found> seeds;
  for (const Mat3& r : sampleRotations(params.n_rotations)) {
    const double s = oneSided(r, cloud, screen, tree, params.coarse_factor * thr);
    if (s <= params.coarse_factor * thr) seeds.push_back({r, s});
  }
  std::stable_sort(seeds.begin(), seeds.end(), [](const Found& a, const Found& b) { return a.score < b.score; });
  const double cluster = params.cluster_degrees * M_PI / 180.0;
  std::vector<Found> found;
  found.push_back({Mat3::Identity(), 0.0});
  std::vector<Mat3> centers;
  for (const auto& seed : seeds) {
    bool covered = false;
    for (const auto& c : centers)
      if (rotationDistance(c, seed.rotation) < cluster) {
        covered = true;
        break;
      }
    if (covered) continue;
    centers.push_back(seed.rotation);
    const Mat3 p = polish(seed.rotation, cloud, fine, tree, params.polish_iterations);
    const double score = oneSided(p, cloud, fine, tree, std::numeric_limits<double>::infinity());
    if (score <= 2.0 * thr) found.push_back({p, score});
  }
  // Identity first, then best fit; greedy dedup keeps the better member.
  std::stable_sort(found.begin() + 1, found.end(),
                   [](const Found& a, const Found& b) { return a.score < b.score; });
  const double dedup = params.dedup_degrees * M_PI / 180.0;

  SymmetrySet out = SymmetrySet::identityOnly();
  for (size_t i = 1; i < found.size(); ++i) {
    bool duplicate = false;
    for (const auto& kept : out.rotations)
      if (rotationDistance(kept.rotation, found[i].rotation) < dedup) {
        duplicate = true;
        break;
      }
    if (duplicate) continue;
    const double c =
        chamferDistance(transformCloud(cloud, RigidTransform::fromRotation(found[i].rotation)), cloud);
    if (c > accept) continue;
    out.rotations.push_back(RigidTransform::fromRotation(found[i].rotation));
    out.chamfer.push_back(c);
  }
  return out;
}

int selectSymmetry(std::span<const double> scores, double tie_tolerance) {
  if (scores.empty()) throw Error("no symmetry scores");
  const double best = *std::max_element(scores.begin(), scores.end());
  for (size_t i = 0; i < scores.size(); ++i)
    if (scores[i] >= best - tie_tolerance) return static_cast<int>(i);
  return 0;
}

double patchCosineScore(const PatchFeatureGrid& a, const PatchFeatureGrid& b, double min_coverage) {
  if (a.rows != b.rows || a.cols != b.cols || a.channels != b.channels)
    throw Error("patch grids have different layouts");
  double sum = 0.0;
  int used = 0;
  for (int r = 0; r < a.rows; ++r)
    for (int c = 0; c < a.cols; ++c) {
      const size_t cell = static_cast<size_t>(r) * a.cols + c;
      if (a.hasCoverage() && a.coverage[cell] <= min_coverage) continue;
      if (b.hasCoverage() && b.coverage[cell] <= min_coverage) continue;
      const float* x = a.cell(r, c);
      const float* y = b.cell(r, c);
      double dot = 0.0, nx = 0.0, ny = 0.0;
      for (int k = 0; k < a.channels; ++k) {
        dot += static_cast<double>(x[k]) * y[k];
        nx += static_cast<double>(x[k]) * x[k];
        ny += static_cast<double>(y[k]) * y[k];
      }
      if (nx <= 0.0 || ny <= 0.0) continue;
      sum += dot / std::sqrt(nx * ny);
      ++used;
    }
  return used > 0 ? sum / used : -1.0;
}

SarResult symmetryAwareRefine(const TriangleMesh& mesh, const RigidTransform& pose,
                              const SymmetrySet& symmetries, const PatchFeatureGrid& target_grid,
                              const CameraIntrinsics& intrinsics, const PixelRect& bbox,
                              const VisualEncoder& encoder) {
  if (symmetries.rotations.empty()) throw Error("empty symmetry set");
  SarResult result;
  result.transform = pose;
  if (symmetries.size() == 1) {
    result.scores.push_back(1.0);
    return result;
  }
  for (const auto& s : symmetries.rotations) {
    const TemplateView view = render(mesh, pose * s, intrinsics);
    if (std::find(view.mask.data.begin(), view.mask.data.end(), 1) == view.mask.data.end()) {
      result.scores.push_back(-1.0);
      continue;
    }
    const EncodedCrop enc = encodeCrop(encoder, view.rgb, view.mask, bbox, target_grid.crop_size);
    result.scores.push_back(patchCosineScore(enc.grid, target_grid));
  }
  result.selected = selectSymmetry(result.scores);
  result.transform = pose * symmetries.rotations[static_cast<size_t>(result.selected)];
  return result;
}

}  // namespace posekit
