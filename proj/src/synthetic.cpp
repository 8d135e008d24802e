#include <posekit/geometry.hpp>
#include <posekit/render.hpp>
#include <posekit/rng.hpp>
#include <posekit/synthetic.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace posekit {

SyntheticScene generateSyntheticScene(const TriangleMesh& mesh, const RigidTransform& pose,
                                      const CameraIntrinsics& intrinsics, double noise_sigma,
                                      double occlusion_fraction, std::uint64_t seed) {
  mesh.validate();
  intrinsics.validate();
  if (!(noise_sigma >= 0.0)) throw Error("noise sigma must be non-negative");
  if (!(occlusion_fraction >= 0.0 && occlusion_fraction <= 1.0)) throw Error("occlusion fraction must be in [0, 1]");
  for (const auto& v : mesh.vertices) {
    const Vec3 p = pose.apply(v);
    if (!(p.z() > 0.0)) throw Error("object out of frustum");
    const Vec2 uv = intrinsics.project(p);
    if (uv.x() < -0.5 || uv.y() < -0.5 || uv.x() > intrinsics.width - 0.5 || uv.y() > intrinsics.height - 0.5)
      throw Error("object out of frustum");
  }

  TemplateView view = render(mesh, pose, intrinsics);
  SyntheticScene out;
  out.full_mask = view.mask;

  std::vector<int> fg;
  for (size_t i = 0; i < view.mask.data.size(); ++i)
    if (view.mask.data[i]) fg.push_back(static_cast<int>(i));
  if (fg.empty()) throw Error("object out of frustum");

  SplitMix64 rng(seed);
  out.cut_angle = 2.0 * M_PI * rng.uniform();
  const Vec2 dir(std::cos(out.cut_angle), std::sin(out.cut_angle));
  Vec2 centroid = Vec2::Zero();
  for (int i : fg) centroid += Vec2(i % view.mask.width, i / view.mask.width);
  centroid /= static_cast<double>(fg.size());

  // Hide the pixels furthest along `dir`; ties resolve by pixel index.
  const size_t hidden = static_cast<size_t>(std::lround(occlusion_fraction * fg.size()));
  std::vector<double> along(fg.size());
  for (size_t k = 0; k < fg.size(); ++k)
    along[k] = (Vec2(fg[k] % view.mask.width, fg[k] / view.mask.width) - centroid).dot(dir);
  std::vector<size_t> order(fg.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return along[a] > along[b]; });

  MaskImage visible = view.mask;
  for (size_t k = 0; k < hidden; ++k) {
    const size_t px = static_cast<size_t>(fg[order[k]]);
    visible.data[px] = 0;
    view.depth.data[px] *= 0.9;
    for (int c = 0; c < 3; ++c) view.rgb.data[px * 3 + static_cast<size_t>(c)] = 0.5f;
  }

  const double sigma = noise_sigma * meshDiameter(mesh);
  if (sigma > 0.0) {
    SplitMix64 noise = streamFor(seed, 1);
    for (int i : fg) view.depth.data[static_cast<size_t>(i)] += sigma * gaussian(noise);
  }

  ScenePacket& p = out.packet;
  p.rgb = std::move(view.rgb);
  p.depth = std::move(view.depth);
  p.intrinsics = intrinsics;
  p.candidates.push_back(Candidate::fromMask(visible, 1.0));
  GroundTruthAnnotation gt;
  gt.pose = pose;
  gt.visibility = static_cast<double>(fg.size() - hidden) / static_cast<double>(fg.size());
  p.ground_truth.push_back(gt);
  return out;
}

RigidTransform randomPose(std::uint64_t seed, double distance, double lateral) {
  SplitMix64 rng(seed);
  Eigen::Quaterniond q(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
  q.normalize();
  const double dx = lateral * (2.0 * rng.uniform() - 1.0);
  const double dy = lateral * (2.0 * rng.uniform() - 1.0);
  return {q.toRotationMatrix(), Vec3(dx, dy, distance)};
}

}  // namespace posekit
