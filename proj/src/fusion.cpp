#include <posekit/fusion.hpp>

namespace posekit {

FeatureSet fuse(const FeatureSet& visual, const FeatureSet& geometric, const FusionWeights& weights) {
  if (visual.rows() != geometric.rows()) throw Error("row count mismatch");
  if (visual.aligned_to != 0 && geometric.aligned_to != 0 && visual.aligned_to != geometric.aligned_to)
    throw Error("feature sets are aligned to different clouds");
  if (weights.visual < 0.0 || weights.geometric < 0.0) throw Error("fusion weights must be non-negative");

  const int dv = visual.dim(), dg = geometric.dim();
  FeatureSet out(visual.rows(), dv + dg, visual.aligned_to ? visual.aligned_to : geometric.aligned_to);
  for (size_t i = 0; i < out.rows(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double nv = visual.features.row(row).cast<double>().norm();
    const double ng = geometric.features.row(row).cast<double>().norm();
    const bool v_ok = visual.valid[i] && nv > 0.0;
    const bool g_ok = geometric.valid[i] && ng > 0.0;
    if ((weights.visual > 0.0 && !v_ok) || (weights.geometric > 0.0 && !g_ok) ||
        (weights.visual == 0.0 && weights.geometric == 0.0)) {
      out.valid[i] = 0;
      continue;
    }
    if (weights.visual > 0.0)
      out.features.row(row).head(dv) =
          (visual.features.row(row).cast<double>() * (weights.visual / nv)).cast<float>();
    if (weights.geometric > 0.0)
      out.features.row(row).tail(dg) =
          (geometric.features.row(row).cast<double>() * (weights.geometric / ng)).cast<float>();
  }
  return out;
}

}  // namespace posekit
