#include <posekit/geometry.hpp>
#include <posekit/pipeline.hpp>
#include <posekit/render.hpp>
#include <posekit/rng.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

namespace posekit {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

class StageClock {
 public:
  explicit StageClock(StageTimings* sink) : sink_(sink), last_(Clock::now()) {}
  /// Charges the time since the previous lap to `name`.
  void lap(const std::string& name) {
    const auto now = Clock::now();
    if (sink_) sink_->add(name, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

 private:
  StageTimings* sink_;
  Clock::time_point last_;
};

std::string indexed(const char* prefix, int k) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d.frzf", prefix, k);
  return buf;
}

std::uint64_t maskFingerprint(const MaskImage& mask) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(static_cast<std::uint64_t>(mask.width));
  mix(static_cast<std::uint64_t>(mask.height));
  for (size_t i = 0; i < mask.data.size(); ++i)
    if (mask.data[i]) mix(i);
  return h;
}

MaskImage boxMask(const MaskImage& like, const PixelRect& box) {
  MaskImage out(like.width, like.height, 1, 0);
  for (int y = box.y; y < box.y + box.height; ++y)
    for (int x = box.x; x < box.x + box.width; ++x)
      if (out.contains(x, y)) out.at(x, y) = 1;
  return out;
}

/// Sorted random subset of [0, n) of size min(m, n).
std::vector<int> sampleIndices(size_t n, size_t m, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (m >= n) return idx;
  SplitMix64 rng(seed);
  for (size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Crop-space grid to a per-pixel map in source image coordinates.
FeatureMap gridToImage(const PatchFeatureGrid& grid, const CropMapping& mapping, const MaskImage& mask) {
  const FeatureMap crop = patchesToPixels(grid, mapping.size, mapping.size);
  return uncropFeatures(crop, mapping, mask);
}

CropMapping cropMappingFor(const MaskImage& mask, const PixelRect& bbox, int crop_size) {
  return cropToBbox(maskToFloat(mask), bbox, crop_size).mapping;
}

}  // namespace

RefineMode parseRefineMode(const std::string& text) {
  if (text == "none") return RefineMode::None;
  if (text == "icp") return RefineMode::Icp;
  if (text == "icp+sar") return RefineMode::IcpSar;
  throw Error("unknown refine mode '" + text + "' (expected none, icp or icp+sar)");
}

std::string toString(RefineMode mode) {
  switch (mode) {
    case RefineMode::None: return "none";
    case RefineMode::Icp: return "icp";
    case RefineMode::IcpSar: return "icp+sar";
  }
  return "none";
}

void PipelineConfig::validate() const {
  if (n_query < 1 || m_target < 1 || n_views < 1) throw Error("sample and view counts must be at least 1");
  if (!(camera_distance > 0.0) || template_size < 8 || !(template_fill > 0.0))
    throw Error("invalid template camera settings");
  geometric.validate();
  if (visual.grid_p < 1 || visual.crop_size < visual.grid_p || visual.pca_dim < 1 || !(visual.accept_radius > 0.0))
    throw Error("invalid visual encoder settings");
  if (visual.kind == VisualEncoderConfig::Kind::External && visual.external_dir.empty())
    throw Error("external visual features need a directory");
  if (fusion.visual < 0.0 || fusion.geometric < 0.0 || (fusion.visual == 0.0 && fusion.geometric == 0.0))
    throw Error("fusion weights must be non-negative and not both zero");
  ransac.validate();
  if (icp.max_iterations < 0 || !(icp.corr_dist > 0.0) || icp.eps < 0.0 || icp.model_points < 1 || icp.stages < 1 || icp.stages > 8)
    throw Error("invalid ICP settings");
  if (top_k < 1) throw Error("top_k must be at least 1");
  if (target_normal_k < 3) throw Error("target_normal_k must be at least 3");
}

void StageTimings::add(const std::string& name, double seconds) {
  stages.emplace_back(name, seconds);
}

double StageTimings::sum() const {
  double s = 0.0;
  for (const auto& [name, t] : stages) s += t;
  return s;
}

double StageTimings::get(const std::string& name) const {
  double s = 0.0;
  for (const auto& [n, t] : stages)
    if (n == name) s += t;
  return s;
}

std::unique_ptr<VisualEncoder> makeVisualEncoder(const PipelineConfig& cfg) {
  return std::make_unique<RgbPatchEncoder>(cfg.visual.grid_p);
}

std::vector<TemplateView> renderTemplates(const TriangleMesh& mesh, const PipelineConfig& cfg, double diameter) {
  const double distance = cfg.camera_distance * diameter;
  const CameraIntrinsics k = templateCamera(cfg.template_size, diameter, distance, cfg.template_fill);
  std::vector<TemplateView> views;
  views.reserve(static_cast<size_t>(cfg.n_views));
  for (const auto& pose : sampleViewpoints(cfg.n_views, distance)) views.push_back(render(mesh, pose, k));
  return views;
}

QueryModel prepareQuery(const TriangleMesh& mesh, const PipelineConfig& cfg) {
  cfg.validate();
  mesh.validate();
  QueryModel q;
  StageClock clock(&q.timings);
  const auto start = Clock::now();

  q.mesh = mesh;
  q.diameter = meshDiameter(mesh);
  if (!(q.diameter > 0.0)) throw Error("empty mesh");
  q.cloud = sampleSurface(mesh, static_cast<size_t>(cfg.n_query), cfg.seed);
  if (cfg.refine != RefineMode::None)
    q.dense_cloud = sampleSurface(mesh, static_cast<size_t>(cfg.icp.model_points), cfg.seed + 1);
  clock.lap("query_sample");

  GeometricEncoderConfig geo = cfg.geometric;
  if (geo.kind == GeometricEncoderConfig::Kind::External) geo.external_path = cfg.geometric.external_path / "query_geo.frzf";
  q.geometric = encodeMultiscale(q.cloud, geo, q.diameter);
  clock.lap("query_geometric");

  const double distance = cfg.camera_distance * q.diameter;
  q.template_intrinsics = templateCamera(cfg.template_size, q.diameter, distance, cfg.template_fill);
  if (cfg.fusion.visual > 0.0) {
    const std::vector<TemplateView> views = renderTemplates(mesh, cfg, q.diameter);
    clock.lap("query_render");

    const auto encoder = makeVisualEncoder(cfg);
    std::vector<FeatureMap> maps;
    maps.reserve(views.size());
    for (size_t r = 0; r < views.size(); ++r) {
      const TemplateView& v = views[r];
      const PixelRect box = maskBounds(v.mask);
      if (box.empty()) {
        maps.emplace_back(v.mask.width, v.mask.height, encoder->channels());
        continue;
      }
      if (cfg.visual.kind == VisualEncoderConfig::Kind::External) {
        const PatchFeatureGrid grid =
            loadPatchGrid(cfg.visual.external_dir / indexed("view", static_cast<int>(r)), cfg.visual.crop_size);
        maps.push_back(gridToImage(grid, cropMappingFor(v.mask, box, cfg.visual.crop_size), v.mask));
      } else {
        const EncodedCrop enc = encodeCrop(*encoder, v.rgb, v.mask, box, cfg.visual.crop_size);
        maps.push_back(gridToImage(enc.grid, enc.mapping, v.mask));
      }
    }
    clock.lap("query_visual");

    const FeatureSet raw = backprojectQueryFeatures(views, maps, q.cloud, cfg.visual.accept_radius * q.diameter);
    if (raw.validCount() == 0) throw Error("object invisible in all views");
    clock.lap("query_backproject");

    std::vector<int> rows;
    for (size_t i = 0; i < raw.rows(); ++i)
      if (raw.valid[i]) rows.push_back(static_cast<int>(i));
    const FeatureSet valid_rows = raw.subset(rows);
    const Eigen::MatrixXd samples = valid_rows.features.cast<double>();
    const int v = std::min(cfg.visual.pca_dim, raw.dim());
    try {
      if (static_cast<Eigen::Index>(rows.size()) > v) q.pca = fitPcaUpTo(samples, v);
    } catch (const Error&) {
      q.pca.reset();  // no colour variation: keep raw features
    }
    q.visual = q.pca ? applyPca(*q.pca, raw) : raw;
    clock.lap("query_pca");
  } else {
    q.visual = FeatureSet(q.cloud.size(), 0, q.geometric.aligned_to);
  }

  q.fused = fuse(q.visual, q.geometric, cfg.fusion);
  clock.lap("query_fuse");

  if (cfg.refine == RefineMode::IcpSar) {
    q.symmetries = estimateSymmetries(q.cloud, cfg.symmetry, q.diameter);
    clock.lap("query_symmetry");
  }
  q.timings.total = std::chrono::duration<double>(Clock::now() - start).count();
  return q;
}

namespace {

TargetFeatures prepareTargetTimed(const ScenePacket& packet, int candidate_index, const QueryModel& query,
                                  const PipelineConfig& cfg, StageClock& clock) {
  const Candidate& cand = packet.candidates.at(static_cast<size_t>(candidate_index));
  if (cand.bbox.empty()) throw Error("empty mask");
  const MaskImage mask = cfg.bbox_prior ? boxMask(cand.mask, cand.bbox) : cand.mask;
  const std::uint64_t fingerprint = maskFingerprint(cand.mask);

  BackprojectedCloud bp = backprojectDepthIndexed(packet.depth, mask, packet.intrinsics);
  if (bp.cloud.size() < 3) throw Error("fewer than 3 depth points under the mask");
  // Normals come from the full-resolution cloud, before subsampling.
  if (cfg.geometric.kind == GeometricEncoderConfig::Kind::Fpfh)
    estimateNormals(bp.cloud, cfg.target_normal_k, Vec3::Zero());
  const std::vector<int> idx = sampleIndices(bp.cloud.size(), static_cast<size_t>(cfg.m_target), cfg.seed ^ fingerprint);

  TargetFeatures t;
  t.bbox = cand.bbox;
  t.cloud = bp.cloud.subset(idx);
  const std::uint64_t cloud_id = cloudFingerprint(t.cloud);
  clock.lap("target_backproject");

  const bool want_grid = cfg.refine == RefineMode::IcpSar && query.symmetries.size() > 1;
  if (cfg.fusion.visual > 0.0 || want_grid) {
    const auto encoder = makeVisualEncoder(cfg);
    const EncodedCrop enc = encodeCrop(*encoder, packet.rgb, mask, cand.bbox, cfg.visual.crop_size);
    t.grid = enc.grid;
    if (cfg.fusion.visual > 0.0) {
      FeatureMap map;
      if (cfg.visual.kind == VisualEncoderConfig::Kind::External) {
        const PatchFeatureGrid grid =
            loadPatchGrid(cfg.visual.external_dir / indexed("target", candidate_index), cfg.visual.crop_size);
        map = gridToImage(grid, enc.mapping, mask);
      } else {
        map = gridToImage(enc.grid, enc.mapping, mask);
      }
      const FeatureSet full = transferTargetFeatures(map, mask, packet.depth, bp.cloud);
      const FeatureSet sampled = full.subset(idx, cloud_id);
      t.visual = query.pca ? applyPca(*query.pca, sampled) : sampled;
    }
    clock.lap("target_visual");
  }
  if (cfg.fusion.visual == 0.0) t.visual = FeatureSet(t.cloud.size(), 0, cloud_id);

  GeometricEncoderConfig geo = cfg.geometric;
  if (geo.kind == GeometricEncoderConfig::Kind::External)
    geo.external_path = cfg.geometric.external_path / indexed("target_geo", candidate_index);
  t.geometric = encodeMultiscale(t.cloud, geo, query.diameter);
  t.geometric.aligned_to = cloud_id;
  clock.lap("target_geometric");

  t.fused = fuse(t.visual, t.geometric, cfg.fusion);
  clock.lap("target_fuse");
  return t;
}

RefinedPose refineTimed(const TargetFeatures& t, const QueryModel& query, const CameraIntrinsics& intrinsics,
                        const PipelineConfig& cfg, const RigidTransform& init, StageClock& clock) {
  RefinedPose out;
  out.transform = init;
  if (cfg.refine == RefineMode::None) return out;
  if (query.dense_cloud.empty()) throw Error("query prepared without a dense cloud for ICP");
  const double corr = cfg.icp.corr_dist * query.diameter;
  // Observed points all lie on the model, so align them onto the dense model cloud.
  // Coarse-to-fine: the correspondence radius halves each stage down to corr_dist.
  auto icp = [&](const RigidTransform& start) {
    RigidTransform current = start.inverse();
    for (int stage = cfg.icp.stages - 1; stage >= 0; --stage) {
      const double radius = corr * static_cast<double>(1 << stage);
      current = icpRefine(t.cloud, query.dense_cloud, current, cfg.icp.max_iterations, radius, cfg.icp.eps).transform;
    }
    return current.inverse();
  };
  out.transform = icp(init);
  clock.lap("icp");

  if (cfg.refine == RefineMode::IcpSar && query.symmetries.size() > 1) {
    if (t.grid.rows == 0) throw Error("target features carry no patch grid for symmetry-aware refinement");
    const auto encoder = makeVisualEncoder(cfg);
    const SarResult sar =
        symmetryAwareRefine(query.mesh, out.transform, query.symmetries, t.grid, intrinsics, t.bbox, *encoder);
    out.sar_selected = sar.selected;
    out.sar_scores = sar.scores;
    clock.lap("sar");
    if (sar.selected != 0) {
      out.transform = icp(sar.transform);
      clock.lap("icp");
    }
  }
  return out;
}

}  // namespace

TargetFeatures prepareTarget(const ScenePacket& packet, int candidate_index, const QueryModel& query,
                             const PipelineConfig& cfg, StageTimings* timings) {
  StageClock clock(timings);
  return prepareTargetTimed(packet, candidate_index, query, cfg, clock);
}

RefinedPose refinePose(const TargetFeatures& target, const QueryModel& query, const CameraIntrinsics& intrinsics,
                       const PipelineConfig& cfg, const RigidTransform& init, StageTimings* timings) {
  StageClock clock(timings);
  return refineTimed(target, query, intrinsics, cfg, init, clock);
}

PoseResult estimatePose(const ScenePacket& packet, const QueryModel& query, const PipelineConfig& cfg) {
  const auto start = Clock::now();
  cfg.validate();
  packet.validate();
  if (packet.candidates.empty()) throw Error("no candidates");

  PoseResult result;
  StageClock clock(&result.timings);

  std::vector<int> order(packet.candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return packet.candidates[static_cast<size_t>(a)].score > packet.candidates[static_cast<size_t>(b)].score;
  });
  if (order.size() > static_cast<size_t>(cfg.top_k)) order.resize(static_cast<size_t>(cfg.top_k));
  std::sort(order.begin(), order.end());

  std::vector<PoseEstimate> estimates;
  std::vector<TargetFeatures> targets(packet.candidates.size());
  for (int k : order) {
    CandidateReport report;
    report.index = k;
    report.score = packet.candidates[static_cast<size_t>(k)].score;
    if (packet.candidates[static_cast<size_t>(k)].bbox.empty()) {
      report.status = "skipped: empty mask";
      result.candidates.push_back(report);
      continue;
    }
    clock.lap("overhead");
    try {
      targets[static_cast<size_t>(k)] = prepareTargetTimed(packet, k, query, cfg, clock);
      const TargetFeatures& t = targets[static_cast<size_t>(k)];
      const auto matches = matchFeatures(query.fused, t.fused, cfg.mutual_matching);
      clock.lap("match");
      RansacParams rp = cfg.ransac;
      rp.seed = cfg.ransac.seed ^ cfg.seed ^ maskFingerprint(packet.candidates[static_cast<size_t>(k)].mask);
      PoseEstimate est = ransacRegister(query.cloud, t.cloud, matches, query.diameter, rp);
      clock.lap("ransac");
      est.candidate = k;
      report.status = "ok";
      report.inliers = est.inliers;
      report.fitness = est.fitness;
      estimates.push_back(est);
    } catch (const Error& e) {
      clock.lap("failed_candidate");
      report.status = std::string("failed: ") + e.what();
    }
    result.candidates.push_back(report);
  }
  if (estimates.empty()) throw PipelineError("registration failed", result.candidates);
  result.coarse = selectCandidate(estimates);
  clock.lap("select");

  if (cfg.refine != RefineMode::None) {
    const RefinedPose r = refineTimed(targets[static_cast<size_t>(result.coarse.candidate)], query,
                                      packet.intrinsics, cfg, result.coarse.transform, clock);
    result.refined = r.transform;
    result.has_refined = true;
    result.sar_selected = r.sar_selected;
  }
  clock.lap("overhead");
  result.timings.total = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

PoseResult estimatePose(const ScenePacket& packet, const TriangleMesh& mesh, const PipelineConfig& cfg) {
  const auto start = Clock::now();
  const QueryModel query = prepareQuery(mesh, cfg);
  PoseResult result = estimatePose(packet, query, cfg);
  StageTimings merged = query.timings;
  for (const auto& s : result.timings.stages) merged.stages.push_back(s);
  merged.total = std::chrono::duration<double>(Clock::now() - start).count();
  result.timings = merged;
  return result;
}

}  // namespace posekit
