#include <posekit/metrics.hpp>
#include <posekit/render.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace posekit {

namespace {

const SymmetrySet& symmetriesOf(const GroundTruthAnnotation& gt) {
  static const SymmetrySet identity = SymmetrySet::identityOnly();
  return gt.symmetries.rotations.empty() ? identity : gt.symmetries;
}

}  // namespace

double mssd(const RigidTransform& pred, const GroundTruthAnnotation& gt, const PointCloud& model) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : symmetriesOf(gt).rotations) {
    const RigidTransform g = gt.pose * s;
    double worst = 0.0;
    for (const auto& x : model.points) worst = std::max(worst, (pred.apply(x) - g.apply(x)).norm());
    best = std::min(best, worst);
  }
  return best;
}

double mspd(const RigidTransform& pred, const GroundTruthAnnotation& gt, const PointCloud& model,
            const CameraIntrinsics& intrinsics) {
  for (const auto& x : model.points)
    if (!(pred.apply(x).z() > 0.0)) throw Error("point behind camera");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : symmetriesOf(gt).rotations) {
    const RigidTransform g = gt.pose * s;
    double worst = 0.0;
    for (const auto& x : model.points) {
      const Vec3 pg = g.apply(x);
      if (!(pg.z() > 0.0)) throw Error("point behind camera");
      worst = std::max(worst, (intrinsics.project(pred.apply(x)) - intrinsics.project(pg)).norm());
    }
    best = std::min(best, worst);
  }
  return best;
}

std::vector<double> vsdSweep(const RigidTransform& pred, const GroundTruthAnnotation& gt,
                             const TriangleMesh& mesh, const CameraIntrinsics& intrinsics,
                             const std::vector<double>& taus, const DepthImage* scene_depth,
                             double delta) {
  const TemplateView est = render(mesh, pred, intrinsics);
  const TemplateView ref = render(mesh, gt.pose, intrinsics);
  const size_t n = est.depth.data.size();

  std::vector<std::uint8_t> vis_gt(n), vis_est(n);
  for (size_t i = 0; i < n; ++i) {
    const double dg = ref.depth.data[i], de = est.depth.data[i];
    if (!scene_depth) {
      vis_gt[i] = dg > 0.0;
      vis_est[i] = de > 0.0;
      continue;
    }
    const double ds = scene_depth->data[i];
    // A model pixel is visible when nothing in the scene sits in front of it
    // (or the scene has no measurement there).
    vis_gt[i] = dg > 0.0 && (ds == 0.0 || dg - ds <= delta);
    vis_est[i] = (de > 0.0 && (ds == 0.0 || de - ds <= delta)) || (vis_gt[i] && de > 0.0);
  }

  size_t uni = 0;
  for (size_t i = 0; i < n; ++i) uni += (vis_gt[i] || vis_est[i]) ? 1 : 0;
  if (uni == 0) throw Error("object out of view");

  std::vector<double> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    size_t bad = 0;
    for (size_t i = 0; i < n; ++i) {
      if (vis_gt[i] != vis_est[i]) {
        ++bad;
      } else if (vis_gt[i] && std::abs(est.depth.data[i] - ref.depth.data[i]) > tau) {
        ++bad;
      }
    }
    out.push_back(static_cast<double>(bad) / static_cast<double>(uni));
  }
  return out;
}

double vsd(const RigidTransform& pred, const GroundTruthAnnotation& gt, const TriangleMesh& mesh,
           const CameraIntrinsics& intrinsics, double tau, const DepthImage* scene_depth, double delta) {
  return vsdSweep(pred, gt, mesh, intrinsics, {tau}, scene_depth, delta).front();
}

double recallAt(const std::vector<double>& errors, double threshold) {
  if (errors.empty()) return 0.0;
  const auto hits = std::count_if(errors.begin(), errors.end(), [&](double e) { return e < threshold; });
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

RecallSummary averageRecall(const std::vector<ErrorRecord>& records, double diameter, int image_width,
                            const RecallGrids& grids) {
  if (records.empty()) throw Error("no error records");
  RecallSummary s;
  std::vector<double> e_mssd, e_mspd;
  for (const auto& r : records) {
    e_mssd.push_back(r.mssd);
    e_mspd.push_back(r.mspd);
    if (r.vsd.size() != grids.vsd_tau.size()) throw Error("VSD values do not match the tau grid");
  }
  auto mean = [](const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return v.empty() ? 0.0 : sum / v.size();
  };

  for (double th : grids.mssd) s.mssd_recall.push_back(recallAt(e_mssd, th * diameter));
  const double px = image_width / 640.0;
  for (double th : grids.mspd) s.mspd_recall.push_back(recallAt(e_mspd, th * px));
  for (size_t t = 0; t < grids.vsd_tau.size(); ++t) {
    std::vector<double> e_vsd;
    for (const auto& r : records) e_vsd.push_back(r.vsd[t]);
    for (double th : grids.vsd_theta) s.vsd_recall.push_back(recallAt(e_vsd, th));
  }
  s.ar_mssd = mean(s.mssd_recall);
  s.ar_mspd = mean(s.mspd_recall);
  s.ar_vsd = mean(s.vsd_recall);
  s.ar = (s.ar_vsd + s.ar_mssd + s.ar_mspd) / 3.0;
  return s;
}

void writeMetricReport(const std::filesystem::path& csv_path, const std::filesystem::path& json_path,
                       const std::vector<ErrorRecord>& records, const RecallSummary& summary,
                       const RecallGrids& grids, double diameter, int image_width) {
  std::ofstream csv(csv_path);
  if (!csv) throw Error("cannot open " + csv_path.string() + " for writing");
  csv.precision(10);
  csv << "instance,metric,value\n";
  for (const auto& r : records) {
    csv << r.instance << ",mssd," << r.mssd << "\n";
    csv << r.instance << ",mspd," << r.mspd << "\n";
    for (size_t t = 0; t < r.vsd.size(); ++t)
      csv << r.instance << ",vsd_full@" << grids.vsd_tau[t] << "," << r.vsd[t] << "\n";
  }

  nlohmann::json j;
  j["vsd_variant"] = "VSD-full";
  j["diameter_m"] = diameter;
  j["image_width"] = image_width;
  j["grids"] = {{"mssd_fraction_of_diameter", grids.mssd},
                {"mspd_pixels_at_640", grids.mspd},
                {"vsd_tau_fraction_of_diameter", grids.vsd_tau},
                {"vsd_theta", grids.vsd_theta}};
  j["instances"] = records.size();
  j["recall"] = {{"mssd", summary.mssd_recall}, {"mspd", summary.mspd_recall}, {"vsd", summary.vsd_recall}};
  j["AR_VSD"] = summary.ar_vsd;
  j["AR_MSSD"] = summary.ar_mssd;
  j["AR_MSPD"] = summary.ar_mspd;
  j["AR"] = summary.ar;
  std::ofstream js(json_path);
  if (!js) throw Error("cannot open " + json_path.string() + " for writing");
  js << j.dump(2) << "\n";
}

}  // namespace posekit
