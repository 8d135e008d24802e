#include <posekit/bop.hpp>
#include <posekit/frzf.hpp>
#include <posekit/geometry.hpp>
#include <posekit/image_io.hpp>
#include <posekit/mesh_io.hpp>
#include <posekit/metrics.hpp>
#include <posekit/pipeline.hpp>
#include <posekit/render.hpp>
#include <posekit/shapes.hpp>
#include <posekit/synthetic.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace posekit;

namespace {

std::vector<std::string> splitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string padded(int value, int width = 6) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d", width, value);
  return buf;
}

/// Options shared by subcommands that build a PipelineConfig.
struct ConfigOptions {
  std::string config_path;
  std::string geo;
  std::string vis;
  std::string refine;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // key=value

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Flat key-value config file")->check(CLI::ExistingFile);
    app->add_option("--geo", geo, "Geometric features: fpfh or external:PATH");
    app->add_option("--vis", vis, "Visual features: rgb or external:PATH");
    app->add_option("--refine", refine, "none, icp or icp+sar");
    app->add_option("--seed", seed, "Pipeline seed");
    app->add_option("--set", overrides, "Extra config override key=value (repeatable)");
  }

  PipelineConfig build() const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : loadConfig(config_path);
    if (!geo.empty()) setConfigValue(cfg, "geometric", geo);
    if (!vis.empty()) setConfigValue(cfg, "visual", vis);
    if (!refine.empty()) setConfigValue(cfg, "refine", refine);
    if (seed) cfg.seed = *seed;
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("override '" + kv + "' is not key=value");
      setConfigValue(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

/// Where the observation comes from: loose files or a BOP scene directory.
struct SceneOptions {
  std::string rgb, depth, cam, masks, scores;
  std::string bop_root;
  int scene_id = 0;
  std::string images = "0";
  int obj_id = 0;

  void attach(CLI::App* app) {
    app->add_option("--rgb", rgb, "RGB PNG");
    app->add_option("--depth", depth, "16-bit depth PNG (units from --cam depth_scale)");
    app->add_option("--cam", cam, "Camera JSON: cam_K and depth_scale, or a scene_camera.json");
    app->add_option("--masks", masks, "Candidate mask directory (*.png, sorted) or comma-separated PNGs");
    app->add_option("--scores", scores, "Comma-separated candidate scores (default 1 each)");
    app->add_option("--bop", bop_root, "BOP dataset split root instead of loose files");
    app->add_option("--scene", scene_id, "BOP scene id");
    app->add_option("--image", images, "BOP image ids: comma list or 'all'");
    app->add_option("--obj-id", obj_id, "Object id written to results (and BOP model selector)");
  }

  bool hasLooseFiles() const { return !rgb.empty() || !depth.empty(); }

  std::vector<int> imageIds() const {
    if (images != "all") {
      std::vector<int> out;
      for (const auto& s : splitList(images)) out.push_back(std::stoi(s));
      return out;
    }
    std::vector<int> out;
    const fs::path dir = fs::path(bop_root) / padded(scene_id) / "rgb";
    if (!fs::is_directory(dir)) throw Error("missing directory " + dir.string());
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".png") out.push_back(std::stoi(e.path().stem().string()));
    std::sort(out.begin(), out.end());
    return out;
  }

  ScenePacket loadLoose() const {
    if (rgb.empty() || depth.empty() || cam.empty()) throw Error("--rgb, --depth and --cam are required together");
    const BopCamera camera = readCameraFile(cam);
    ScenePacket p;
    p.rgb = loadRgbPng(rgb);
    p.depth = depthFromRaw(readPng(depth), camera.depth_scale);
    p.intrinsics = camera.intrinsics;
    p.intrinsics.width = p.depth.width;
    p.intrinsics.height = p.depth.height;
    std::vector<fs::path> files;
    if (!masks.empty() && fs::is_directory(masks)) {
      for (const auto& e : fs::directory_iterator(masks))
        if (e.path().extension() == ".png") files.push_back(e.path());
      std::sort(files.begin(), files.end());
    } else {
      for (const auto& s : splitList(masks)) files.push_back(s);
    }
    const std::vector<std::string> score_list = splitList(scores);
    if (!score_list.empty() && score_list.size() != files.size())
      throw Error("--scores lists " + std::to_string(score_list.size()) + " values for " +
                  std::to_string(files.size()) + " masks");
    for (size_t k = 0; k < files.size(); ++k)
      p.candidates.push_back(
          Candidate::fromMask(loadMaskPng(files[k]), score_list.empty() ? 1.0 : std::stod(score_list[k]), obj_id));
    p.validate();
    return p;
  }

  /// Keeps only candidates for `obj_id` when the scene labels them.
  ScenePacket loadBop(int image_id) const {
    ScenePacket p = ingestBopScene(bop_root, scene_id, image_id);
    if (obj_id != 0) {
      std::vector<Candidate> keep;
      for (auto& c : p.candidates)
        if (c.object_id == 0 || c.object_id == obj_id) keep.push_back(std::move(c));
      p.candidates = std::move(keep);
    }
    return p;
  }
};

TriangleMesh loadModel(const std::string& model, double scale, const SceneOptions& scene) {
  if (!model.empty()) return loadPly(model, scale);
  if (!scene.bop_root.empty() && scene.obj_id != 0) return loadBopModel(scene.bop_root, scene.obj_id);
  throw Error("--model is required (or --bop with --obj-id)");
}

void printTimings(const StageTimings& t, const std::string& label) {
  std::cerr << label << " total " << t.total << " s\n";
  std::map<std::string, double> merged;
  std::vector<std::string> order;
  for (const auto& [name, s] : t.stages) {
    if (!merged.count(name)) order.push_back(name);
    merged[name] += s;
  }
  for (const auto& name : order) std::cerr << "  " << name << " " << merged[name] << "\n";
}

void printDiagnostics(const std::vector<CandidateReport>& reports) {
  for (const auto& r : reports)
    std::cerr << "  candidate " << r.index << " (score " << r.score << "): " << r.status << "\n";
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions {
  std::string model;
  double model_scale = 0.001;
  std::string out;
  bool deterministic = false;
  bool timings = false;
  int jobs = 1;
};

int runEstimate(const EstimateOptions& o, const SceneOptions& scene, const ConfigOptions& co) {
  const PipelineConfig cfg = co.build();
  const TriangleMesh mesh = loadModel(o.model, o.model_scale, scene);
  const QueryModel query = prepareQuery(mesh, cfg);
  if (o.timings) printTimings(query.timings, "query");

  struct Job {
    int image_id = 0;
    std::optional<ResultRow> row;
    std::string error;
    std::vector<CandidateReport> diagnostics;
    StageTimings timings;
  };
  std::vector<Job> jobs;
  if (scene.hasLooseFiles()) {
    jobs.push_back({});
  } else if (!scene.bop_root.empty()) {
    for (int id : scene.imageIds()) jobs.push_back({id, {}, {}, {}, {}});
  } else {
    throw Error("no observation: give --rgb/--depth/--cam or --bop");
  }

  auto process = [&](Job& job) {
    try {
      const ScenePacket packet = scene.hasLooseFiles() ? scene.loadLoose() : scene.loadBop(job.image_id);
      const auto start = std::chrono::steady_clock::now();
      const PoseResult r = estimatePose(packet, query, cfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      ResultRow row;
      row.scene_id = scene.hasLooseFiles() ? 0 : scene.scene_id;
      row.im_id = job.image_id;
      row.obj_id = scene.obj_id;
      row.score = r.coarse.fitness;
      row.pose = r.best();
      row.time = o.deterministic ? -1.0 : secs;
      job.row = row;
      job.timings = r.timings;
    } catch (const PipelineError& e) {
      job.error = e.what();
      job.diagnostics = e.diagnostics;
    } catch (const Error& e) {
      job.error = e.what();
    }
  };

  // Scenes run on a small worker pool; results are written in input order.
  const int workers = std::max(1, std::min<int>(o.jobs, static_cast<int>(jobs.size())));
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w)
    pool.emplace_back([&] {
      for (size_t i; (i = next++) < jobs.size();) process(jobs[i]);
    });
  for (size_t i; (i = next++) < jobs.size();) process(jobs[i]);
  for (auto& t : pool) t.join();

  std::vector<ResultRow> rows;
  int failures = 0;
  for (const auto& job : jobs) {
    if (job.row) {
      rows.push_back(*job.row);
      if (o.timings) printTimings(job.timings, "image " + std::to_string(job.image_id));
    } else {
      ++failures;
      std::cerr << "image " << job.image_id << ": " << job.error << "\n";
      printDiagnostics(job.diagnostics);
    }
  }
  if (o.out.empty() || o.out == "-") {
    emitResults(rows, std::cout);
  } else {
    emitResults(rows, o.out);
  }
  return failures == 0 ? 0 : 2;
}

// -------------------------------------------------------- render-templates

int runRenderTemplates(const std::string& model, double scale, const std::string& out, const ConfigOptions& co) {
  const PipelineConfig cfg = co.build();
  const TriangleMesh mesh = loadPly(model, scale);
  const double diameter = meshDiameter(mesh);
  const std::vector<TemplateView> views = renderTemplates(mesh, cfg, diameter);
  fs::create_directories(out);
  nlohmann::json meta;
  meta["diameter"] = diameter;
  meta["crop_size"] = cfg.visual.crop_size;
  const CameraIntrinsics& k = views.front().intrinsics;
  meta["cam_K"] = {k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0};
  meta["width"] = k.width;
  meta["height"] = k.height;
  meta["views"] = nlohmann::json::array();
  for (size_t r = 0; r < views.size(); ++r) {
    const TemplateView& v = views[r];
    const std::string stem = "view_" + padded(static_cast<int>(r), 3);
    exportTemplateView(v, out, stem);
    Image<std::uint16_t> mask(v.mask.width, v.mask.height, 1);
    for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = v.mask.data[i] ? 255 : 0;
    writePngGray16(fs::path(out) / (stem + "_mask.png"), mask);
    // Square crop at the encoder input size, as consumed by external encoders.
    const PixelRect box = maskBounds(v.mask);
    if (!box.empty()) {
      const CroppedImage crop = cropToBbox(v.rgb, box, cfg.visual.crop_size);
      RgbImage rgb(crop.image.width, crop.image.height, 3);
      rgb.data = crop.image.data;
      writePngRgb(fs::path(out) / (stem + "_crop.png"), rgb);
    }
    nlohmann::json pose;
    pose["index"] = r;
    nlohmann::json rot = nlohmann::json::array();
    for (int i = 0; i < 9; ++i) rot.push_back(v.camera_pose.rotation(i / 3, i % 3));
    pose["cam_R_m2c"] = rot;
    const Vec3 t = v.camera_pose.translation * 1000.0;
    pose["cam_t_m2c"] = {t.x(), t.y(), t.z()};
    meta["views"].push_back(pose);
  }
  std::ofstream(fs::path(out) / "templates.json") << meta.dump(1) << "\n";
  std::cerr << "wrote " << views.size() << " templates to " << out << "\n";
  return 0;
}

// ------------------------------------------------------------------- synth

struct SynthOptions {
  std::string model;
  double model_scale = 0.001;
  std::string shape = "asymmetric";
  std::string out;
  int count = 10;
  std::uint64_t seed = 0;
  double noise = 0.005;
  double occlusion = 0.3;
  double distance = 0.5;
  double lateral = 0.05;
  int scene_id = 0;
  int obj_id = 1;
  int width = 640;
  int height = 480;
  double focal = 600.0;
};

TriangleMesh builtinShape(const std::string& name) {
  if (name == "asymmetric") return makeAsymmetricObject();
  if (name == "cube") return makeTexturedCube();
  if (name == "plain-cube") return makeCube(0.1, distinctFaceColors(), 4);
  throw Error("unknown shape '" + name + "' (asymmetric, cube, plain-cube)");
}

int runSynth(const SynthOptions& o) {
  const TriangleMesh mesh = o.model.empty() ? builtinShape(o.shape) : loadPly(o.model, o.model_scale);
  CameraIntrinsics k;
  k.fx = k.fy = o.focal;
  k.cx = (o.width - 1) / 2.0;
  k.cy = (o.height - 1) / 2.0;
  k.width = o.width;
  k.height = o.height;
  fs::create_directories(fs::path(o.out) / "models");
  savePly(fs::path(o.out) / "models" / ("obj_" + padded(o.obj_id) + ".ply"), mesh);
  for (int i = 0; i < o.count; ++i) {
    const std::uint64_t s = o.seed * 1000003ull + static_cast<std::uint64_t>(i);
    const RigidTransform pose = randomPose(s, o.distance, o.lateral);
    // Occlusion sweeps evenly over [0, occlusion] across the generated images.
    const double occ = o.count > 1 ? o.occlusion * i / (o.count - 1) : o.occlusion;
    SyntheticScene sc = generateSyntheticScene(mesh, pose, k, o.noise, occ, s);
    sc.packet.scene_id = o.scene_id;
    sc.packet.image_id = i;
    for (auto& c : sc.packet.candidates) c.object_id = o.obj_id;
    for (auto& g : sc.packet.ground_truth) g.object_id = o.obj_id;
    writeBopImage(o.out, sc.packet);
  }
  std::cerr << "wrote " << o.count << " images to " << (fs::path(o.out) / padded(o.scene_id)).string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string results;
  std::string bop_root;
  std::string model;
  double model_scale = 0.001;
  std::string symmetry = "none";
  std::string out = "report";
  int samples = 5000;
};

int runEvaluate(const EvaluateOptions& o) {
  const std::vector<ResultRow> rows = parseResults(o.results);
  std::map<int, std::vector<const ResultRow*>> by_object;
  for (const auto& r : rows) by_object[r.obj_id].push_back(&r);

  // Every GT instance of a result's (scene, image) is an evaluation target;
  // unanswered instances get infinite errors.
  std::map<int, std::map<std::pair<int, int>, std::vector<GroundTruthAnnotation>>> gts;
  std::map<std::pair<int, int>, CameraIntrinsics> cams;
  for (const auto& r : rows) {
    const std::pair<int, int> key{r.scene_id, r.im_id};
    if (cams.count(key)) continue;
    const ScenePacket p = ingestBopScene(o.bop_root, r.scene_id, r.im_id);
    cams[key] = p.intrinsics;
    for (const auto& g : p.ground_truth) gts[g.object_id][key].push_back(g);
  }
  if (gts.empty()) throw Error("no ground truth found for the result rows");

  const bool multi = gts.size() > 1;
  int written = 0;
  for (const auto& [obj, per_image] : gts) {
    const TriangleMesh mesh = o.model.empty() ? loadBopModel(o.bop_root, obj) : loadPly(o.model, o.model_scale);
    const double diameter = meshDiameter(mesh);
    const PointCloud cloud = sampleSurface(mesh, static_cast<size_t>(o.samples), 0);
    SymmetrySet syms = SymmetrySet::identityOnly();
    if (o.symmetry == "estimate") {
      syms = estimateSymmetries(cloud, {}, diameter);
    } else if (o.symmetry != "none") {
      throw Error("--symmetry must be none or estimate");
    }
    const RecallGrids grids;
    std::vector<double> taus;
    for (double t : grids.vsd_tau) taus.push_back(t * diameter);

    std::vector<ErrorRecord> records;
    int width = 0;
    for (const auto& [key, list] : per_image) {
      const CameraIntrinsics& k = cams.at(key);
      width = k.width;
      for (size_t g = 0; g < list.size(); ++g) {
        GroundTruthAnnotation gt = list[g];
        gt.symmetries = syms;
        ErrorRecord rec;
        rec.instance = std::to_string(key.first) + "/" + std::to_string(key.second) + "/" + std::to_string(obj) +
                       "/" + std::to_string(g);
        const ResultRow* best = nullptr;
        double best_err = std::numeric_limits<double>::infinity();
        for (const ResultRow* r : by_object[obj]) {
          if (r->scene_id != key.first || r->im_id != key.second) continue;
          const double e = mssd(r->pose, gt, cloud);
          if (e < best_err) {
            best_err = e;
            best = r;
          }
        }
        if (!best) {
          rec.mssd = rec.mspd = std::numeric_limits<double>::infinity();
          rec.vsd.assign(taus.size(), 1.0);
        } else {
          rec.mssd = best_err;
          try {
            rec.mspd = mspd(best->pose, gt, cloud, k);
          } catch (const Error&) {
            rec.mspd = std::numeric_limits<double>::infinity();
          }
          try {
            rec.vsd = vsdSweep(best->pose, gt, mesh, k, taus);
          } catch (const Error&) {
            rec.vsd.assign(taus.size(), 1.0);
          }
        }
        records.push_back(rec);
      }
    }
    const RecallSummary s = averageRecall(records, diameter, width, grids);
    const std::string stem = multi ? o.out + "_obj" + padded(obj) : o.out;
    writeMetricReport(stem + ".csv", stem + ".json", records, s, grids, diameter, width);
    std::cout << "obj " << obj << ": AR " << s.ar << " (VSD " << s.ar_vsd << ", MSSD " << s.ar_mssd << ", MSPD "
              << s.ar_mspd << ") over " << records.size() << " instances\n";
    ++written;
  }
  return written > 0 ? 0 : 1;
}

// ----------------------------------------------------------- features dump

void writeColoredCloud(const fs::path& path, const PointCloud& cloud, const std::vector<Vec3>& colors) {
  PointCloud c = cloud;
  c.colors = colors;
  savePointCloudPly(path, c);
}

int runFeaturesDump(const std::string& model, double scale, const std::string& out, const SceneOptions& scene,
                    const ConfigOptions& co) {
  PipelineConfig cfg = co.build();
  const TriangleMesh mesh = loadModel(model, scale, scene);
  const QueryModel query = prepareQuery(mesh, cfg);
  fs::create_directories(out);
  const fs::path dir(out);
  writeFrzf(dir / "query_geometric.frzf", query.geometric.features);
  writeFrzf(dir / "query_visual.frzf", query.visual.features);
  writeFrzf(dir / "query_fused.frzf", query.fused.features);

  // One colorizer per feature kind, fit on the query, so target colours are comparable.
  const FeatureSet& source = query.visual.dim() > 0 ? query.visual : query.geometric;
  const PcaColorizer colorizer = PcaColorizer::fit(source);
  writeColoredCloud(dir / "query_pca.ply", query.cloud, colorizer.colors(source));

  std::vector<ScenePacket> packets;
  if (scene.hasLooseFiles()) {
    packets.push_back(scene.loadLoose());
  } else if (!scene.bop_root.empty()) {
    for (int id : scene.imageIds()) packets.push_back(scene.loadBop(id));
  }
  int written = 0;
  for (const auto& p : packets)
    for (size_t k = 0; k < p.candidates.size(); ++k) {
      const std::string stem =
          (packets.size() > 1 ? "im" + padded(p.image_id) + "_" : std::string()) + "target_" + padded(static_cast<int>(k), 3);
      try {
        const TargetFeatures t = prepareTarget(p, static_cast<int>(k), query, cfg);
        writeFrzf(dir / (stem + "_geometric.frzf"), t.geometric.features);
        writeFrzf(dir / (stem + "_visual.frzf"), t.visual.features);
        writeFrzf(dir / (stem + "_fused.frzf"), t.fused.features);
        const FeatureSet& tf = query.visual.dim() > 0 ? t.visual : t.geometric;
        writeColoredCloud(dir / (stem + "_pca.ply"), t.cloud, colorizer.colors(tf));
        ++written;
      } catch (const Error& e) {
        std::cerr << stem << ": " << e.what() << "\n";
      }
    }
  std::cerr << "wrote query features and " << written << " target feature sets to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based zero-shot 6D pose estimation"};
  app.require_subcommand(1);

  ConfigOptions est_cfg;
  SceneOptions est_scene;
  EstimateOptions est;
  CLI::App* estimate = app.add_subcommand("estimate", "Estimate object poses in RGBD observations");
  estimate->add_option("--model", est.model, "Object model PLY");
  estimate->add_option("--model-scale", est.model_scale, "PLY units to meters (default 0.001, millimetres)");
  estimate->add_option("--out", est.out, "Result CSV (default stdout)");
  estimate->add_flag("--deterministic", est.deterministic, "Write time = -1 so reruns are byte-identical");
  estimate->add_flag("--timings", est.timings, "Print per-stage timings to stderr");
  estimate->add_option("--jobs", est.jobs, "Images processed in parallel");
  est_scene.attach(estimate);
  est_cfg.attach(estimate);

  ConfigOptions rt_cfg;
  std::string rt_model, rt_out;
  double rt_scale = 0.001;
  CLI::App* render = app.add_subcommand("render-templates", "Render and export the query template views");
  render->add_option("--model", rt_model, "Object model PLY")->required();
  render->add_option("--model-scale", rt_scale, "PLY units to meters");
  render->add_option("--out", rt_out, "Output directory")->required();
  rt_cfg.attach(render);

  SynthOptions sy;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic BOP-layout scene with ground truth");
  synth->add_option("--model", sy.model, "Object model PLY (default: --shape)");
  synth->add_option("--model-scale", sy.model_scale, "PLY units to meters");
  synth->add_option("--shape", sy.shape, "Built-in object: asymmetric, cube or plain-cube");
  synth->add_option("--out", sy.out, "Dataset root")->required();
  synth->add_option("--count", sy.count, "Number of images");
  synth->add_option("--seed", sy.seed, "Scene seed");
  synth->add_option("--noise", sy.noise, "Depth noise sigma, fraction of diameter");
  synth->add_option("--occlusion", sy.occlusion, "Largest occluded mask fraction");
  synth->add_option("--distance", sy.distance, "Object distance from the camera, meters");
  synth->add_option("--lateral", sy.lateral, "Lateral jitter, meters");
  synth->add_option("--scene", sy.scene_id, "Scene id");
  synth->add_option("--obj-id", sy.obj_id, "Object id");
  synth->add_option("--width", sy.width, "Image width");
  synth->add_option("--height", sy.height, "Image height");
  synth->add_option("--focal", sy.focal, "Focal length, pixels");

  EvaluateOptions ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a result CSV against BOP ground truth");
  evaluate->add_option("--results", ev.results, "Result CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--bop", ev.bop_root, "BOP dataset root with scene_gt.json")->required();
  evaluate->add_option("--model", ev.model, "Model PLY overriding <bop>/models");
  evaluate->add_option("--model-scale", ev.model_scale, "PLY units to meters");
  evaluate->add_option("--symmetry", ev.symmetry, "GT symmetry set: none or estimate");
  evaluate->add_option("--out", ev.out, "Report path stem (writes .csv and .json)");
  evaluate->add_option("--samples", ev.samples, "Model surface samples for MSSD and MSPD");

  ConfigOptions fd_cfg;
  SceneOptions fd_scene;
  std::string fd_model, fd_out;
  double fd_scale = 0.001;
  CLI::App* features = app.add_subcommand("features", "Feature inspection");
  features->require_subcommand(1);
  CLI::App* dump = features->add_subcommand("dump", "Write FRZF features and PCA-coloured point clouds");
  dump->add_option("--model", fd_model, "Object model PLY");
  dump->add_option("--model-scale", fd_scale, "PLY units to meters");
  dump->add_option("--out", fd_out, "Output directory")->required();
  fd_scene.attach(dump);
  fd_cfg.attach(dump);

  ConfigOptions cd_cfg;
  CLI::App* config = app.add_subcommand("config", "Print the effective configuration");
  cd_cfg.attach(config);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*estimate) return runEstimate(est, est_scene, est_cfg);
    if (*render) return runRenderTemplates(rt_model, rt_scale, rt_out, rt_cfg);
    if (*synth) return runSynth(sy);
    if (*evaluate) return runEvaluate(ev);
    if (*dump) return runFeaturesDump(fd_model, fd_scale, fd_out, fd_scene, fd_cfg);
    if (*config) {
      std::cout << dumpConfig(cd_cfg.build());
      return 0;
    }
  } catch (const PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    printDiagnostics(e.diagnostics);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
