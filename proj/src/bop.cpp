#include <posekit/bop.hpp>
#include <posekit/image_io.hpp>
#include <posekit/mesh_io.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace posekit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string padded(int value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", value);
  return buf;
}

json readJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

const json& entryFor(const json& root, int image_id, const fs::path& path) {
  const std::string key = std::to_string(image_id);
  if (!root.is_object() || !root.contains(key))
    throw Error(path.string() + ": no entry for image " + key);
  return root.at(key);
}

template <size_t N>
std::array<double, N> numberArray(const json& obj, const char* key, const fs::path& path) {
  if (!obj.contains(key) || !obj.at(key).is_array() || obj.at(key).size() != N)
    throw Error(path.string() + ": '" + key + "' must be an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (size_t i = 0; i < N; ++i) {
    const json& v = obj.at(key)[i];
    if (!v.is_number()) throw Error(path.string() + ": '" + key + "' holds a non-number");
    out[i] = v.get<double>();
  }
  return out;
}

BopCamera cameraFromEntry(const json& e, const fs::path& json_path) {
  const auto k = numberArray<9>(e, "cam_K", json_path);
  BopCamera cam;
  cam.intrinsics.fx = k[0];
  cam.intrinsics.cx = k[2];
  cam.intrinsics.fy = k[4];
  cam.intrinsics.cy = k[5];
  cam.intrinsics.width = 0;
  cam.intrinsics.height = 0;
  if (e.contains("depth_scale")) {
    if (!e.at("depth_scale").is_number()) throw Error(json_path.string() + ": 'depth_scale' is not a number");
    cam.depth_scale = e.at("depth_scale").get<double>();
  }
  return cam;
}

std::vector<GroundTruthAnnotation> gtFromEntry(const json& list, const fs::path& gt_path) {
  if (!list.is_array()) throw Error(gt_path.string() + ": ground-truth entry is not an array");
  std::vector<GroundTruthAnnotation> out;
  for (const json& g : list) {
    const auto r = numberArray<9>(g, "cam_R_m2c", gt_path);
    const auto t = numberArray<3>(g, "cam_t_m2c", gt_path);
    GroundTruthAnnotation ann;
    for (int i = 0; i < 9; ++i) ann.pose.rotation(i / 3, i % 3) = r[static_cast<size_t>(i)];
    ann.pose.translation = Vec3(t[0], t[1], t[2]) / 1000.0;
    if (g.contains("obj_id")) ann.object_id = g.at("obj_id").get<int>();
    out.push_back(ann);
  }
  return out;
}

json readOrEmpty(const fs::path& path) { return fs::exists(path) ? readJson(path) : json::object(); }

void writeJson(const fs::path& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << value.dump(1) << "\n";
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

BopCamera readSceneCamera(const fs::path& json_path, int image_id) {
  const json root = readJson(json_path);
  return cameraFromEntry(entryFor(root, image_id, json_path), json_path);
}

BopCamera readCameraFile(const fs::path& json_path, int image_id) {
  const json root = readJson(json_path);
  if (root.is_object() && root.contains("cam_K")) return cameraFromEntry(root, json_path);
  return cameraFromEntry(entryFor(root, image_id, json_path), json_path);
}

std::vector<GroundTruthAnnotation> readSceneGt(const fs::path& json_path, int image_id) {
  const json root = readJson(json_path);
  return gtFromEntry(entryFor(root, image_id, json_path), json_path);
}

DepthImage depthFromRaw(const Image<std::uint16_t>& raw, double depth_scale) {
  if (raw.channels != 1) throw Error("depth image must have one channel");
  DepthImage out(raw.width, raw.height, 1);
  for (size_t i = 0; i < raw.data.size(); ++i) out.data[i] = raw.data[i] * depth_scale / 1000.0;
  return out;
}

RgbImage rgbFromRaw(const Image<std::uint16_t>& raw, int bit_depth) {
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  RgbImage out(raw.width, raw.height, 3);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const int src = raw.channels >= 3 ? c : 0;
        out.at(x, y, c) = static_cast<float>(raw.at(x, y, src) / maxv);
      }
  return out;
}

RgbImage loadRgbPng(const fs::path& path) {
  int depth = 8;
  const auto raw = readPng(path, &depth);
  return rgbFromRaw(raw, depth);
}

MaskImage loadMaskPng(const fs::path& path) {
  const auto raw = readPng(path);
  MaskImage out(raw.width, raw.height, 1);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x) out.at(x, y) = raw.at(x, y, 0) != 0 ? 1 : 0;
  return out;
}

ScenePacket ingestBopScene(const fs::path& root, int scene_id, int image_id) {
  const fs::path scene = root / padded(scene_id);
  if (!fs::is_directory(scene)) throw Error("missing scene directory " + scene.string());
  const fs::path cam_path = scene / "scene_camera.json";
  const BopCamera cam = readSceneCamera(cam_path, image_id);

  const fs::path rgb_path = scene / "rgb" / (padded(image_id) + ".png");
  const fs::path depth_path = scene / "depth" / (padded(image_id) + ".png");
  if (!fs::exists(rgb_path)) throw Error("missing file " + rgb_path.string());
  if (!fs::exists(depth_path)) throw Error("missing file " + depth_path.string());

  ScenePacket packet;
  packet.scene_id = scene_id;
  packet.image_id = image_id;
  packet.rgb = loadRgbPng(rgb_path);
  packet.depth = depthFromRaw(readPng(depth_path), cam.depth_scale);
  packet.intrinsics = cam.intrinsics;
  packet.intrinsics.width = packet.depth.width;
  packet.intrinsics.height = packet.depth.height;

  const fs::path mask_dir = scene / "masks";
  if (fs::is_directory(mask_dir)) {
    json scores;
    const fs::path score_path = mask_dir / (padded(image_id) + "_scores.json");
    if (fs::exists(score_path)) scores = readJson(score_path);
    for (int k = 0;; ++k) {
      const fs::path mpath = mask_dir / (padded(image_id) + "_" + padded(k) + ".png");
      if (!fs::exists(mpath)) break;
      double score = 1.0;
      int obj = 0;
      if (scores.is_array() && static_cast<size_t>(k) < scores.size()) {
        const json& s = scores[static_cast<size_t>(k)];
        if (s.is_number()) {
          score = s.get<double>();
        } else if (s.is_object()) {
          if (s.contains("score")) score = s.at("score").get<double>();
          if (s.contains("obj_id")) obj = s.at("obj_id").get<int>();
        } else {
          throw Error(score_path.string() + ": entry " + std::to_string(k) + " is neither a number nor an object");
        }
      }
      packet.candidates.push_back(Candidate::fromMask(loadMaskPng(mpath), score, obj));
    }
  }

  const fs::path gt_path = scene / "scene_gt.json";
  if (fs::exists(gt_path)) {
    const json gt_root = readJson(gt_path);
    const std::string key = std::to_string(image_id);
    if (gt_root.contains(key)) packet.ground_truth = gtFromEntry(gt_root.at(key), gt_path);
  }
  packet.validate();
  return packet;
}

void writeBopImage(const fs::path& root, const ScenePacket& packet, double depth_scale) {
  packet.validate();
  if (!(depth_scale > 0.0)) throw Error("depth scale must be positive");
  const fs::path scene = root / padded(packet.scene_id);
  fs::create_directories(scene / "rgb");
  fs::create_directories(scene / "depth");
  const std::string im = padded(packet.image_id);
  const std::string key = std::to_string(packet.image_id);

  json cameras = readOrEmpty(scene / "scene_camera.json");
  const CameraIntrinsics& k = packet.intrinsics;
  cameras[key] = {{"cam_K", {k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0}}, {"depth_scale", depth_scale}};
  writeJson(scene / "scene_camera.json", cameras);

  writePngRgb(scene / "rgb" / (im + ".png"), packet.rgb);
  Image<std::uint16_t> raw(packet.depth.width, packet.depth.height, 1);
  for (size_t i = 0; i < raw.data.size(); ++i) {
    const double v = std::round(packet.depth.data[i] * 1000.0 / depth_scale);
    if (v > std::numeric_limits<std::uint16_t>::max()) throw Error("depth exceeds the 16-bit range at this scale");
    raw.data[i] = static_cast<std::uint16_t>(std::max(0.0, v));
  }
  writePngGray16(scene / "depth" / (im + ".png"), raw);

  if (!packet.candidates.empty()) {
    fs::create_directories(scene / "masks");
    json scores = json::array();
    for (size_t c = 0; c < packet.candidates.size(); ++c) {
      const Candidate& cand = packet.candidates[c];
      Image<std::uint16_t> m(cand.mask.width, cand.mask.height, 1);
      for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = cand.mask.data[i] ? 255 : 0;
      writePngGray16(scene / "masks" / (im + "_" + padded(static_cast<int>(c)) + ".png"), m);
      scores.push_back({{"score", cand.score}, {"obj_id", cand.object_id}});
    }
    writeJson(scene / "masks" / (im + "_scores.json"), scores);
  }

  if (!packet.ground_truth.empty()) {
    json gt = readOrEmpty(scene / "scene_gt.json");
    json list = json::array();
    for (const auto& g : packet.ground_truth) {
      json r = json::array();
      for (int i = 0; i < 9; ++i) r.push_back(g.pose.rotation(i / 3, i % 3));
      const Vec3 t = g.pose.translation * 1000.0;
      list.push_back({{"cam_R_m2c", r}, {"cam_t_m2c", {t.x(), t.y(), t.z()}}, {"obj_id", g.object_id}});
    }
    gt[key] = list;
    writeJson(scene / "scene_gt.json", gt);
  }
}

TriangleMesh loadBopModel(const fs::path& root, int object_id) {
  return loadPly(root / "models" / ("obj_" + padded(object_id) + ".ply"), 0.001);
}

void emitResults(const std::vector<ResultRow>& rows, std::ostream& out) {
  const auto old_precision = out.precision();
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "scene_id,im_id,obj_id,score,R,t,time\n";
  for (const auto& r : rows) {
    out << r.scene_id << "," << r.im_id << "," << r.obj_id << "," << r.score << ",";
    for (int i = 0; i < 9; ++i) out << (i ? " " : "") << r.pose.rotation(i / 3, i % 3);
    out << ",";
    for (int i = 0; i < 3; ++i) out << (i ? " " : "") << r.pose.translation[i] * 1000.0;
    out << "," << r.time << "\n";
  }
  out.precision(old_precision);
}

void emitResults(const std::vector<ResultRow>& rows, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  emitResults(rows, out);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<ResultRow> parseResults(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty results file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "scene_id,im_id,obj_id,score,R,t,time") throw Error(path.string() + ": unexpected header");
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    const std::string where = path.string() + " line " + std::to_string(lineno);
    if (fields.size() != 7) throw Error(where + ": expected 7 fields");
    try {
      ResultRow r;
      r.scene_id = std::stoi(fields[0]);
      r.im_id = std::stoi(fields[1]);
      r.obj_id = std::stoi(fields[2]);
      r.score = std::stod(fields[3]);
      std::istringstream rs(fields[4]), ts(fields[5]);
      for (int i = 0; i < 9; ++i)
        if (!(rs >> r.pose.rotation(i / 3, i % 3))) throw Error(where + ": R needs 9 values");
      for (int i = 0; i < 3; ++i) {
        double v;
        if (!(ts >> v)) throw Error(where + ": t needs 3 values");
        r.pose.translation[i] = v / 1000.0;
      }
      r.time = std::stod(fields[6]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw Error(where + ": malformed number");
    }
  }
  return rows;
}

}  // namespace posekit
