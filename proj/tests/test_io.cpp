#include <posekit/bop.hpp>
#include <posekit/image_io.hpp>
#include <posekit/mesh_io.hpp>
#include <posekit/shapes.hpp>
#include <posekit/synthetic.hpp>

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace posekit {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void writeText(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

template <typename T>
void putRaw(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

std::string errorOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Ply, AsciiMillimetresToMetresWithColoursAndQuads) {
  TempDir dir("posekit_ply_ascii");
  writeText(dir.path() / "m.ply",
            "ply\nformat ascii 1.0\ncomment test\n"
            "element vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
            "property float nx\nproperty float ny\nproperty float nz\n"
            "property uchar red\nproperty uchar green\nproperty uchar blue\n"
            "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
            "0 0 0 0 0 1 255 0 0\n100 0 0 0 0 1 0 255 0\n100 100 0 0 0 1 0 0 255\n0 100 0 0 0 1 51 51 51\n"
            "4 0 1 2 3\n");
  const TriangleMesh m = loadPly(dir.path() / "m.ply");
  ASSERT_EQ(m.vertices.size(), 4u);
  ASSERT_EQ(m.triangles.size(), 2u);
  EXPECT_NEAR(m.vertices[2].x(), 0.1, 1e-12);
  EXPECT_NEAR(m.vertices[2].y(), 0.1, 1e-12);
  ASSERT_EQ(m.vertex_colors.size(), 4u);
  EXPECT_NEAR(m.vertex_colors[0].x(), 1.0, 1e-12);
  EXPECT_NEAR(m.vertex_colors[3].y(), 0.2, 1e-12);
  EXPECT_EQ(m.triangles[0], (std::array<int, 3>{0, 1, 2}));
  EXPECT_EQ(m.triangles[1], (std::array<int, 3>{0, 2, 3}));
}

TEST(Ply, BinaryLittleEndian) {
  TempDir dir("posekit_ply_binary");
  std::string body =
      "ply\nformat binary_little_endian 1.0\n"
      "element vertex 3\nproperty double x\nproperty double y\nproperty double z\nproperty uchar red\n"
      "property uchar green\nproperty uchar blue\nproperty int extra\n"
      "element face 1\nproperty list uchar uint vertex_indices\nend_header\n";
  const double xyz[3][3] = {{0, 0, 0}, {10, 0, 0}, {0, 20, 5}};
  for (auto& v : xyz) {
    for (double c : v) putRaw(body, c);
    for (std::uint8_t c : {std::uint8_t{0}, std::uint8_t{128}, std::uint8_t{255}}) putRaw(body, c);
    putRaw(body, std::int32_t{-7});
  }
  putRaw(body, std::uint8_t{3});
  for (std::uint32_t i : {0u, 1u, 2u}) putRaw(body, i);
  std::ofstream(dir.path() / "b.ply", std::ios::binary) << body;
  const TriangleMesh m = loadPly(dir.path() / "b.ply");
  ASSERT_EQ(m.vertices.size(), 3u);
  EXPECT_NEAR(m.vertices[2].y(), 0.02, 1e-15);
  EXPECT_NEAR(m.vertices[2].z(), 0.005, 1e-15);
  EXPECT_NEAR(m.vertex_colors[1].y(), 128.0 / 255.0, 1e-12);
  ASSERT_EQ(m.triangles.size(), 1u);
}

TEST(Ply, ErrorsNameFileAndElement) {
  TempDir dir("posekit_ply_errors");
  writeText(dir.path() / "bad.ply", "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                                    "property float z\nend_header\n0 0 0\n1 1\n");
  const std::string e = errorOf([&] { loadPly(dir.path() / "bad.ply"); });
  EXPECT_NE(e.find("bad.ply"), std::string::npos);
  EXPECT_NE(e.find("vertex"), std::string::npos);
  writeText(dir.path() / "nomagic.ply", "plx\n");
  EXPECT_NE(errorOf([&] { loadPly(dir.path() / "nomagic.ply"); }).find("magic"), std::string::npos);
  writeText(dir.path() / "range.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                                      "property float z\nelement face 1\nproperty list uchar int vertex_indices\n"
                                      "end_header\n0 0 0\n3 0 0 5\n");
  EXPECT_NE(errorOf([&] { loadPly(dir.path() / "range.ply"); }).find("out of range"), std::string::npos);
  EXPECT_THROW(loadPly(dir.path() / "missing.ply"), Error);
}

TEST(Ply, SaveLoadRoundTrip) {
  TempDir dir("posekit_ply_roundtrip");
  const TriangleMesh m = makeAsymmetricObject();
  savePly(dir.path() / "o.ply", m);
  const TriangleMesh back = loadPly(dir.path() / "o.ply");
  ASSERT_EQ(back.vertices.size(), m.vertices.size());
  ASSERT_EQ(back.triangles, m.triangles);
  for (size_t i = 0; i < m.vertices.size(); ++i) EXPECT_LT((back.vertices[i] - m.vertices[i]).norm(), 1e-9);
  for (size_t i = 0; i < m.vertex_colors.size(); ++i)
    EXPECT_LE((back.vertex_colors[i] - m.vertex_colors[i]).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-9);
}

TEST(Camera, UnpacksCamKAndDepthScale) {
  TempDir dir("posekit_cam");
  writeText(dir.path() / "scene_camera.json",
            R"({"0": {"cam_K": [572.4, 0.0, 325.3, 0.0, 573.6, 242.0, 0.0, 0.0, 1.0], "depth_scale": 0.1},
                "7": {"cam_K": [1, 0, 2, 0, 3, 4, 0, 0, 1]}})");
  const BopCamera c = readSceneCamera(dir.path() / "scene_camera.json", 0);
  EXPECT_DOUBLE_EQ(c.intrinsics.fx, 572.4);
  EXPECT_DOUBLE_EQ(c.intrinsics.fy, 573.6);
  EXPECT_DOUBLE_EQ(c.intrinsics.cx, 325.3);
  EXPECT_DOUBLE_EQ(c.intrinsics.cy, 242.0);
  EXPECT_DOUBLE_EQ(c.depth_scale, 0.1);
  EXPECT_DOUBLE_EQ(readSceneCamera(dir.path() / "scene_camera.json", 7).depth_scale, 1.0);
  EXPECT_NE(errorOf([&] { readSceneCamera(dir.path() / "scene_camera.json", 3); }).find("scene_camera.json"),
            std::string::npos);

  writeText(dir.path() / "single.json", R"({"cam_K": [10, 0, 5, 0, 11, 6, 0, 0, 1], "depth_scale": 0.5})");
  const BopCamera s = readCameraFile(dir.path() / "single.json");
  EXPECT_DOUBLE_EQ(s.intrinsics.fy, 11.0);
  EXPECT_DOUBLE_EQ(s.depth_scale, 0.5);

  writeText(dir.path() / "short.json", R"({"0": {"cam_K": [1, 2, 3]}})");
  const std::string e = errorOf([&] { readSceneCamera(dir.path() / "short.json", 0); });
  EXPECT_NE(e.find("short.json"), std::string::npos);
  EXPECT_NE(e.find("cam_K"), std::string::npos);
}

TEST(Depth, RawTimesScaleToMetres) {
  Image<std::uint16_t> raw(2, 1, 1);
  raw.at(0, 0) = 10000;
  raw.at(1, 0) = 0;
  const DepthImage d = depthFromRaw(raw, 0.1);
  EXPECT_DOUBLE_EQ(d.at(0, 0), 1.0);
  EXPECT_EQ(d.at(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(depthFromRaw(raw, 1.0).at(0, 0), 10.0);
}

TEST(SceneGt, MillimetresToMetres) {
  TempDir dir("posekit_gt");
  writeText(dir.path() / "scene_gt.json",
            R"({"3": [{"cam_R_m2c": [1,0,0, 0,0,-1, 0,1,0], "cam_t_m2c": [10, -20, 700], "obj_id": 5}]})");
  const auto gt = readSceneGt(dir.path() / "scene_gt.json", 3);
  ASSERT_EQ(gt.size(), 1u);
  EXPECT_EQ(gt[0].object_id, 5);
  EXPECT_TRUE(gt[0].pose.translation.isApprox(Vec3(0.01, -0.02, 0.7)));
  EXPECT_EQ(gt[0].pose.rotation(1, 2), -1.0);
}

ResultRow row(int scene, int im, int obj, const Vec3& t) {
  ResultRow r;
  r.scene_id = scene;
  r.im_id = im;
  r.obj_id = obj;
  r.score = 0.75;
  r.pose = RigidTransform(axisAngle(Vec3(1, 1, 0).normalized(), 0.3), t);
  r.time = 0.25;
  return r;
}

TEST(Results, CsvLayout) {
  ResultRow r;
  r.pose.translation = Vec3(0, 0, 1);
  std::ostringstream out;
  emitResults({r}, out);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header, "scene_id,im_id,obj_id,score,R,t,time");
  EXPECT_EQ(line, "0,0,0,0,1 0 0 0 1 0 0 0 1,0 0 1000,-1");

  std::ostringstream empty;
  emitResults({}, empty);
  EXPECT_EQ(empty.str(), "scene_id,im_id,obj_id,score,R,t,time\n");
}

TEST(Results, RoundTripIsExact) {
  TempDir dir("posekit_results");
  const std::vector<ResultRow> rows = {row(1, 2, 3, Vec3(0.1234567, -0.05, 0.6)), row(1, 3, 4, Vec3(0, 0.001, 1.5))};
  emitResults(rows, dir.path() / "r.csv");
  const auto back = parseResults(dir.path() / "r.csv");
  ASSERT_EQ(back.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].obj_id, rows[i].obj_id);
    EXPECT_EQ(back[i].score, rows[i].score);
    EXPECT_EQ(back[i].pose.rotation, rows[i].pose.rotation);
    EXPECT_LT((back[i].pose.translation - rows[i].pose.translation).norm(), 1e-15);
  }
  emitResults({}, dir.path() / "h.csv");
  EXPECT_TRUE(parseResults(dir.path() / "h.csv").empty());
  writeText(dir.path() / "bad.csv", "scene_id,im_id,obj_id,score,R,t,time\n1,2,3,0.5,1 0 0,0 0 0,1\n");
  EXPECT_NE(errorOf([&] { parseResults(dir.path() / "bad.csv"); }).find("R needs 9 values"), std::string::npos);
}

TEST(Bop, WriteThenIngestRoundTrip) {
  TempDir dir("posekit_bop_roundtrip");
  CameraIntrinsics k;
  k.fx = k.fy = 300;
  k.cx = 79.5;
  k.cy = 59.5;
  k.width = 160;
  k.height = 120;
  const RigidTransform pose(axisAngle(Vec3(1, 2, 3).normalized(), 0.5), Vec3(0.01, 0, 0.5));
  SyntheticScene s = generateSyntheticScene(makeAsymmetricObject(), pose, k, 0.005, 0.3, 9);
  s.packet.scene_id = 4;
  s.packet.image_id = 12;
  s.packet.ground_truth[0].object_id = 2;
  s.packet.candidates[0].object_id = 2;
  s.packet.candidates[0].score = 0.625;
  s.packet.candidates.push_back(Candidate::fromMask(s.full_mask, 0.25, 2));
  writeBopImage(dir.path(), s.packet);

  const ScenePacket back = ingestBopScene(dir.path(), 4, 12);
  EXPECT_EQ(back.intrinsics.fx, k.fx);
  EXPECT_EQ(back.intrinsics.width, 160);
  ASSERT_EQ(back.candidates.size(), 2u);
  EXPECT_EQ(back.candidates[0].mask.data, s.packet.candidates[0].mask.data);
  EXPECT_EQ(back.candidates[1].mask.data, s.full_mask.data);
  EXPECT_EQ(back.candidates[0].score, 0.625);
  EXPECT_EQ(back.candidates[1].object_id, 2);
  for (size_t i = 0; i < back.depth.data.size(); ++i)
    ASSERT_NEAR(back.depth.data[i], s.packet.depth.data[i], 0.5e-4 + 1e-12);
  for (size_t i = 0; i < back.rgb.data.size(); ++i) ASSERT_NEAR(back.rgb.data[i], s.packet.rgb.data[i], 0.5 / 255 + 1e-6);
  ASSERT_EQ(back.ground_truth.size(), 1u);
  EXPECT_EQ(back.ground_truth[0].object_id, 2);
  EXPECT_LT((back.ground_truth[0].pose.translation - pose.translation).norm(), 1e-9);

  // A second image merges into the same scene files.
  s.packet.image_id = 13;
  writeBopImage(dir.path(), s.packet);
  EXPECT_NO_THROW(ingestBopScene(dir.path(), 4, 12));
  EXPECT_NO_THROW(ingestBopScene(dir.path(), 4, 13));
  EXPECT_THROW(ingestBopScene(dir.path(), 4, 14), Error);
}

TEST(Png, Gray16RoundTrip) {
  TempDir dir("posekit_png");
  Image<std::uint16_t> img(7, 5, 1);
  for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint16_t>(i * 1871);
  writePngGray16(dir.path() / "g.png", img);
  int bits = 0;
  const auto back = readPng(dir.path() / "g.png", &bits);
  EXPECT_EQ(bits, 16);
  EXPECT_EQ(back.data, img.data);
}

}  // namespace
}  // namespace posekit
