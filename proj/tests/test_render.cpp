#include <posekit/geometry.hpp>
#include <posekit/image_io.hpp>
#include <posekit/render.hpp>
#include <posekit/shapes.hpp>

#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"

namespace posekit {
namespace {

CameraIntrinsics smallCamera(int w = 64, int h = 48, double f = 60.0) {
  CameraIntrinsics k;
  k.fx = k.fy = f;
  k.cx = (w - 1) / 2.0;
  k.cy = (h - 1) / 2.0;
  k.width = w;
  k.height = h;
  return k;
}

TriangleMesh triangleAt(double z, double half) {
  TriangleMesh m;
  m.vertices = {{-half, -half, z}, {half, -half, z}, {0.0, half, z}};
  m.triangles = {{0, 1, 2}};
  return m;
}

TEST(Render, TriangleAtUnitDepth) {
  const CameraIntrinsics k = smallCamera(65, 49);
  const TemplateView v = render(triangleAt(1.0, 0.5), RigidTransform::identity(), k);
  EXPECT_DOUBLE_EQ(v.depth.at(32, 24), 1.0);
  EXPECT_EQ(v.mask.at(32, 24), 1);
}

TEST(Render, ZBufferKeepsNearest) {
  const CameraIntrinsics k = smallCamera(65, 49);
  const TriangleMesh near = triangleAt(1.0, 0.3);
  const TriangleMesh far = triangleAt(2.0, 0.9);
  const TemplateView a = render(mergeMeshes(near, far), RigidTransform::identity(), k);
  const TemplateView b = render(mergeMeshes(far, near), RigidTransform::identity(), k);
  EXPECT_DOUBLE_EQ(a.depth.at(32, 24), 1.0);
  EXPECT_EQ(a.depth.data, b.depth.data);
}

TEST(Render, MaskIffPositiveDepthAndDeterministic) {
  const TriangleMesh m = makeAsymmetricObject();
  const RigidTransform pose(axisAngle(Vec3(1, 2, 3).normalized(), 0.8), Vec3(0, 0, 0.5));
  const CameraIntrinsics k = smallCamera(160, 120, 150.0);
  const TemplateView a = render(m, pose, k);
  const TemplateView b = render(m, pose, k);
  size_t fg = 0;
  for (size_t i = 0; i < a.mask.data.size(); ++i) {
    EXPECT_EQ(a.mask.data[i] != 0, a.depth.data[i] > 0.0);
    fg += a.mask.data[i];
  }
  EXPECT_GT(fg, 100u);
  EXPECT_EQ(a.depth.data, b.depth.data);
  EXPECT_EQ(a.rgb.data, b.rgb.data);
}

TEST(Render, DepthMatchesRayCastOracle) {
  const TriangleMesh m = makeCube(0.1, distinctFaceColors(), 1);
  const RigidTransform pose(axisAngle(Vec3(1, -1, 2).normalized(), 0.6), Vec3(0.01, -0.005, 0.4));
  const CameraIntrinsics k = smallCamera(96, 72, 120.0);
  const TemplateView v = render(m, pose, k);
  int compared = 0;
  for (int y = 0; y < k.height; ++y)
    for (int x = 0; x < k.width; ++x) {
      const Vec3 dir = k.unproject(x, y, 1.0).normalized();
      const double want = oracle::rayDepth(m, pose, dir);
      const double got = v.depth.at(x, y);
      if ((want > 0.0) != (got > 0.0)) continue;  // silhouette pixels may differ by the fill rule
      if (want > 0.0) {
        EXPECT_NEAR(got, want, 1e-9) << x << "," << y;
        ++compared;
      }
    }
  EXPECT_GT(compared, 500);
}

TEST(Render, SilhouetteDisagreementIsConfinedToEdges) {
  const TriangleMesh m = makeCube(0.1, distinctFaceColors(), 1);
  const RigidTransform pose(axisAngle(Vec3(2, 1, 1).normalized(), 0.9), Vec3(0, 0, 0.45));
  const CameraIntrinsics k = smallCamera(96, 72, 120.0);
  const TemplateView v = render(m, pose, k);
  int fg = 0, mismatch = 0;
  for (int y = 0; y < k.height; ++y)
    for (int x = 0; x < k.width; ++x) {
      const bool want = oracle::rayDepth(m, pose, k.unproject(x, y, 1.0).normalized()) > 0.0;
      fg += want;
      mismatch += want != (v.mask.at(x, y) != 0);
    }
  EXPECT_LE(mismatch, fg / 50 + 2);
}

TEST(Render, BackprojectedPixelsLieOnMesh) {
  const TriangleMesh m = makeAsymmetricObject();
  const RigidTransform pose(axisAngle(Vec3(0.3, 1, -0.5).normalized(), 2.1), Vec3(0.02, 0.01, 0.5));
  const CameraIntrinsics k = smallCamera(200, 150, 250.0);
  const TemplateView v = render(m, pose, k);
  const PointCloud c = transformCloud(backprojectDepth(v.depth, v.mask, k), pose.inverse());
  ASSERT_GT(c.size(), 200u);
  for (const auto& p : c.points) {
    double best = 1e9;
    for (const auto& t : m.triangles)
      best = std::min(best, pointTriangleDistance(p, m.vertices[static_cast<size_t>(t[0])],
                                                  m.vertices[static_cast<size_t>(t[1])],
                                                  m.vertices[static_cast<size_t>(t[2])]));
    // Half a pixel at the object's depth.
    EXPECT_LT(best, 0.5 * 0.6 / k.fx);
  }
}

TEST(Render, FlatVertexColours) {
  FaceColors colors;
  for (auto& c : colors) c = Vec3(0.2, 0.4, 0.6);
  const TriangleMesh m = makeCube(0.1, colors, 1);
  const TemplateView v = render(m, RigidTransform(Mat3::Identity(), Vec3(0, 0, 0.5)), smallCamera());
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x)
      if (v.mask.at(x, y)) {
        EXPECT_NEAR(v.rgb.at(x, y, 1), 0.4f, 1e-6f);
      }
}

TEST(Viewpoints, SingleViewAndRadius) {
  const auto one = sampleViewpoints(1, 0.7);
  ASSERT_EQ(one.size(), 1u);
  const Vec3 center = -(one[0].rotation.transpose() * one[0].translation);
  EXPECT_NEAR(center.norm(), 0.7, 1e-9);
  // The model origin projects onto the optical axis.
  const Vec3 o = one[0].apply(Vec3::Zero());
  EXPECT_NEAR(o.x(), 0.0, 1e-12);
  EXPECT_NEAR(o.y(), 0.0, 1e-12);
  EXPECT_NEAR(o.z(), 0.7, 1e-12);
  for (const auto& p : sampleViewpoints(42, 1.3)) {
    EXPECT_NEAR((p.rotation.transpose() * p.translation).norm(), 1.3, 1e-9);
    EXPECT_TRUE(p.isProper(1e-12));
  }
}

TEST(Viewpoints, FortyTwoViewsAreWellSeparated) {
  const auto poses = sampleViewpoints(42, 1.0);
  std::vector<Vec3> centers;
  for (const auto& p : poses) centers.push_back(-(p.rotation.transpose() * p.translation).normalized());
  double min_angle = M_PI;
  for (size_t i = 0; i < centers.size(); ++i)
    for (size_t j = i + 1; j < centers.size(); ++j)
      min_angle = std::min(min_angle, std::acos(std::clamp(centers[i].dot(centers[j]), -1.0, 1.0)));
  EXPECT_GT(min_angle, 15.0 * M_PI / 180.0);
}

TEST(Render, SphereMaskAreaIsStableUnderSmallRotation) {
  const TriangleMesh sphere = makeSphere(0.05, 3, [](const Vec3&) { return Vec3(1, 1, 1); });
  const CameraIntrinsics k = smallCamera(128, 128, 400.0);
  auto area = [&](double deg) {
    const TemplateView v =
        render(sphere, RigidTransform(axisAngle(Vec3(0, 1, 0), deg * M_PI / 180.0), Vec3(0, 0, 0.4)), k);
    return std::count(v.mask.data.begin(), v.mask.data.end(), 1);
  };
  const double a0 = static_cast<double>(area(0.0));
  const double a1 = static_cast<double>(area(1.0));
  EXPECT_GT(a0, 0.0);
  EXPECT_LT(std::abs(a1 - a0) / a0, 0.10);
}

TEST(TemplateCamera, DiameterSphereFillsRequestedFraction) {
  const CameraIntrinsics k = templateCamera(256, 0.2, 0.5, 0.5);
  EXPECT_EQ(k.width, 256);
  EXPECT_EQ(k.height, 256);
  // A segment of length `diameter` facing the camera at `distance` spans
  // half the image width.
  const Vec2 a = k.project(Vec3(-0.1, 0.0, 0.5));
  const Vec2 b = k.project(Vec3(0.1, 0.0, 0.5));
  EXPECT_NEAR(b.x() - a.x(), 128.0, 1e-9);
  EXPECT_NEAR(0.5 * (a.x() + b.x()), k.cx, 1e-9);
}

TEST(Crop, FullImageIsIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image<float> img(32, 32, 3);
  for (auto& v : img.data) v = u(rng);
  const CroppedImage c = cropToBbox(img, PixelRect{0, 0, 32, 32}, 32);
  for (size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(c.image.data[i], img.data[i], 1e-6f);
}

TEST(Crop, WideBoxIsPaddedAndCentred) {
  Image<float> img(40, 20, 1, 1.0f);
  const CroppedImage c = cropToBbox(img, PixelRect{0, 0, 40, 20}, 40);
  // Content rows 10..29, zero padding above and below.
  EXPECT_EQ(c.image.at(20, 2), 0.0f);
  EXPECT_EQ(c.image.at(20, 37), 0.0f);
  EXPECT_EQ(c.image.at(20, 20), 1.0f);
  int first = -1, last = -1;
  for (int y = 0; y < 40; ++y)
    if (c.image.at(20, y) > 0.5f) {
      if (first < 0) first = y;
      last = y;
    }
  EXPECT_EQ(first, 10);
  EXPECT_EQ(last, 29);
}

TEST(Crop, MappingRoundTrip) {
  Image<float> img(100, 60, 1, 0.5f);
  const CroppedImage c = cropToBbox(img, PixelRect{13, 7, 51, 29}, 224);
  for (int v = 0; v < 224; v += 17)
    for (int u = 0; u < 224; u += 13) {
      const Vec2 s = c.mapping.toSource(u, v);
      const Vec2 back = c.mapping.toCrop(s.x(), s.y());
      EXPECT_NEAR(back.x(), u, 0.5);
      EXPECT_NEAR(back.y(), v, 0.5);
    }
}

TEST(Crop, DisjointBoxThrows) {
  Image<float> img(10, 10, 1);
  EXPECT_THROW(cropToBbox(img, PixelRect{20, 20, 5, 5}, 8), Error);
}

TEST(ExportTemplate, WritesRgbAndScaledDepth) {
  const TriangleMesh m = makeCube(0.1, distinctFaceColors(), 1);
  const TemplateView v = render(m, RigidTransform(Mat3::Identity(), Vec3(0, 0, 0.5)), smallCamera());
  const auto dir = std::filesystem::temp_directory_path() / "posekit_export_test";
  std::filesystem::create_directories(dir);
  exportTemplateView(v, dir, "v0", 0.1);
  const auto depth = readPng(dir / "v0_depth_x0.1mm.png");
  ASSERT_EQ(depth.width, 64);
  const double want = v.depth.at(32, 24) * 1000.0 / 0.1;
  EXPECT_NEAR(depth.at(32, 24), want, 0.5);
  EXPECT_TRUE(std::filesystem::exists(dir / "v0_rgb.png"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace posekit
