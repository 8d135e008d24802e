#include <posekit/frzf.hpp>
#include <posekit/geometry.hpp>
#include <posekit/render.hpp>
#include <posekit/shapes.hpp>
#include <posekit/visual.hpp>

#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"

namespace posekit {
namespace {

RgbImage randomImage(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  RgbImage img(w, h, 3);
  for (auto& v : img.data) v = u(rng);
  return img;
}

TEST(RgbPatches, MatchesPixelLoop) {
  const RgbImage crop = randomImage(64, 64, 1);
  const PatchFeatureGrid g = encodeRgbPatches(crop, 8);
  ASSERT_EQ(g.rows, 8);
  ASSERT_EQ(g.patch_size, 8);
  EXPECT_FALSE(g.hasCoverage());
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      for (int k = 0; k < 3; ++k) {
        double s = 0.0;
        for (int dy = 0; dy < 8; ++dy)
          for (int dx = 0; dx < 8; ++dx) s += crop.at(c * 8 + dx, r * 8 + dy, k);
        EXPECT_NEAR(g.cell(r, c)[k], s / 64.0, 1e-6);
      }
}

TEST(RgbPatches, CoverageWeightedMean) {
  const RgbImage crop = randomImage(16, 16, 2);
  Image<float> cov(16, 16, 1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : cov.data) v = u(rng) < 0.3f ? 0.0f : u(rng);
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) cov.at(x, y) = 0.0f;  // one empty cell
  const PatchFeatureGrid g = encodeRgbPatches(crop, 4, &cov);
  ASSERT_TRUE(g.hasCoverage());
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double w = 0.0, s[3] = {0, 0, 0};
      for (int y = r * 4; y < r * 4 + 4; ++y)
        for (int x = c * 4; x < c * 4 + 4; ++x) {
          w += cov.at(x, y);
          for (int k = 0; k < 3; ++k) s[k] += cov.at(x, y) * crop.at(x, y, k);
        }
      EXPECT_NEAR(g.coverage[static_cast<size_t>(r * 4 + c)], w / 16.0, 1e-6);
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(g.cell(r, c)[k], w > 0 ? s[k] / w : 0.0, 1e-6);
    }
  EXPECT_EQ(g.cell(0, 0)[0], 0.0f);
}

TEST(RgbPatches, ShapeErrors) {
  EXPECT_THROW(encodeRgbPatches(RgbImage(16, 12, 3), 4), Error);
  EXPECT_THROW(encodeRgbPatches(RgbImage(18, 18, 3), 4), Error);
  EXPECT_THROW(encodeRgbPatches(RgbImage(16, 16, 1), 4), Error);
}

TEST(PatchesToPixels, MidpointsBetweenCentres) {
  PatchFeatureGrid g;
  g.rows = 1;
  g.cols = 2;
  g.channels = 1;
  g.values = {0.0f, 1.0f};
  const FeatureMap m = patchesToPixels(g, 1, 4);
  // Pixel centres 0.5..3.5, cell centres 1 and 3.
  EXPECT_FLOAT_EQ(m.at(0, 0), 0.0f);
  EXPECT_FLOAT_EQ(m.at(1, 0), 0.25f);
  EXPECT_FLOAT_EQ(m.at(2, 0), 0.75f);
  EXPECT_FLOAT_EQ(m.at(3, 0), 1.0f);
}

TEST(PatchesToPixels, MatchesTentFilterOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  PatchFeatureGrid g;
  g.rows = g.cols = 5;
  g.channels = 2;
  g.values.resize(50);
  for (auto& v : g.values) v = u(rng);
  const int out = 35;
  const double patch = static_cast<double>(out) / g.cols;
  const FeatureMap m = patchesToPixels(g, out, out);
  for (int y = 0; y < out; ++y)
    for (int x = 0; x < out; ++x) {
      const double px = std::clamp(x + 0.5, 0.5 * patch, (g.cols - 0.5) * patch);
      const double py = std::clamp(y + 0.5, 0.5 * patch, (g.rows - 0.5) * patch);
      for (int k = 0; k < 2; ++k) {
        double want = 0.0;
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) {
            const double wx = std::max(0.0, 1.0 - std::abs(px - (c + 0.5) * patch) / patch);
            const double wy = std::max(0.0, 1.0 - std::abs(py - (r + 0.5) * patch) / patch);
            want += wx * wy * g.cell(r, c)[k];
          }
        EXPECT_NEAR(m.at(x, y, k), want, 1e-5) << x << "," << y;
      }
    }
}

TEST(PatchesToPixels, ConstantGridStaysConstant) {
  PatchFeatureGrid g;
  g.rows = g.cols = 3;
  g.channels = 1;
  g.values.assign(9, 0.7f);
  const FeatureMap m = patchesToPixels(g, 17, 23);
  for (float v : m.data) EXPECT_NEAR(v, 0.7f, 1e-6f);
}

TEST(PatchGrid, LoadsFromFrzf) {
  const auto path = std::filesystem::temp_directory_path() / "posekit_grid.frzf";
  FeatureMatrix m(16, 5);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(i);
  writeFrzf(path, m);
  const PatchFeatureGrid g = loadPatchGrid(path, 64);
  EXPECT_EQ(g.rows, 4);
  EXPECT_EQ(g.channels, 5);
  EXPECT_EQ(g.patch_size, 16);
  EXPECT_EQ(g.cell(1, 2)[3], m(6, 3));
  writeFrzf(path, FeatureMatrix::Zero(15, 5));
  EXPECT_THROW(loadPatchGrid(path, 64), Error);
  std::filesystem::remove(path);
}

Eigen::MatrixXd correlatedSamples(int k, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd mix(c, c), x(k, c);
  for (Eigen::Index i = 0; i < mix.size(); ++i) mix.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  return (x * mix).rowwise() + Eigen::RowVectorXd::LinSpaced(c, -3, 3);
}

TEST(Pca, EigenvaluesMatchJacobiOracle) {
  const Eigen::MatrixXd s = correlatedSamples(200, 12, 5);
  const PcaModel m = fitPca(s, 12);
  const Eigen::MatrixXd centered = s.rowwise() - s.colwise().mean();
  const auto want = oracle::jacobiEigenvalues(centered.transpose() * centered / 199.0);
  for (int i = 0; i < 12; ++i) EXPECT_NEAR(m.explained_variance(i), want[static_cast<size_t>(i)], 1e-8);
  EXPECT_LT((m.basis.transpose() * m.basis - Eigen::MatrixXd::Identity(12, 12)).norm(), 1e-10);
}

TEST(Pca, FullRankIsAnIsometry) {
  const Eigen::MatrixXd s = correlatedSamples(50, 6, 6);
  const PcaModel m = fitPca(s, 6);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd a = s.row(i).transpose(), b = s.row(i + 20).transpose();
    EXPECT_NEAR((applyPca(m, a) - applyPca(m, b)).norm(), (a - b).norm(), 1e-9);
  }
}

TEST(Pca, PlanarDataRankAndReconstruction) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  const Vec3 e1(1, 2, 0.5), e2(-0.3, 0.1, 1.0), o(4, -1, 2);
  Eigen::MatrixXd s(100, 3);
  for (int i = 0; i < 100; ++i) s.row(i) = (o + n(rng) * e1 + n(rng) * e2).transpose();
  try {
    fitPca(s, 3);
    FAIL() << "expected rank error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "insufficient rank: achieved 2");
  }
  const PcaModel m = fitPcaUpTo(s, 3);
  ASSERT_EQ(m.outputDim(), 2);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = s.row(i).transpose();
    const Eigen::VectorXd back = m.mean + m.basis * applyPca(m, x);
    EXPECT_LT((back - x).norm(), 1e-9);
  }
}

TEST(Pca, DeterministicSignAndErrors) {
  const Eigen::MatrixXd s = correlatedSamples(40, 5, 8);
  const PcaModel m = fitPca(s, 3);
  for (int j = 0; j < 3; ++j) {
    Eigen::Index arg;
    m.basis.col(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(m.basis(arg, j), 0.0);
  }
  EXPECT_THROW(fitPca(s, 6), Error);
  EXPECT_THROW(fitPca(s.topRows(3), 3), Error);
  EXPECT_THROW(fitPcaUpTo(Eigen::MatrixXd::Ones(10, 4), 2), Error);
  EXPECT_THROW(applyPca(m, Eigen::VectorXd::Zero(4)), Error);
}

TEST(Pca, FeatureSetKeepsInvalidRowsZero) {
  const Eigen::MatrixXd s = correlatedSamples(30, 4, 9);
  const PcaModel m = fitPca(s, 2);
  FeatureSet f(3, 4);
  f.features = s.topRows(3).cast<float>();
  f.valid[1] = 0;
  const FeatureSet out = applyPca(m, f);
  EXPECT_EQ(out.valid, f.valid);
  EXPECT_EQ(out.features.row(1).cwiseAbs().sum(), 0.0f);
  EXPECT_NEAR(out.features(0, 0), applyPca(m, Eigen::VectorXd(s.row(0).transpose()))(0), 1e-5);
}

TEST(PcaColorizer, RangeAndInvalidRows) {
  const Eigen::MatrixXd s = correlatedSamples(60, 8, 10);
  FeatureSet f(60, 8);
  f.features = s.cast<float>();
  f.valid[5] = 0;
  const PcaColorizer col = PcaColorizer::fit(f);
  const auto colors = col.colors(f);
  Vec3 lo = Vec3::Constant(1.0), hi = Vec3::Zero();
  for (size_t i = 0; i < colors.size(); ++i) {
    if (i == 5) {
      EXPECT_EQ(colors[i], Vec3::Zero());
      continue;
    }
    lo = lo.cwiseMin(colors[i]);
    hi = hi.cwiseMax(colors[i]);
  }
  EXPECT_NEAR(lo.maxCoeff(), 0.0, 1e-6);
  EXPECT_NEAR(hi.minCoeff(), 1.0, 1e-6);
}

Vec3 directionColor(const Vec3& d) { return 0.5 * (d + Vec3::Ones()); }

TEST(QueryBackprojection, SingleViewRecoversSurfaceColour) {
  const double radius = 0.05;
  const TriangleMesh sphere = makeSphere(radius, 4, directionColor);
  const PointCloud cloud = sampleSurface(sphere, 2000, 1);
  const auto poses = sampleViewpoints(1, 0.4);
  TemplateView view = render(sphere, poses[0], templateCamera(128, 2 * radius, 0.4, 0.5));
  view.camera_pose = poses[0];
  const FeatureSet f = backprojectQueryFeatures({view}, {view.rgb}, cloud, 0.01);
  ASSERT_EQ(f.dim(), 3);
  const Vec3 toward_camera = -(poses[0].rotation.transpose() * poses[0].translation).normalized();
  size_t valid = 0;
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 d = cloud.points[i].normalized();
    if (!f.valid[i]) continue;
    ++valid;
    EXPECT_GT(d.dot(toward_camera), -0.2) << "back-facing point received a feature";
    const Vec3 got = f.features.row(static_cast<Eigen::Index>(i)).cast<double>().transpose();
    EXPECT_LT((got - directionColor(d)).norm(), 0.08);
  }
  EXPECT_GT(valid, 500u);
  EXPECT_LT(valid, 1200u);
}

TEST(QueryBackprojection, AveragesPerViewThenAcrossViews) {
  const TriangleMesh sphere = makeSphere(0.05, 3, directionColor);
  const PointCloud cloud = sampleSurface(sphere, 1500, 2);
  const RigidTransform a = lookAtOrigin(Vec3(0.4, 0, 0)), b = lookAtOrigin(Vec3(0, 0.4, 0));
  const CameraIntrinsics k = templateCamera(96, 0.1, 0.4, 0.5);
  std::vector<TemplateView> views;
  for (const auto& pose : {a, b}) {
    TemplateView v = render(sphere, pose, k);
    v.camera_pose = pose;
    views.push_back(v);
  }
  FeatureMap one(96, 96, 1, 1.0f), three(96, 96, 1, 3.0f);
  const FeatureSet f = backprojectQueryFeatures(views, {one, three}, cloud, 0.01);
  int both = 0, only_a = 0, only_b = 0;
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (!f.valid[i]) continue;
    const float v = f.features(static_cast<Eigen::Index>(i), 0);
    if (std::abs(v - 2.0f) < 1e-6f) ++both;
    else if (std::abs(v - 1.0f) < 1e-6f) ++only_a;
    else if (std::abs(v - 3.0f) < 1e-6f) ++only_b;
    else ADD_FAILURE() << "unexpected value " << v;
  }
  EXPECT_GT(both, 50);
  EXPECT_GT(only_a, 50);
  EXPECT_GT(only_b, 50);
}

TEST(QueryBackprojection, ErrorCases) {
  const TriangleMesh sphere = makeSphere(0.05, 2, directionColor);
  const PointCloud cloud = sampleSurface(sphere, 300, 3);
  const RigidTransform pose = lookAtOrigin(Vec3(0, 0, 0.4));
  TemplateView v = render(sphere, pose, templateCamera(64, 0.1, 0.4, 0.5));
  v.camera_pose = pose;
  EXPECT_THROW(backprojectQueryFeatures({v}, {}, cloud, 0.01), Error);
  EXPECT_THROW(backprojectQueryFeatures({v}, {FeatureMap(32, 32, 1)}, cloud, 0.01), Error);
  PointCloud far = cloud;
  for (auto& p : far.points) p += Vec3(10, 0, 0);
  EXPECT_THROW(backprojectQueryFeatures({v}, {v.rgb}, far, 0.01), Error);
}

TEST(TargetTransfer, GathersMaskedPixelsInRowMajorOrder) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int w = 20, h = 15;
  CameraIntrinsics k;
  k.fx = k.fy = 30;
  k.cx = 9.5;
  k.cy = 7;
  k.width = w;
  k.height = h;
  DepthImage depth(w, h);
  MaskImage mask(w, h);
  FeatureMap map(w, h, 4);
  for (auto& v : map.data) v = static_cast<float>(u(rng));
  std::vector<std::pair<int, int>> expected;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      mask.at(x, y) = u(rng) < 0.5;
      depth.at(x, y) = u(rng) < 0.9 ? 0.5 + u(rng) : 0.0;
      if (mask.at(x, y) && depth.at(x, y) > 0.0) expected.emplace_back(x, y);
    }
  const PointCloud cloud = backprojectDepth(depth, mask, k);
  ASSERT_EQ(cloud.size(), expected.size());
  const FeatureSet f = transferTargetFeatures(map, mask, depth, cloud);
  for (size_t m = 0; m < expected.size(); ++m)
    for (int c = 0; c < 4; ++c)
      EXPECT_EQ(f.features(static_cast<Eigen::Index>(m), c), map.at(expected[m].first, expected[m].second, c));
  PointCloud shorter = cloud;
  shorter.points.pop_back();
  EXPECT_THROW(transferTargetFeatures(map, mask, depth, shorter), Error);
}

}  // namespace
}  // namespace posekit
