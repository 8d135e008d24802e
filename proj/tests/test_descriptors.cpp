#include <posekit/descriptors.hpp>
#include <posekit/frzf.hpp>
#include <posekit/geometry.hpp>
#include <posekit/shapes.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"

namespace posekit {
namespace {

// Straight-line FPFH following the textbook construction, with brute-force
// neighbourhoods. Used to check the library's indexing and weighting.
std::vector<std::array<double, 33>> fpfhOracle(const PointCloud& c, double radius) {
  const size_t n = c.size();
  auto bin = [](double v, double lo, double hi) {
    int b = static_cast<int>(std::floor(11.0 * (v - lo) / (hi - lo)));
    return std::min(10, std::max(0, b));
  };
  auto normalize = [](std::array<double, 33>& h) {
    for (int b = 0; b < 3; ++b) {
      double s = 0.0;
      for (int i = 0; i < 11; ++i) s += h[b * 11 + i];
      if (s > 0.0)
        for (int i = 0; i < 11; ++i) h[b * 11 + i] /= s;
    }
  };
  std::vector<std::vector<std::pair<size_t, double>>> nbrs(n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      const double d = (c.points[j] - c.points[i]).norm();
      if (j != i && d > 0.0 && d <= radius) nbrs[i].emplace_back(j, d);
    }
  std::vector<std::array<double, 33>> spfh(n);
  std::vector<bool> ok(n, false);
  for (size_t i = 0; i < n; ++i) {
    std::array<double, 33> h{};
    for (const auto& [j, d] : nbrs[i]) {
      Vec3 ps = c.points[i], pt = c.points[j], ns = c.normals[i], nt = c.normals[j];
      Vec3 e = (pt - ps) / d;
      if (std::abs(ns.dot(e)) < std::abs(nt.dot(e))) {
        std::swap(ps, pt);
        std::swap(ns, nt);
        e = -e;
      }
      const Vec3 u = ns;
      Vec3 v = e.cross(u);
      if (v.norm() == 0.0) continue;
      v.normalize();
      const Vec3 w = u.cross(v);
      double theta = std::atan2(w.dot(nt), u.dot(nt));
      if (std::abs(theta) > M_PI - 1e-9) theta = M_PI;  // one side of the seam
      h[static_cast<size_t>(bin(theta, -M_PI, M_PI))] += 1;
      h[static_cast<size_t>(11 + bin(v.dot(nt), -1, 1))] += 1;
      h[static_cast<size_t>(22 + bin(u.dot(e), -1, 1))] += 1;
      ok[i] = true;
    }
    normalize(h);
    spfh[i] = h;
  }
  std::vector<std::array<double, 33>> out(n);
  for (size_t i = 0; i < n; ++i) {
    if (!ok[i]) continue;
    std::array<double, 33> acc{};
    for (const auto& [j, d] : nbrs[i])
      for (int k = 0; k < 33; ++k) acc[static_cast<size_t>(k)] += spfh[j][static_cast<size_t>(k)] / d;
    normalize(acc);
    for (int k = 0; k < 33; ++k) out[i][static_cast<size_t>(k)] = spfh[i][static_cast<size_t>(k)] + acc[static_cast<size_t>(k)];
    normalize(out[i]);
  }
  return out;
}

PointCloud objectCloud(size_t n, std::uint64_t seed) { return sampleSurface(makeAsymmetricObject(), n, seed); }

TEST(Fpfh, MatchesTextbookOracle) {
  const PointCloud c = objectCloud(600, 3);
  const double radius = 0.03;
  const FeatureSet f = encodeFpfh(c, radius);
  const auto want = fpfhOracle(c, radius);
  ASSERT_EQ(f.dim(), kFpfhDim);
  for (size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < kFpfhDim; ++k)
      ASSERT_NEAR(f.features(static_cast<Eigen::Index>(i), k), want[i][static_cast<size_t>(k)], 1e-6) << i << "," << k;
}

TEST(Fpfh, RowsSumToThreeOrAreFlagged) {
  const FeatureSet f = encodeFpfh(objectCloud(800, 1), 0.02);
  for (size_t i = 0; i < f.rows(); ++i) {
    const double s = f.features.row(static_cast<Eigen::Index>(i)).cast<double>().sum();
    if (f.valid[i]) {
      EXPECT_NEAR(s, 3.0, 1e-6);
    } else {
      EXPECT_EQ(s, 0.0);
    }
  }
}

TEST(Fpfh, RigidInvarianceOverRandomPoses) {
  const PointCloud c = objectCloud(400, 7);
  const double radius = 0.3 * 0.154;
  const FeatureSet base = encodeFpfh(c, radius);
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const RigidTransform t(oracle::randomRotation(rng), oracle::randomVec(rng, -1, 1));
    PointCloud moved = transformCloud(c, t);
    const FeatureSet f = encodeFpfh(moved, radius);
    worst = std::max(worst, static_cast<double>((f.features - base.features).cwiseAbs().maxCoeff()));
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(Fpfh, PlanarPatchAlphaAtZeroTilt) {
  // Coplanar points with identical normals: every pair has alpha = 0.
  PointCloud c;
  c.points = {{0, 0, 0}, {0.01, 0, 0}, {0, 0.01, 0}};
  c.normals.assign(3, Vec3::UnitZ());
  const FeatureSet f = encodeFpfh(c, 0.05);
  const int zero_bin = static_cast<int>(std::floor(11.0 * (0.0 + 1.0) / 2.0));
  for (size_t i = 0; i < 3; ++i) {
    ASSERT_TRUE(f.valid[i]);
    EXPECT_NEAR(f.features(static_cast<Eigen::Index>(i), kFpfhBins + zero_bin), 1.0, 1e-6);
  }
}

TEST(Fpfh, IsolatedPointIsInvalidZero) {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  c.normals.assign(3, Vec3::UnitZ());
  const FeatureSet f = encodeFpfh(c, 0.1);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(f.valid[i], 0);
    EXPECT_EQ(f.features.row(static_cast<Eigen::Index>(i)).cwiseAbs().sum(), 0.0f);
  }
}

TEST(Multiscale, DimensionAndPerScaleEquality) {
  const PointCloud c = objectCloud(500, 2);
  const double d = 0.154;
  GeometricEncoderConfig cfg;
  const FeatureSet f = encodeMultiscale(c, cfg, d);
  ASSERT_EQ(f.dim(), 66);
  const FeatureSet s0 = encodeFpfh(c, 0.3 * d);
  const FeatureSet s1 = encodeFpfh(c, 0.4 * d);
  EXPECT_EQ(f.features.leftCols(33), s0.features);
  EXPECT_EQ(f.features.rightCols(33), s1.features);

  cfg.radii = {0.3};
  EXPECT_EQ(encodeMultiscale(c, cfg, d).features, s0.features);
}

TEST(Multiscale, ScaleInvariantWithDiameter) {
  const PointCloud c = objectCloud(500, 4);
  PointCloud big = c;
  for (auto& p : big.points) p *= 2.0;
  GeometricEncoderConfig cfg;
  const FeatureSet a = encodeMultiscale(c, cfg, 0.154);
  const FeatureSet b = encodeMultiscale(big, cfg, 0.308);
  EXPECT_LE((a.features - b.features).cwiseAbs().maxCoeff(), 1e-5f);
}

TEST(Multiscale, ConfigValidation) {
  GeometricEncoderConfig cfg;
  cfg.radii = {};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.radii = {1.5};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.radii = {0.0};
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(ExternalFeatures, RoundTripAndRowMismatch) {
  const auto path = std::filesystem::temp_directory_path() / "posekit_ext_features.frzf";
  std::mt19937_64 rng(5);
  std::normal_distribution<float> n(0.0f, 1.0f);
  FeatureMatrix m(5, 8);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  writeFrzf(path, m);
  PointCloud five;
  five.points.assign(5, Vec3::Zero());
  const FeatureSet f = loadExternalFeatures(path, five);
  EXPECT_EQ(std::memcmp(f.features.data(), m.data(), sizeof(float) * 40), 0);
  EXPECT_EQ(f.validCount(), 5u);

  PointCloud four;
  four.points.assign(4, Vec3::Zero());
  try {
    loadExternalFeatures(path, four);
    FAIL() << "expected row count mismatch";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "row count mismatch");
  }

  // Truncate the payload.
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  try {
    loadExternalFeatures(path, five);
    FAIL() << "expected truncation error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "unexpected end of stream");
  }
  std::filesystem::remove(path);
}

TEST(ExternalFeatures, ZeroRowsAreInvalid) {
  const auto path = std::filesystem::temp_directory_path() / "posekit_ext_zero.frzf";
  FeatureMatrix m = FeatureMatrix::Ones(3, 4);
  m.row(1).setZero();
  writeFrzf(path, m);
  PointCloud c;
  c.points.assign(3, Vec3::Zero());
  const FeatureSet f = loadExternalFeatures(path, c);
  EXPECT_EQ(f.valid, (std::vector<std::uint8_t>{1, 0, 1}));
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace posekit
