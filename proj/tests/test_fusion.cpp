#include <posekit/fusion.hpp>
#include <posekit/registration.hpp>

#include <gtest/gtest.h>

#include <numeric>

#include "oracles.hpp"

namespace posekit {
namespace {

FeatureSet fromRows(std::initializer_list<std::vector<float>> rows) {
  const int dim = static_cast<int>(rows.begin()->size());
  FeatureSet f(rows.size(), dim);
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    for (int c = 0; c < dim; ++c) f.features(r, c) = row[static_cast<size_t>(c)];
    ++r;
  }
  return f;
}

FeatureSet randomSet(size_t n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  FeatureSet f(n, dim);
  for (Eigen::Index i = 0; i < f.features.size(); ++i) f.features.data()[i] = g(rng);
  return f;
}

TEST(Fuse, ThreeFourFive) {
  const FeatureSet v = fromRows({{3, 4}});
  const FeatureSet g = fromRows({{0, 5}});
  const FeatureSet f = fuse(v, g);
  ASSERT_EQ(f.dim(), 4);
  EXPECT_FLOAT_EQ(f.features(0, 0), 0.6f);
  EXPECT_FLOAT_EQ(f.features(0, 1), 0.8f);
  EXPECT_FLOAT_EQ(f.features(0, 2), 0.0f);
  EXPECT_FLOAT_EQ(f.features(0, 3), 1.0f);
}

TEST(Fuse, RowNormIsRootTwoWithUnitWeights) {
  const FeatureSet f = fuse(randomSet(100, 16, 1), randomSet(100, 66, 2));
  for (size_t i = 0; i < f.rows(); ++i)
    EXPECT_NEAR(f.features.row(static_cast<Eigen::Index>(i)).cast<double>().norm(), std::sqrt(2.0), 1e-6);
}

TEST(Fuse, WeightsScaleBlocks) {
  const FeatureSet f = fuse(randomSet(20, 8, 3), randomSet(20, 5, 4), {0.5, 2.0});
  for (Eigen::Index i = 0; i < 20; ++i) {
    EXPECT_NEAR(f.features.row(i).head(8).cast<double>().norm(), 0.5, 1e-6);
    EXPECT_NEAR(f.features.row(i).tail(5).cast<double>().norm(), 2.0, 1e-6);
  }
}

TEST(Fuse, InvalidAndZeroRows) {
  FeatureSet v = randomSet(4, 3, 5), g = randomSet(4, 3, 6);
  v.valid[1] = 0;
  v.features.row(1).setZero();
  g.features.row(2).setZero();
  const FeatureSet f = fuse(v, g);
  EXPECT_EQ(f.valid, (std::vector<std::uint8_t>{1, 0, 0, 1}));
  EXPECT_EQ(f.features.row(1).cwiseAbs().sum(), 0.0f);
  EXPECT_EQ(f.features.row(2).cwiseAbs().sum(), 0.0f);

  // A block with zero weight no longer decides validity.
  const FeatureSet geo_only = fuse(v, g, {0.0, 1.0});
  EXPECT_EQ(geo_only.valid, (std::vector<std::uint8_t>{1, 1, 0, 1}));
  EXPECT_EQ(geo_only.features.leftCols(3).cwiseAbs().sum(), 0.0f);
}

TEST(Fuse, InvariantToPerBlockScale) {
  const FeatureSet v = randomSet(30, 6, 7), g = randomSet(30, 4, 8);
  FeatureSet v2 = v, g2 = g;
  v2.features *= 1000.0f;
  g2.features *= 0.001f;
  const FeatureSet a = fuse(v, g), b = fuse(v2, g2);
  EXPECT_LT((a.features - b.features).cwiseAbs().maxCoeff(), 1e-6f);
}

TEST(Fuse, Errors) {
  EXPECT_THROW(fuse(randomSet(3, 2, 1), randomSet(4, 2, 1)), Error);
  try {
    fuse(randomSet(3, 2, 1), randomSet(4, 2, 1));
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "row count mismatch");
  }
  EXPECT_THROW(fuse(randomSet(3, 2, 1), randomSet(3, 2, 1), {-1.0, 1.0}), Error);
}

TEST(Match, EqualsBruteForce) {
  const FeatureSet q = randomSet(300, 10, 9);
  FeatureSet t = randomSet(500, 10, 10);
  t.valid[17] = 0;
  t.features.row(17).setZero();
  const auto got = matchFeatures(q, t);
  ASSERT_EQ(got.size(), 300u);
  for (const auto& c : got) {
    int best = -1;
    double bd = 1e300;
    for (int j = 0; j < 500; ++j) {
      if (!t.valid[static_cast<size_t>(j)]) continue;
      const double d = (q.features.row(c.query) - t.features.row(j)).cast<double>().norm();
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    EXPECT_EQ(c.target, best);
    EXPECT_NEAR(c.distance, bd, 1e-4);
  }
}

TEST(Match, OneHotPermutationIsRecovered) {
  const int n = 40;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(11));
  FeatureSet q(n, n), t(n, n);
  for (int i = 0; i < n; ++i) {
    q.features(i, i) = 1.0f;
    t.features(perm[static_cast<size_t>(i)], i) = 1.0f;
  }
  const auto m = matchFeatures(q, t, true);
  ASSERT_EQ(m.size(), static_cast<size_t>(n));
  for (const auto& c : m) {
    EXPECT_EQ(c.target, perm[static_cast<size_t>(c.query)]);
    EXPECT_EQ(c.distance, 0.0);
  }
}

TEST(Match, TiesGoToLowerIndexAndMutualFilters) {
  const FeatureSet q = fromRows({{0, 0}, {0.1f, 0}});
  const FeatureSet t = fromRows({{1, 0}, {-1, 0}, {5, 5}});
  const auto all = matchFeatures(q, t);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].target, 0);  // equidistant from targets 0 and 1
  EXPECT_EQ(all[1].target, 0);
  const auto mutual = matchFeatures(q, t, true);
  ASSERT_EQ(mutual.size(), 1u);
  EXPECT_EQ(mutual[0].query, 1);
}

TEST(Match, NoValidRowsThrows) {
  FeatureSet q = randomSet(3, 2, 1);
  std::fill(q.valid.begin(), q.valid.end(), 0);
  EXPECT_THROW(matchFeatures(q, randomSet(3, 2, 2)), Error);
  EXPECT_THROW(matchFeatures(randomSet(3, 2, 1), randomSet(3, 3, 2)), Error);
}

}  // namespace
}  // namespace posekit
