#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rclicks/imaging.hpp"

using namespace rclicks;

namespace {

BinaryMask from_rows(const std::vector<std::string>& rows) {
  BinaryMask m(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) m.set(x, y, rows[y][x] == '#');
  return m;
}

}  // namespace

TEST(BinaryMask, RejectsBadDimensions) {
  EXPECT_THROW(BinaryMask(0, 3), Error);
  EXPECT_THROW(BinaryMask(3, 2, std::vector<std::uint8_t>(5)), Error);
}

TEST(BinaryMask, NormalizesBits) {
  BinaryMask m(2, 1, {7, 0});
  EXPECT_TRUE(m(0, 0));
  EXPECT_EQ(m.bits()[0], 1);
  EXPECT_EQ(m.count(), 1u);
}

TEST(DistanceTransform, AllFalseIsZero) {
  const auto dt = distance_transform(BinaryMask(7, 5));
  for (double v : dt.values()) EXPECT_EQ(v, 0.0);
}

TEST(DistanceTransform, SinglePixelSeesBorderRing) {
  BinaryMask m(1, 1);
  m.set(0, 0);
  EXPECT_EQ(distance_transform(m)(0, 0), 1.0);
}

TEST(DistanceTransform, FullMaskCountsDistanceToRing) {
  BinaryMask m(5, 3);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i);
  const auto dt = distance_transform(m);
  EXPECT_EQ(dt(2, 1), 2.0);
  EXPECT_EQ(dt(0, 0), 1.0);
}

TEST(DistanceTransform, MatchesBruteForceOnRandomMasks) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 30; ++t) {
    const auto m = t % 2 ? oracle::random_mask(rng, 40, 33, 0.7) : oracle::random_blobs(rng, 40, 33, 4);
    const auto dt = distance_transform(m);
    const auto expected = oracle::distance_transform(m);
    for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(dt[i], expected[i]) << "trial " << t << " pixel " << i;
  }
}

TEST(DistanceTransform, UnreachableWithoutFeature) {
  const auto d = squared_distance_to(BinaryMask(3, 3), false);
  for (auto v : d) EXPECT_EQ(v, kUnreachable);
}

TEST(DistanceTransform, DistanceToFeatureIgnoresBorder) {
  BinaryMask f(5, 1);
  f.set(0, 0);
  const auto d = squared_distance_to(f, false);
  EXPECT_EQ(d[4], 16);
  EXPECT_EQ(squared_distance_to(f, true)[4], 1);
}

TEST(ConnectedComponents, DiagonalTouching) {
  const auto m = from_rows({"#.", ".#"});
  EXPECT_EQ(connected_components(m, 8).count(), 1);
  EXPECT_EQ(connected_components(m, 4).count(), 2);
}

TEST(ConnectedComponents, RejectsOtherConnectivity) {
  EXPECT_THROW(connected_components(BinaryMask(2, 2), 6), Error);
}

TEST(ConnectedComponents, MatchesFloodFill) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    const auto m = oracle::random_mask(rng, 32, 32, 0.45);
    for (int conn : {4, 8}) {
      const auto regions = connected_components(m, conn);
      const auto expected = oracle::flood_fill_labels(m, conn);
      ASSERT_TRUE(std::equal(expected.begin(), expected.end(), regions.labels().begin()));
      std::size_t total = 0;
      for (int id = 1; id <= regions.count(); ++id) {
        total += regions.region_size(id);
        EXPECT_EQ(regions.mask_of(id).count(), regions.region_size(id));
      }
      EXPECT_EQ(total, m.count());
    }
  }
}

TEST(GaussianBlur, RejectsNonPositiveSigma) {
  EXPECT_THROW(gaussian_blur(ScalarField(3, 3), 0.0), Error);
  EXPECT_THROW(gaussian_blur(ScalarField(3, 3), -1.0), Error);
}

TEST(GaussianBlur, ImpulseIsSymmetric) {
  ScalarField f(65, 65);
  f(32, 32) = 1.0;
  const auto out = gaussian_blur(f, 5.0);
  const auto taps = gaussian_kernel(5.0);
  EXPECT_DOUBLE_EQ(out(32, 32), taps[taps.size() / 2] * taps[taps.size() / 2]);
  for (int y = 0; y < 65; ++y)
    for (int x = 0; x < 65; ++x) EXPECT_NEAR(out(x, y), out(64 - y, x), 1e-15);
}

TEST(GaussianBlur, ConstantInteriorUnchanged) {
  ScalarField f(60, 60, std::vector<double>(3600, 0.7));
  const auto out = gaussian_blur(f, 3.0);
  for (int y = 10; y < 50; ++y)
    for (int x = 10; x < 50; ++x) EXPECT_NEAR(out(x, y), 0.7, 1e-9);
}

TEST(GaussianBlur, MatchesDenseConvolution) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(256);
  for (auto& x : v) x = u(rng);
  const auto out = gaussian_blur(ScalarField(16, 16, v), 2.0);
  const auto expected = oracle::dense_blur(v, 16, 16, 2.0);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(out[i], expected[i], 1e-9);
}

TEST(Iou, HandCases) {
  EXPECT_DOUBLE_EQ(iou(BinaryMask(3, 1, {1, 1, 0}), BinaryMask(3, 1, {0, 1, 1})), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(iou(BinaryMask(2, 1, {1, 0}), BinaryMask(2, 1, {0, 1})), 0.0);
  EXPECT_DOUBLE_EQ(iou(BinaryMask(2, 1, {1, 1}), BinaryMask(2, 1, {1, 1})), 1.0);
  EXPECT_DOUBLE_EQ(iou(BinaryMask(2, 2), BinaryMask(2, 2)), 1.0);
  EXPECT_THROW(iou(BinaryMask(2, 2), BinaryMask(2, 3)), Error);
}

TEST(ErrorRegions, Cases) {
  const auto gt = from_rows({"##.", "..."});
  const auto empty = error_regions(BinaryMask(3, 2), gt);
  EXPECT_EQ(empty.false_negative, gt);
  EXPECT_FALSE(empty.false_positive.any());
  const auto same = error_regions(gt, gt);
  EXPECT_FALSE(same.false_negative.any() || same.false_positive.any());
  const auto flipped = error_regions(~gt, gt);
  EXPECT_EQ(flipped.false_negative, gt);
  EXPECT_EQ(flipped.false_positive, ~gt);
}

TEST(BoundingBox, Tight) {
  const auto b = bounding_box(from_rows({"....", ".##.", "..#."}));
  ASSERT_TRUE(b);
  EXPECT_EQ(*b, (Box{1, 1, 2, 2}));
  EXPECT_FALSE(bounding_box(BinaryMask(2, 2)));
}
