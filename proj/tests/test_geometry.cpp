#include <gtest/gtest.h>

#include <random>

#include "crownbench/geometry.hpp"
#include "support.hpp"

using namespace crownbench;

TEST(Iou, IdenticalBoxesGiveOne) {
  const GeoBox b{3.5, -2.0, 9.25, 4.0};
  EXPECT_EQ(iou(b, b), 1.0);
}

TEST(Iou, DisjointBoxesGiveZero) { EXPECT_EQ(iou(GeoBox{0, 0, 1, 1}, GeoBox{5, 5, 6, 6}), 0.0); }

TEST(Iou, TouchingEdgesGiveZero) { EXPECT_EQ(iou(GeoBox{0, 0, 1, 1}, GeoBox{1, 0, 2, 1}), 0.0); }

TEST(Iou, PartialOverlapByAreaArithmetic) {
  // inter 1, union 4 + 4 - 1
  EXPECT_DOUBLE_EQ(iou(GeoBox{0, 0, 2, 2}, GeoBox{1, 1, 3, 3}), 1.0 / 7.0);
}

TEST(Iou, ContainedBoxIsAreaRatio) { EXPECT_DOUBLE_EQ(iou(GeoBox{0, 0, 4, 4}, GeoBox{1, 1, 3, 3}), 0.25); }

TEST(Iou, ZeroAreaOperandThrows) {
  EXPECT_THROW(iou(GeoBox{0, 0, 0, 5}, GeoBox{0, 0, 1, 1}), DomainError);
  EXPECT_THROW(iou(GeoBox{0, 0, 1, 1}, GeoBox{2, 2, 3, 2}), DomainError);
}

TEST(Iou, WorksOnIntegerBoxes) { EXPECT_DOUBLE_EQ(iou(PixelBox{0, 0, 2, 2}, PixelBox{1, 1, 3, 3}), 1.0 / 7.0); }

TEST(IouProperty, SymmetricBoundedAndOneOnlyWhenIdentical) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5000; ++i) {
    const GeoBox a = testing_support::random_box(rng, 20.0, 10.0);
    const GeoBox b = testing_support::random_box(rng, 20.0, 10.0);
    const double ab = iou(a, b), ba = iou(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    if (!(a == b)) EXPECT_LT(ab, 1.0);
  }
}

TEST(IouProperty, ScaleInvariance) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 2000; ++i) {
    const GeoBox a = testing_support::random_box(rng, 20.0, 10.0);
    const GeoBox b = testing_support::random_box(rng, 20.0, 10.0);
    for (double s : {0.5, 3.0, 100.0}) {
      const GeoBox sa{a.min_x * s, a.min_y * s, a.max_x * s, a.max_y * s};
      const GeoBox sb{b.min_x * s, b.min_y * s, b.max_x * s, b.max_y * s};
      EXPECT_NEAR(iou(sa, sb), iou(a, b), 1e-12);
    }
  }
}

TEST(IouProperty, TranslationInvariance) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> shift(-1000.0, 1000.0);
  for (int i = 0; i < 2000; ++i) {
    const GeoBox a = testing_support::random_box(rng, 20.0, 10.0);
    const GeoBox b = testing_support::random_box(rng, 20.0, 10.0);
    const double dx = shift(rng), dy = shift(rng);
    const GeoBox ta{a.min_x + dx, a.min_y + dy, a.max_x + dx, a.max_y + dy};
    const GeoBox tb{b.min_x + dx, b.min_y + dy, b.max_x + dx, b.max_y + dy};
    EXPECT_NEAR(iou(ta, tb), iou(a, b), 1e-12);
  }
}

TEST(PixelToWorld, NorthUpCornerArithmetic) {
  const AffineTransform t(0.1, 0, 0, 0, -0.1, 100);
  const GeoBox g = pixel_to_world(PixelBox{0, 0, 10, 10}, t);
  EXPECT_DOUBLE_EQ(g.min_x, 0.0);
  EXPECT_DOUBLE_EQ(g.min_y, 99.0);
  EXPECT_DOUBLE_EQ(g.max_x, 1.0);
  EXPECT_DOUBLE_EQ(g.max_y, 100.0);
}

TEST(PixelToWorld, DegenerateBoxMapsToTranslation) {
  const AffineTransform t(0.1, 0, 12.5, 0, -0.1, 100);
  EXPECT_EQ(pixel_to_world(PixelBox{0, 0, 0, 0}, t), (GeoBox{12.5, 100, 12.5, 100}));
}

TEST(PixelToWorld, RotatedTransformGivesEnvelope) {
  // 90 degree rotation: x = -row, y = col
  const AffineTransform t(0, -1, 0, 1, 0, 0);
  EXPECT_EQ(pixel_to_world(PixelBox{0, 0, 2, 3}, t), (GeoBox{-3, 0, 0, 2}));
}

TEST(PixelToWorld, SingularTransformThrows) {
  const AffineTransform t(1, 2, 0, 2, 4, 0);
  EXPECT_FALSE(t.invertible());
  EXPECT_THROW(pixel_to_world(PixelBox{0, 0, 1, 1}, t), DomainError);
  EXPECT_THROW(world_to_pixel(GeoBox{0, 0, 1, 1}, t), DomainError);
  EXPECT_THROW(t.inverse(), DomainError);
}

TEST(WorldToPixel, InvertsCornerExample) {
  const AffineTransform t(0.1, 0, 0, 0, -0.1, 100);
  EXPECT_EQ(world_to_pixel(GeoBox{0.0, 99.0, 1.0, 100.0}, t), (PixelBox{0, 0, 10, 10}));
}

TEST(WorldToPixel, HalfPixelSpanRoundsToWidthOne) {
  // Columns 1.0 .. 1.5 and rows 1.0 .. 1.5; 1.5 rounds away from zero.
  const AffineTransform t(0.5, 0, 0, 0, -0.5, 100);
  const PixelBox p = world_to_pixel(GeoBox{0.5, 99.25, 0.75, 99.5}, t);
  EXPECT_EQ(p, (PixelBox{1, 1, 2, 2}));
  EXPECT_EQ(p.width(), 1);
}

TEST(WorldToPixel, NegativeIndexRejected) {
  const AffineTransform t(0.1, 0, 0, 0, -0.1, 100);
  EXPECT_THROW(world_to_pixel(GeoBox{-1.0, 99.0, 1.0, 100.0}, t), DomainError);
}

TEST(WorldToPixel, DoesNotClampBeyondExtent) {
  const AffineTransform t(0.1, 0, 0, 0, -0.1, 100);
  EXPECT_EQ(world_to_pixel(GeoBox{500.0, 0.0, 501.0, 1.0}, t), (PixelBox{5000, 990, 5010, 1000}));
}

TEST(WorldToPixelProperty, RoundTripOnIntegerBoxes) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> gsd(0.01, 2.0), origin(-1e6, 1e6);
  std::uniform_int_distribution<std::int64_t> idx(0, 50000), len(0, 5000);
  for (int i = 0; i < 5000; ++i) {
    const auto t = AffineTransform::north_up(origin(rng), origin(rng), gsd(rng));
    const std::int64_t c = idx(rng), r = idx(rng);
    const PixelBox p{c, r, c + len(rng), r + len(rng)};
    EXPECT_EQ(world_to_pixel(pixel_to_world(p, t), t), p);
  }
}

TEST(AffineTransform, InverseComposesToIdentity) {
  const AffineTransform t(0.3, 0.1, 500, -0.05, -0.3, 7000);
  const AffineTransform inv = t.inverse();
  const Eigen::Vector2d w = t.apply(12.0, 34.0);
  const Eigen::Vector2d back = inv.apply(w.x(), w.y());
  EXPECT_NEAR(back.x(), 12.0, 1e-9);
  EXPECT_NEAR(back.y(), 34.0, 1e-9);
}

TEST(AffineTransform, ShiftedMovesOrigin) {
  const auto t = AffineTransform::north_up(1000, 2000, 0.5);
  const auto s = t.shifted(10, 20);
  EXPECT_EQ(s, AffineTransform(0.5, 0, 1005, 0, -0.5, 1990));
  EXPECT_TRUE(s.north_up());
  EXPECT_DOUBLE_EQ(gsd_x(s), 0.5);
  EXPECT_DOUBLE_EQ(gsd_y(s), 0.5);
}

TEST(AffineTransform, RescaledKeepsOrigin) {
  const auto t = AffineTransform::north_up(1000, 2000, 0.5).rescaled(2.0);
  EXPECT_EQ(t, AffineTransform(1.0, 0, 1000, 0, -1.0, 2000));
}
