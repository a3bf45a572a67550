#include <gtest/gtest.h>

#include <random>

#include "crownbench/errors.hpp"
#include "crownbench/scaleplan.hpp"

using namespace crownbench;

namespace {

AugPlan plan(double gsd, long tile, long c0, long c1, long r0, long r1, bool fallback = true) {
  AugPlan p;
  p.native_gsd = gsd;
  p.tile_size_px = tile;
  p.crop_min_px = c0;
  p.crop_max_px = c1;
  p.resize_min_px = r0;
  p.resize_max_px = r1;
  p.fallback = fallback;
  return p;
}

}  // namespace

TEST(ExtentRange, FourPointFiveCm) {
  const auto r = effective_extent_range(plan(0.045, 3555, 666, 2666, 1024, 1777));
  EXPECT_NEAR(r.crop.min, 29.97, 1e-9);
  EXPECT_NEAR(r.crop.max, 119.97, 1e-9);
  EXPECT_NEAR(*r.fallback, 159.975, 1e-9);
  EXPECT_EQ(format_extent(r), "[30, 120]∪{160}");
}

TEST(ExtentRange, ThreeCm) {
  EXPECT_EQ(format_extent(effective_extent_range(plan(0.03, 3333, 666, 2666, 1024, 1777))), "[20, 80]∪{100}");
}

TEST(ExtentRange, CropEqualToTileIsOnePoint) {
  const auto r = effective_extent_range(plan(0.05, 2000, 2000, 2000, 1024, 1024));
  EXPECT_EQ(r.crop.min, r.crop.max);
  EXPECT_EQ(r.crop.min, *r.fallback);
  EXPECT_EQ(format_extent(r), "[100, 100]");
}

TEST(GsdRange, FourPointFiveCmWithFallback) {
  const auto r = effective_gsd_range(plan(0.045, 3555, 666, 2666, 1024, 1777));
  EXPECT_NEAR(r.min, 0.045 * 666 / 1777, 1e-15);
  EXPECT_NEAR(r.max, 0.045 * 3555 / 1024, 1e-15);
  EXPECT_EQ(format_gsd_cm(r), "[1.7, 15.6]");
}

TEST(GsdRange, FourPointFiveCmWithoutFallback) {
  const auto r = effective_gsd_range(plan(0.045, 3555, 666, 2666, 1024, 1777, false));
  EXPECT_NEAR(r.max * 100.0, 11.7, 0.05);
  EXPECT_NEAR(r.min * 100.0, 1.7, 0.05);
}

TEST(GsdRange, ThreeCm) {
  EXPECT_EQ(format_gsd_cm(effective_gsd_range(plan(0.03, 3333, 666, 2666, 1024, 1777))), "[1.1, 9.8]");
}

TEST(GsdRange, IdentityPlan) {
  const auto r = effective_gsd_range(plan(0.045, 1000, 1000, 1000, 1000, 1000));
  EXPECT_EQ(r.min, 0.045);
  EXPECT_EQ(r.max, 0.045);
}

TEST(AugPlan, Validation) {
  EXPECT_THROW(plan(0.0, 100, 10, 20, 10, 20).validate(), ValidationError);
  EXPECT_THROW(plan(0.1, 100, 0, 20, 10, 20).validate(), ValidationError);
  EXPECT_THROW(plan(0.1, 100, 30, 20, 10, 20).validate(), ValidationError);
  EXPECT_THROW(plan(0.1, 100, 10, 200, 10, 20).validate(), ValidationError);
  EXPECT_THROW(plan(0.1, 100, 10, 20, 30, 20).validate(), ValidationError);
  EXPECT_NO_THROW(plan(0.1, 100, 10, 100, 10, 20).validate());
}

TEST(Format, OneDecimal) {
  EXPECT_EQ(format_one_decimal(29.97), "30");
  EXPECT_EQ(format_one_decimal(1.686), "1.7");
  EXPECT_EQ(format_one_decimal(15.62), "15.6");
  EXPECT_EQ(format_one_decimal(-0.01), "0");
}

TEST(GsdRangeProperty, MonteCarloPairsInsideRange) {
  std::mt19937_64 rng(61);
  const AugPlan p = plan(0.045, 3555, 666, 2666, 1024, 1777);
  const Interval r = effective_gsd_range(p);
  std::uniform_int_distribution<long> crop(p.crop_min_px, p.crop_max_px), size(p.resize_min_px, p.resize_max_px);
  std::bernoulli_distribution skip_crop(0.5);
  for (int i = 0; i < 100000; ++i) {
    const long c = skip_crop(rng) ? p.tile_size_px : crop(rng);
    const double g = p.native_gsd * static_cast<double>(c) / static_cast<double>(size(rng));
    ASSERT_GE(g, r.min);
    ASSERT_LE(g, r.max);
  }
}

TEST(GsdRangeProperty, LinearInNativeGsd) {
  // power-of-two factors keep the scaling exact
  for (double k : {0.25, 2.0, 8.0}) {
    const auto a = effective_gsd_range(plan(0.045, 3555, 666, 2666, 1024, 1777));
    const auto b = effective_gsd_range(plan(0.045 * k, 3555, 666, 2666, 1024, 1777));
    EXPECT_EQ(b.min, a.min * k);
    EXPECT_EQ(b.max, a.max * k);
    const auto ea = effective_extent_range(plan(0.045, 3555, 666, 2666, 1024, 1777));
    const auto eb = effective_extent_range(plan(0.045 * k, 3555, 666, 2666, 1024, 1777));
    EXPECT_EQ(eb.crop.min, ea.crop.min * k);
    EXPECT_EQ(eb.crop.max, ea.crop.max * k);
    EXPECT_EQ(*eb.fallback, *ea.fallback * k);
  }
}

TEST(GsdRangeProperty, WiderRangesNeverShrink) {
  std::mt19937_64 rng(62);
  std::uniform_int_distribution<long> px(1, 4000);
  for (int i = 0; i < 5000; ++i) {
    long c0 = px(rng), c1 = px(rng), r0 = px(rng), r1 = px(rng);
    if (c0 > c1) std::swap(c0, c1);
    if (r0 > r1) std::swap(r0, r1);
    const long tile = std::max(c1, px(rng));
    const bool fb = i % 2 == 0;
    const auto base = effective_gsd_range(plan(0.05, tile, c0, c1, r0, r1, fb));
    const auto base_e = effective_extent_range(plan(0.05, tile, c0, c1, r0, r1, fb));
    const long c0w = std::max(1L, c0 - px(rng) / 10), c1w = std::min(tile, c1 + px(rng) / 10);
    const long r0w = std::max(1L, r0 - px(rng) / 10), r1w = r1 + px(rng) / 10;
    const auto wide = effective_gsd_range(plan(0.05, tile, c0w, c1w, r0w, r1w, fb));
    const auto wide_e = effective_extent_range(plan(0.05, tile, c0w, c1w, r0w, r1w, fb));
    ASSERT_LE(wide.min, base.min);
    ASSERT_GE(wide.max, base.max);
    ASSERT_LE(wide_e.crop.min, base_e.crop.min);
    ASSERT_GE(wide_e.crop.max, base_e.crop.max);
  }
}
