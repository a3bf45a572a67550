#include <gtest/gtest.h>

#include "crownbench/datamodel.hpp"

using namespace crownbench;

namespace {

Ring rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

AOI aoi(Split s, Ring exterior, std::vector<Ring> holes = {}) {
  return {s, {Polygon{std::move(exterior), std::move(holes)}}};
}

Annotation ann(GeoBox b) { return {1, b, "r"}; }

}  // namespace

TEST(Split, StringRoundTrip) {
  for (Split s : {Split::train, Split::valid, Split::test}) EXPECT_EQ(parse_split(to_string(s)), s);
  EXPECT_THROW(parse_split("validation"), ValidationError);
}

TEST(RingArea, RectangleAndOrientation) {
  EXPECT_DOUBLE_EQ(ring_area(rect(0, 0, 4, 3)), 12.0);
  Ring cw = rect(0, 0, 4, 3);
  std::reverse(cw.begin(), cw.end());
  EXPECT_DOUBLE_EQ(ring_area(cw), 12.0);
}

TEST(OverlapArea, ClipsAgainstPolygon) {
  const Polygon tri{{{0, 0}, {10, 0}, {0, 10}, {0, 0}}, {}};
  EXPECT_DOUBLE_EQ(overlap_area(GeoBox{0, 0, 10, 10}, tri), 50.0);
  EXPECT_DOUBLE_EQ(overlap_area(GeoBox{0, 0, 2, 2}, tri), 4.0);
  EXPECT_DOUBLE_EQ(overlap_area(GeoBox{20, 20, 22, 22}, tri), 0.0);
}

TEST(OverlapArea, HoleSubtracts) {
  const AOI a = aoi(Split::train, rect(0, 0, 100, 100), {rect(40, 40, 60, 60)});
  EXPECT_DOUBLE_EQ(overlap_area(GeoBox{45, 45, 55, 55}, a), 0.0);
  EXPECT_DOUBLE_EQ(overlap_area(GeoBox{30, 45, 50, 55}, a), 100.0);
}

TEST(Contains, EvenOddWithHoles) {
  const AOI a = aoi(Split::train, rect(0, 0, 100, 100), {rect(40, 40, 60, 60)});
  EXPECT_TRUE(contains(a, 10, 10));
  EXPECT_FALSE(contains(a, 50, 50));
  EXPECT_FALSE(contains(a, 150, 50));
}

TEST(AssignSplit, FullyInsideTrain) {
  const std::vector<AOI> aois{aoi(Split::train, rect(0, 0, 100, 100)), aoi(Split::test, rect(100, 0, 200, 100))};
  EXPECT_EQ(assign_split(ann({10, 10, 20, 20}), aois), Split::train);
}

TEST(AssignSplit, LargestOverlapWins) {
  // 60% of the box in train, 40% in valid.
  const std::vector<AOI> aois{aoi(Split::valid, rect(6, -10, 20, 20)), aoi(Split::train, rect(-10, -10, 6, 20))};
  EXPECT_EQ(assign_split(ann({0, 0, 10, 10}), aois), Split::train);
}

TEST(AssignSplit, InsideHoleGivesNone) {
  const std::vector<AOI> aois{aoi(Split::train, rect(0, 0, 100, 100), {rect(40, 40, 60, 60)}),
                              aoi(Split::test, rect(200, 200, 300, 300))};
  EXPECT_EQ(assign_split(ann({45, 45, 55, 55}), aois), std::nullopt);
}

TEST(AssignSplit, TiesFollowTrainValidTest) {
  const std::vector<AOI> tv{aoi(Split::valid, rect(5, -10, 20, 20)), aoi(Split::train, rect(-10, -10, 5, 20))};
  EXPECT_EQ(assign_split(ann({0, 0, 10, 10}), tv), Split::train);
  const std::vector<AOI> vt{aoi(Split::test, rect(-10, -10, 5, 20)), aoi(Split::valid, rect(5, -10, 20, 20))};
  EXPECT_EQ(assign_split(ann({0, 0, 10, 10}), vt), Split::valid);
}

TEST(AssignSplit, SameSplitPolygonsAccumulate) {
  // Two train pieces (30% + 30%) beat one valid piece (40%).
  const std::vector<AOI> aois{aoi(Split::train, rect(-10, -10, 3, 20)), aoi(Split::valid, rect(3, -10, 7, 20)),
                              aoi(Split::train, rect(7, -10, 20, 20))};
  EXPECT_EQ(assign_split(ann({0, 0, 10, 10}), aois), Split::train);
}

TEST(ValidateAoi, RejectsOpenRingAndEscapingHole) {
  AOI open = aoi(Split::train, rect(0, 0, 10, 10));
  open.polygons[0].exterior.pop_back();
  EXPECT_THROW(validate_aoi(open), ValidationError);
  EXPECT_THROW(validate_aoi(aoi(Split::train, rect(0, 0, 10, 10), {rect(5, 5, 15, 8)})), ValidationError);
  EXPECT_NO_THROW(validate_aoi(aoi(Split::train, rect(0, 0, 10, 10), {rect(2, 2, 8, 8)})));
}

TEST(RasterMeta, DerivedQuantities) {
  RasterMeta m{"r", 1000, 2000, AffineTransform::north_up(500, 1000, 0.5), "EPSG:32618"};
  EXPECT_NO_THROW(m.validate());
  EXPECT_DOUBLE_EQ(m.gsd(), 0.5);
  EXPECT_EQ(m.extent(), (GeoBox{500, 0, 1000, 1000}));
  EXPECT_DOUBLE_EQ(m.hectares(), 50.0);
}

TEST(RasterMeta, ValidationFailures) {
  RasterMeta m{"r", 0, 10, AffineTransform::north_up(0, 0, 1), "EPSG:1"};
  EXPECT_THROW(m.validate(), ValidationError);
  m.width = 10;
  m.transform = AffineTransform(1, 0, 0, 0, -2, 0);  // non-square pixels
  EXPECT_THROW(m.validate(), ValidationError);
}
