#include <gtest/gtest.h>

#include <limits>

#include "crownbench/box_array.hpp"

using namespace crownbench;

TEST(BoxArray, IdenticalArraysScoreOne) {
  const std::vector<double> boxes{0, 0, 10, 10, 20, 20, 30, 35};
  const std::vector<double> scores{0.9, 0.8};
  const RasterEval e = evaluate_arrays(boxes, 4, scores, boxes, 4, 0.75);
  EXPECT_EQ(e.f1, 1.0);
  EXPECT_EQ(e.tp, 2u);
}

TEST(BoxArray, OneOfEachFixture) {
  const std::vector<double> preds{0, 0, 10, 10, 100, 100, 110, 110};
  const std::vector<double> scores{0.9, 0.8};
  const std::vector<double> gts{0, 0, 10, 10, 50, 50, 60, 60};
  const RasterEval e = evaluate_arrays(preds, 4, scores, gts, 4, 0.75);
  EXPECT_EQ(e.tp, 1u);
  EXPECT_EQ(e.fp, 1u);
  EXPECT_EQ(e.fn, 1u);
  EXPECT_EQ(e.f1, 0.5);
}

TEST(BoxArray, ThreeColumnsRejected) {
  const std::vector<double> data{0, 0, 1, 1, 2, 2};
  EXPECT_THROW(boxes_from_array(data, 3), ValidationError);
}

TEST(BoxArray, RaggedLengthRejected) {
  const std::vector<double> data{0, 0, 1, 1, 2};
  EXPECT_THROW(boxes_from_array(data, 4), ValidationError);
}

TEST(BoxArray, InvalidRowsRejected) {
  EXPECT_THROW(boxes_from_array(std::vector<double>{5, 0, 1, 1}, 4), ValidationError);
  EXPECT_THROW(boxes_from_array(std::vector<double>{0, 0, std::numeric_limits<double>::quiet_NaN(), 1}, 4),
               ValidationError);
}

TEST(BoxArray, ScoresChecked) {
  const std::vector<double> data{0, 0, 1, 1};
  EXPECT_THROW(detections_from_array(data, 4, std::vector<double>{}), ValidationError);
  EXPECT_THROW(detections_from_array(data, 4, std::vector<double>{1.5}), ValidationError);
  const auto d = detections_from_array(data, 4, std::vector<double>{0.25});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].box, (GeoBox{0, 0, 1, 1}));
  EXPECT_EQ(d[0].score, 0.25);
}

TEST(BoxArray, EmptyArraysAllowed) {
  EXPECT_TRUE(boxes_from_array({}, 4).empty());
  const std::vector<double> gts{0, 0, 1, 1};
  EXPECT_EQ(evaluate_arrays({}, 4, {}, gts, 4, 0.5).fn, 1u);
}
