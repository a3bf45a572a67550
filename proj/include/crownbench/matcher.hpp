#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crownbench/datamodel.hpp"
#include "crownbench/geometry.hpp"

namespace crownbench {

struct MatchPair {
  std::size_t pred_index = 0;  // position in the caller's prediction list
  std::size_t gt_index = 0;    // position in the caller's ground-truth list
  double iou = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<MatchPair> pairs;  // in prediction processing order
};

/// Greedy matching for raster-level F1.
///
/// Predictions are visited by descending score (stable on input position).
/// Each one takes the still-unmatched ground truth of highest IoU, lowest
/// index on ties, and counts as a true positive when that IoU is >= `iou_min`;
/// otherwise it is a false positive and consumes nothing. Leftover ground
/// truths are false negatives. This is not an optimal assignment: an early
/// prediction keeps its ground truth even if a later one would overlap it
/// more.
MatchResult greedy_match(std::span<const Detection> preds, std::span<const GeoBox> gts,
                         double iou_min);

std::vector<GeoBox> boxes_of(std::span<const Annotation> annotations);

}  // namespace crownbench
