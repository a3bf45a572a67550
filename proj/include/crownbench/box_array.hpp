#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "crownbench/datamodel.hpp"
#include "crownbench/metrics.hpp"

namespace crownbench {

/// Boundary conversion for scripting callers handing over flat row-major
/// n x cols arrays of (min_x, min_y, max_x, max_y). Throws ValidationError on a
/// column count other than 4, a length not divisible by it, a score vector of
/// the wrong length, invalid boxes, or scores outside [0, 1].
std::vector<GeoBox> boxes_from_array(std::span<const double> data, std::size_t cols);
std::vector<Detection> detections_from_array(std::span<const double> data, std::size_t cols,
                                             std::span<const double> scores);

/// raster_f1 over array inputs.
RasterEval evaluate_arrays(std::span<const double> preds, std::size_t pred_cols,
                           std::span<const double> scores, std::span<const double> gts,
                           std::size_t gt_cols, double iou_min);

}  // namespace crownbench
