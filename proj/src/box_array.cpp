#include "crownbench/box_array.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>

namespace crownbench {

std::vector<GeoBox> boxes_from_array(std::span<const double> data, std::size_t cols) {
  if (cols != 4) throw ValidationError(fmt::format("box arrays need 4 columns, got {}", cols));
  if (data.size() % cols != 0) {
    throw ValidationError(fmt::format("box array length {} is not a multiple of {}", data.size(), cols));
  }
  std::vector<GeoBox> out;
  out.reserve(data.size() / cols);
  for (std::size_t i = 0; i < data.size(); i += cols) {
    const GeoBox b{data[i], data[i + 1], data[i + 2], data[i + 3]};
    if (!std::isfinite(b.min_x) || !std::isfinite(b.min_y) || !std::isfinite(b.max_x) ||
        !std::isfinite(b.max_y) || !b.valid()) {
      throw ValidationError(fmt::format("row {} is not a valid box: {}", i / cols, b));
    }
    out.push_back(b);
  }
  return out;
}

std::vector<Detection> detections_from_array(std::span<const double> data, std::size_t cols,
                                             std::span<const double> scores) {
  auto boxes = boxes_from_array(data, cols);
  if (scores.size() != boxes.size()) {
    throw ValidationError(fmt::format("{} boxes but {} scores", boxes.size(), scores.size()));
  }
  std::vector<Detection> out;
  out.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
      throw ValidationError(fmt::format("score {} at row {} outside [0, 1]", scores[i], i));
    }
    out.push_back({boxes[i], scores[i], {}});
  }
  return out;
}

RasterEval evaluate_arrays(std::span<const double> preds, std::size_t pred_cols,
                           std::span<const double> scores, std::span<const double> gts,
                           std::size_t gt_cols, double iou_min) {
  const auto dets = detections_from_array(preds, pred_cols, scores);
  const auto truth = boxes_from_array(gts, gt_cols);
  return raster_f1(dets, truth, iou_min);
}

}  // namespace crownbench
