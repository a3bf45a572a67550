#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

#include "crownbench/aggregator.hpp"
#include "crownbench/geometry.hpp"

namespace crownbench {

struct GridSpec {
  std::vector<double> nms_values;
  std::vector<double> score_values;
  double iou_threshold = 0.75;

  /// {0, step, 2*step, ..., 1} on both axes; step must divide 1.
  static GridSpec uniform(double step = 0.05, double iou_threshold = 0.75);
  void validate() const;
};

/// One validation raster: tile-level detections plus raster-level truth.
struct ValidationRaster {
  std::string raster_id;
  std::vector<TileDetections> tiles;
  TileIndex index;
  std::vector<GeoBox> truths;
};

struct TuneResult {
  double best_nms_iou = 0.0;
  double best_score_min = 0.0;
  double best_rf1 = 0.0;
  /// rf1(i, j) for nms_values[i], score_values[j].
  Eigen::MatrixXd surface;
};

struct TuneOptions {
  double border_band_frac = 0.05;
  BorderMode border_mode = BorderMode::intersecting;
  unsigned workers = 0;
};

/// Weighted RF1 of one (nms_iou, score_min) cell over prepared rasters.
double evaluate_cell(std::span<const PreparedDetections> prepared,
                     std::span<const std::vector<GeoBox>> truths, double nms_iou,
                     double score_min, double iou_threshold);

/// Exhaustive grid search maximizing weighted RF1. Among equal maxima the
/// larger score_min wins, then the larger nms_iou.
TuneResult tune(std::span<const ValidationRaster> rasters, const GridSpec& grid,
                const TuneOptions& opts = {});

}  // namespace crownbench
