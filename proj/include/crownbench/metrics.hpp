#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "crownbench/datamodel.hpp"
#include "crownbench/geometry.hpp"

namespace crownbench {

struct RasterEval {
  std::string raster_id;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n_truth = 0;

  /// Precision/recall/F1 from counts; zero whenever a denominator is zero.
  static RasterEval from_counts(std::string raster_id, std::size_t tp, std::size_t fp,
                                std::size_t fn);
};

struct DatasetEval {
  std::vector<RasterEval> per_raster;
  double rf1 = 0.0;
  double iou_threshold = 0.75;
};

RasterEval raster_f1(std::span<const Detection> preds, std::span<const GeoBox> gts,
                     double iou_min, std::string raster_id = {});

/// Ground-truth-count weighted mean of per-raster F1. Throws ValidationError
/// when every raster has zero ground truths.
DatasetEval dataset_rf1(std::vector<RasterEval> evals, double iou_threshold = 0.75);

struct ScoredBox {
  Box<double> box;
  double score = 0.0;
};

/// One image (tile) for COCO-style evaluation.
struct CocoImage {
  std::vector<Box<double>> truths;
  std::vector<ScoredBox> detections;
};

struct CocoEval {
  std::vector<double> iou_thresholds;
  int max_dets = 100;
  std::vector<double> ap;  // per threshold
  std::vector<double> ar;  // per threshold
  double map_50_95 = 0.0;
  double mar_50_95 = 0.0;
  double map_50 = 0.0;
  double mar_50 = 0.0;
};

/// 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

/// Single-category, all-areas COCO bbox evaluation: per-image greedy matching
/// of the top `max_dets` detections, 101-point interpolated AP over the pooled
/// score-sorted detections, and recall as matched / total ground truths.
/// map_50/mar_50 are the entries at threshold 0.50 (NaN if 0.50 is absent).
/// Throws ValidationError when no image has ground truth.
CocoEval coco_eval(std::span<const CocoImage> images,
                   std::span<const double> iou_thresholds, int max_dets);

}  // namespace crownbench
