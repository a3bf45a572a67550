#include "crownbench/tuner.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "crownbench/metrics.hpp"
#include "crownbench/worker_pool.hpp"

namespace crownbench {

GridSpec GridSpec::uniform(double step, double iou_threshold) {
  if (!(step > 0.0 && step <= 1.0)) throw ValidationError(fmt::format("grid step {} outside (0, 1]", step));
  const double n = std::round(1.0 / step);
  if (std::abs(n * step - 1.0) > 1e-9) throw ValidationError(fmt::format("grid step {} does not divide 1", step));
  const int count = static_cast<int>(n);
  GridSpec g;
  g.iou_threshold = iou_threshold;
  for (int k = 0; k <= count; ++k) g.nms_values.push_back(static_cast<double>(k) / n);
  g.score_values = g.nms_values;
  return g;
}

void GridSpec::validate() const {
  if (nms_values.empty() || score_values.empty()) throw ValidationError("tuning grid is empty");
  for (const auto* axis : {&nms_values, &score_values}) {
    if (!std::is_sorted(axis->begin(), axis->end())) throw ValidationError("grid values must be sorted ascending");
    for (double v : *axis) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(fmt::format("grid value {} outside [0, 1]", v));
    }
  }
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw ValidationError(fmt::format("IoU threshold {} outside (0, 1]", iou_threshold));
  }
}

double evaluate_cell(std::span<const PreparedDetections> prepared, std::span<const std::vector<GeoBox>> truths,
                     double nms_iou, double score_min, double iou_threshold) {
  std::vector<RasterEval> evals;
  evals.reserve(prepared.size());
  for (std::size_t r = 0; r < prepared.size(); ++r) {
    const auto kept = prepared[r].select(score_min, nms_iou);
    evals.push_back(raster_f1(kept, truths[r], iou_threshold));
  }
  return dataset_rf1(std::move(evals), iou_threshold).rf1;
}

TuneResult tune(std::span<const ValidationRaster> rasters, const GridSpec& grid, const TuneOptions& opts) {
  grid.validate();
  if (rasters.empty()) throw ValidationError("tuning needs at least one validation raster");

  std::vector<PreparedDetections> prepared(rasters.size());
  std::vector<std::vector<GeoBox>> truths(rasters.size());
  parallel_for(rasters.size(), opts.workers, [&](std::size_t r) {
    prepared[r] = PreparedDetections(rasters[r].tiles, rasters[r].index, opts.border_band_frac, opts.border_mode);
    truths[r] = rasters[r].truths;
  });

  const auto n_nms = static_cast<Eigen::Index>(grid.nms_values.size());
  const auto n_score = static_cast<Eigen::Index>(grid.score_values.size());
  TuneResult result;
  result.surface.resize(n_nms, n_score);
  parallel_for(static_cast<std::size_t>(n_nms * n_score), opts.workers, [&](std::size_t cell) {
    const auto i = static_cast<Eigen::Index>(cell) / n_score;
    const auto j = static_cast<Eigen::Index>(cell) % n_score;
    result.surface(i, j) = evaluate_cell(prepared, truths, grid.nms_values[static_cast<std::size_t>(i)],
                                         grid.score_values[static_cast<std::size_t>(j)], grid.iou_threshold);
  });

  // Larger score_min first, then larger nms_iou, among equal maxima.
  Eigen::Index best_i = 0, best_j = 0;
  double best = -1.0;
  for (Eigen::Index j = n_score - 1; j >= 0; --j) {
    for (Eigen::Index i = n_nms - 1; i >= 0; --i) {
      if (result.surface(i, j) > best) {
        best = result.surface(i, j);
        best_i = i;
        best_j = j;
      }
    }
  }
  result.best_rf1 = best;
  result.best_nms_iou = grid.nms_values[static_cast<std::size_t>(best_i)];
  result.best_score_min = grid.score_values[static_cast<std::size_t>(best_j)];
  return result;
}

}  // namespace crownbench
