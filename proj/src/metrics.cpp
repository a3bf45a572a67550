#include "crownbench/metrics.hpp"

#include <fmt/format.h>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "crownbench/matcher.hpp"

namespace crownbench {

RasterEval RasterEval::from_counts(std::string raster_id, std::size_t tp, std::size_t fp, std::size_t fn) {
  RasterEval e;
  e.raster_id = std::move(raster_id);
  e.tp = tp;
  e.fp = fp;
  e.fn = fn;
  e.n_truth = tp + fn;
  const double dtp = static_cast<double>(tp);
  e.precision = tp + fp > 0 ? dtp / static_cast<double>(tp + fp) : 0.0;
  e.recall = tp + fn > 0 ? dtp / static_cast<double>(tp + fn) : 0.0;
  e.f1 = e.precision + e.recall > 0.0 ? 2.0 * e.precision * e.recall / (e.precision + e.recall) : 0.0;
  return e;
}

RasterEval raster_f1(std::span<const Detection> preds, std::span<const GeoBox> gts, double iou_min,
                     std::string raster_id) {
  const MatchResult m = greedy_match(preds, gts, iou_min);
  return RasterEval::from_counts(std::move(raster_id), m.tp, m.fp, m.fn);
}

DatasetEval dataset_rf1(std::vector<RasterEval> evals, double iou_threshold) {
  double weighted = 0.0, total = 0.0;
  double lo = 1.0, hi = 0.0;
  for (const RasterEval& e : evals) {
    weighted += e.f1 * static_cast<double>(e.n_truth);
    total += static_cast<double>(e.n_truth);
    if (e.n_truth > 0) {
      lo = std::min(lo, e.f1);
      hi = std::max(hi, e.f1);
    }
  }
  if (total <= 0.0) throw ValidationError("weighted RF1 undefined: no raster has ground truth");
  DatasetEval d;
  d.per_raster = std::move(evals);
  // Rounding can push a weighted mean one ulp past its inputs.
  d.rf1 = std::clamp(weighted / total, lo, hi);
  d.iou_threshold = iou_threshold;
  return d;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t(10);
  for (int i = 0; i < 10; ++i) t[i] = 0.5 + 0.05 * i;
  return t;
}

namespace {

// Per image and threshold: matched flag for each of the kept detections (in
// score order) plus their scores.
struct ImageMatches {
  std::vector<double> scores;
  std::vector<std::vector<bool>> matched;  // [threshold][detection]
  std::size_t n_truth = 0;
};

ImageMatches match_image(const CocoImage& img, std::span<const double> thresholds, int max_dets) {
  ImageMatches out;
  out.n_truth = img.truths.size();
  std::vector<std::size_t> order(img.detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return img.detections[a].score > img.detections[b].score;
  });
  if (order.size() > static_cast<std::size_t>(max_dets)) order.resize(static_cast<std::size_t>(max_dets));

  const std::size_t nd = order.size(), ng = img.truths.size();
  Eigen::MatrixXd ious(nd, ng);
  for (std::size_t d = 0; d < nd; ++d) {
    out.scores.push_back(img.detections[order[d]].score);
    for (std::size_t g = 0; g < ng; ++g) ious(d, g) = iou(img.detections[order[d]].box, img.truths[g]);
  }

  out.matched.assign(thresholds.size(), std::vector<bool>(nd, false));
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    std::vector<bool> gt_taken(ng, false);
    for (std::size_t d = 0; d < nd; ++d) {
      // Highest IoU at or above the threshold; a later ground truth wins an
      // exact tie, as in the reference COCO evaluator.
      double best = std::min(thresholds[t], 1.0 - 1e-10);
      std::ptrdiff_t m = -1;
      for (std::size_t g = 0; g < ng; ++g) {
        if (gt_taken[g] || ious(d, g) < best) continue;
        best = ious(d, g);
        m = static_cast<std::ptrdiff_t>(g);
      }
      if (m >= 0) {
        gt_taken[static_cast<std::size_t>(m)] = true;
        out.matched[t][d] = true;
      }
    }
  }
  return out;
}

}  // namespace

CocoEval coco_eval(std::span<const CocoImage> images, std::span<const double> iou_thresholds, int max_dets) {
  if (max_dets <= 0) throw ValidationError("max_dets must be positive");
  if (iou_thresholds.empty()) throw ValidationError("at least one IoU threshold is required");
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw ValidationError(fmt::format("IoU threshold {} outside (0, 1]", t));
  }
  for (const CocoImage& img : images) {
    for (const auto& b : img.truths) {
      if (!has_positive_area(b)) throw DomainError("coco_eval: ground-truth box has zero area");
    }
    for (const auto& d : img.detections) {
      if (!has_positive_area(d.box)) throw DomainError("coco_eval: detection box has zero area");
    }
  }

  std::vector<ImageMatches> per_image;
  per_image.reserve(images.size());
  std::size_t n_truth = 0;
  for (const CocoImage& img : images) {
    per_image.push_back(match_image(img, iou_thresholds, max_dets));
    n_truth += img.truths.size();
  }
  if (n_truth == 0) throw ValidationError("COCO evaluation undefined: no ground truth in any image");

  // Pool detections over images, stable on image order.
  struct Pooled {
    double score;
    std::size_t image;
    std::size_t det;
  };
  std::vector<Pooled> pooled;
  for (std::size_t i = 0; i < per_image.size(); ++i) {
    for (std::size_t d = 0; d < per_image[i].scores.size(); ++d) pooled.push_back({per_image[i].scores[d], i, d});
  }
  std::stable_sort(pooled.begin(), pooled.end(), [](const Pooled& a, const Pooled& b) { return a.score > b.score; });

  constexpr int kRecallPoints = 101;
  std::array<double, kRecallPoints> recall_grid{};
  for (int r = 0; r < kRecallPoints; ++r) recall_grid[r] = static_cast<double>(r) * (1.0 / 100.0);
  recall_grid[kRecallPoints - 1] = 1.0;

  CocoEval out;
  out.iou_thresholds.assign(iou_thresholds.begin(), iou_thresholds.end());
  out.max_dets = max_dets;
  const std::size_t nd = pooled.size();
  const double total = static_cast<double>(n_truth);
  for (std::size_t t = 0; t < iou_thresholds.size(); ++t) {
    Eigen::ArrayXd rc(nd), pr(nd);
    double tp = 0.0, fp = 0.0;
    for (std::size_t k = 0; k < nd; ++k) {
      if (per_image[pooled[k].image].matched[t][pooled[k].det]) {
        tp += 1.0;
      } else {
        fp += 1.0;
      }
      rc[k] = tp / total;
      pr[k] = tp / (tp + fp);
    }
    // Monotone precision envelope from the right.
    for (std::size_t k = nd; k-- > 1;) pr[k - 1] = std::max(pr[k - 1], pr[k]);

    double ap = 0.0;
    std::size_t k = 0;
    for (int r = 0; r < kRecallPoints; ++r) {
      while (k < nd && rc[k] < recall_grid[r]) ++k;
      if (k < nd) ap += pr[k];
    }
    out.ap.push_back(ap / kRecallPoints);
    out.ar.push_back(nd > 0 ? rc[nd - 1] : 0.0);
  }

  out.map_50_95 = std::accumulate(out.ap.begin(), out.ap.end(), 0.0) / static_cast<double>(out.ap.size());
  out.mar_50_95 = std::accumulate(out.ar.begin(), out.ar.end(), 0.0) / static_cast<double>(out.ar.size());
  out.map_50 = out.mar_50 = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t t = 0; t < iou_thresholds.size(); ++t) {
    if (std::abs(iou_thresholds[t] - 0.5) < 1e-9) {
      out.map_50 = out.ap[t];
      out.mar_50 = out.ar[t];
    }
  }
  return out;
}

}  // namespace crownbench
