#include "crownbench/matcher.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace crownbench {

std::vector<GeoBox> boxes_of(std::span<const Annotation> annotations) {
  std::vector<GeoBox> out;
  out.reserve(annotations.size());
  for (const Annotation& a : annotations) out.push_back(a.box);
  return out;
}

namespace {

// Center-bucketed ground truths. A prediction can only overlap ground truths
// whose centers lie within half the summed extents.
class TruthGrid {
 public:
  explicit TruthGrid(std::span<const GeoBox> gts) : gts_(gts) {
    if (gts.empty()) return;
    std::vector<double> diag;
    diag.reserve(gts.size());
    for (const GeoBox& g : gts) {
      max_w_ = std::max(max_w_, g.width());
      max_h_ = std::max(max_h_, g.height());
      diag.push_back(std::hypot(g.width(), g.height()));
    }
    auto mid = diag.begin() + static_cast<std::ptrdiff_t>(diag.size() / 2);
    std::nth_element(diag.begin(), mid, diag.end());
    cell_ = *mid > 0.0 ? *mid : 1.0;
    for (std::size_t i = 0; i < gts.size(); ++i) {
      cells_[key(cell_of(cx(gts[i])), cell_of(cy(gts[i])))].push_back(i);
    }
  }

  // Calls fn(gt_index) for every ground truth that may overlap `b`; indices
  // come in no particular order.
  template <typename Fn>
  void for_candidates(const GeoBox& b, Fn&& fn) const {
    if (gts_.empty()) return;
    const double rx = 0.5 * (b.width() + max_w_), ry = 0.5 * (b.height() + max_h_);
    const std::int64_t x0 = cell_of(cx(b) - rx), x1 = cell_of(cx(b) + rx);
    const std::int64_t y0 = cell_of(cy(b) - ry), y1 = cell_of(cy(b) + ry);
    if (static_cast<double>(x1 - x0 + 1) * static_cast<double>(y1 - y0 + 1) > static_cast<double>(gts_.size())) {
      for (std::size_t i = 0; i < gts_.size(); ++i) fn(i);
      return;
    }
    for (std::int64_t gx = x0; gx <= x1; ++gx) {
      for (std::int64_t gy = y0; gy <= y1; ++gy) {
        if (auto it = cells_.find(key(gx, gy)); it != cells_.end()) {
          for (std::size_t i : it->second) fn(i);
        }
      }
    }
  }

 private:
  static double cx(const GeoBox& b) { return 0.5 * (b.min_x + b.max_x); }
  static double cy(const GeoBox& b) { return 0.5 * (b.min_y + b.max_y); }
  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) << 32) ^ (static_cast<std::uint64_t>(y) & 0xffffffffULL);
  }

  std::span<const GeoBox> gts_;
  double max_w_ = 0.0;
  double max_h_ = 0.0;
  double cell_ = 1.0;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace

MatchResult greedy_match(std::span<const Detection> preds, std::span<const GeoBox> gts, double iou_min) {
  if (!(iou_min > 0.0 && iou_min <= 1.0)) {
    throw ValidationError(fmt::format("IoU threshold {} outside (0, 1]", iou_min));
  }
  for (const Detection& p : preds) {
    if (!has_positive_area(p.box)) throw DomainError("greedy_match: prediction box has zero area");
  }
  for (const GeoBox& g : gts) {
    if (!has_positive_area(g)) throw DomainError("greedy_match: ground-truth box has zero area");
  }

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  const TruthGrid grid(gts);
  std::vector<bool> matched(gts.size(), false);
  MatchResult r;
  for (std::size_t p : order) {
    const GeoBox& box = preds[p].box;
    double best = 0.0;
    std::size_t best_gt = gts.size();
    grid.for_candidates(box, [&](std::size_t g) {
      if (matched[g]) return;
      const double v = iou(box, gts[g]);
      if (v > best || (v == best && v > 0.0 && g < best_gt)) {
        best = v;
        best_gt = g;
      }
    });
    if (best_gt < gts.size() && best >= iou_min) {
      matched[best_gt] = true;
      r.pairs.push_back({p, best_gt, best});
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = gts.size() - r.tp;
  return r;
}

}  // namespace crownbench
