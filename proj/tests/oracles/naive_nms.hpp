#pragma once

// Quadratic greedy NMS used as a reference for the grid-indexed version.

#include <algorithm>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "crownbench/datamodel.hpp"

namespace oracle {

inline std::vector<std::size_t> naive_nms(std::span<const crownbench::Detection> dets, double tau) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto& a = dets[i];
    const auto& b = dets[j];
    return std::forward_as_tuple(b.score, a.box.min_x, a.box.min_y, a.tile_id, i) <
           std::forward_as_tuple(a.score, b.box.min_x, b.box.min_y, b.tile_id, j);
  });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    bool keep = true;
    for (std::size_t k : kept) {
      if (crownbench::iou(dets[i].box, dets[k].box) > tau) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(i);
  }
  return kept;
}

}  // namespace oracle
