#include "crownbench/aggregator.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "crownbench/geojson.hpp"

namespace crownbench {

using nlohmann::json;

void AggregationConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(border_band_frac >= 0.0 && border_band_frac < 0.5)) {
    throw ValidationError(fmt::format("border band fraction {} outside [0, 0.5)", border_band_frac));
  }
  if (!unit(score_min)) throw ValidationError(fmt::format("score_min {} outside [0, 1]", score_min));
  if (!unit(nms_iou)) throw ValidationError(fmt::format("nms_iou {} outside [0, 1]", nms_iou));
}

TileIndex tile_index(const std::vector<TileRecord>& tiles) {
  TileIndex index;
  for (const TileRecord& t : tiles) index[t.tile_id] = {t.transform, t.width(), t.height()};
  return index;
}

TileDetections discard_border(const TileDetections& dets, double band_frac, BorderMode mode) {
  if (dets.boxes.size() != dets.scores.size()) {
    throw ValidationError(fmt::format("tile '{}': {} boxes but {} scores", dets.tile_id, dets.boxes.size(),
                                      dets.scores.size()));
  }
  if (band_frac <= 0.0) return dets;
  const double w = static_cast<double>(dets.width), h = static_cast<double>(dets.height);
  if (w <= 0.0 || h <= 0.0) {
    throw ValidationError(fmt::format("tile '{}': size unknown, cannot discard border band", dets.tile_id));
  }
  const double bw = band_frac * w, bh = band_frac * h;
  TileDetections out{dets.tile_id, dets.width, dets.height, {}, {}};
  for (std::size_t i = 0; i < dets.boxes.size(); ++i) {
    const Box<double>& b = dets.boxes[i];
    bool drop;
    if (mode == BorderMode::intersecting) {
      drop = b.min_x < bw || b.min_y < bh || b.max_x > w - bw || b.max_y > h - bh;
    } else {
      drop = b.max_x <= bw || b.max_y <= bh || b.min_x >= w - bw || b.min_y >= h - bh;
    }
    if (!drop) {
      out.boxes.push_back(b);
      out.scores.push_back(dets.scores[i]);
    }
  }
  return out;
}

std::vector<Detection> to_world(std::span<const TileDetections> dets, const TileIndex& index) {
  std::vector<Detection> out;
  for (const TileDetections& t : dets) {
    if (t.boxes.empty()) continue;
    auto it = index.find(t.tile_id);
    if (it == index.end()) {
      throw ValidationError(fmt::format("no transform for tile '{}' in the tiles index", t.tile_id));
    }
    for (std::size_t i = 0; i < t.boxes.size(); ++i) {
      out.push_back({pixel_to_world(t.boxes[i], it->second.transform), t.scores.at(i), t.tile_id});
    }
  }
  return out;
}

std::vector<std::size_t> nms_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    const Detection& a = dets[l];
    const Detection& b = dets[r];
    if (a.score != b.score) return a.score > b.score;
    if (a.box.min_x != b.box.min_x) return a.box.min_x < b.box.min_x;
    if (a.box.min_y != b.box.min_y) return a.box.min_y < b.box.min_y;
    if (a.tile_id != b.tile_id) return a.tile_id < b.tile_id;
    return l < r;
  });
  return order;
}

namespace {

// Greedy suppression over `order`, candidates looked up in a uniform grid of
// kept box centers. Two boxes can only overlap when their centers are closer
// than half the sum of their extents, so scanning cells within
// (w_i + max_w)/2, (h_i + max_h)/2 finds every kept box that could suppress i.
std::vector<std::size_t> grid_nms(std::span<const Detection> dets, std::span<const std::size_t> order,
                                  double nms_iou) {
  std::vector<std::size_t> kept;
  if (order.empty()) return kept;

  double max_w = 0.0, max_h = 0.0;
  std::vector<double> diagonals;
  diagonals.reserve(order.size());
  for (std::size_t i : order) {
    const GeoBox& b = dets[i].box;
    if (!has_positive_area(b)) throw DomainError("nms: detection box has zero area");
    max_w = std::max(max_w, b.width());
    max_h = std::max(max_h, b.height());
    diagonals.push_back(std::hypot(b.width(), b.height()));
  }
  auto mid = diagonals.begin() + static_cast<std::ptrdiff_t>(diagonals.size() / 2);
  std::nth_element(diagonals.begin(), mid, diagonals.end());
  const double cell = *mid > 0.0 ? *mid : 1.0;

  auto cell_of = [cell](double v) { return static_cast<std::int64_t>(std::floor(v / cell)); };
  auto key = [](std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffULL);
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;

  for (std::size_t i : order) {
    const GeoBox& b = dets[i].box;
    const double cx = 0.5 * (b.min_x + b.max_x), cy = 0.5 * (b.min_y + b.max_y);
    const double rx = 0.5 * (b.width() + max_w), ry = 0.5 * (b.height() + max_h);
    const std::int64_t x0 = cell_of(cx - rx), x1 = cell_of(cx + rx);
    const std::int64_t y0 = cell_of(cy - ry), y1 = cell_of(cy + ry);

    bool suppressed = false;
    auto check = [&](std::size_t j) {
      if (!suppressed && iou(b, dets[j].box) > nms_iou) suppressed = true;
    };
    const double span_cells = static_cast<double>(x1 - x0 + 1) * static_cast<double>(y1 - y0 + 1);
    if (span_cells > static_cast<double>(kept.size())) {
      for (std::size_t j : kept) check(j);
    } else {
      for (std::int64_t gx = x0; gx <= x1 && !suppressed; ++gx) {
        for (std::int64_t gy = y0; gy <= y1 && !suppressed; ++gy) {
          auto it = grid.find(key(gx, gy));
          if (it == grid.end()) continue;
          for (std::size_t j : it->second) check(j);
        }
      }
    }
    if (!suppressed) {
      kept.push_back(i);
      grid[key(cell_of(cx), cell_of(cy))].push_back(i);
    }
  }
  return kept;
}

}  // namespace

std::vector<std::size_t> nms_indices(std::span<const Detection> dets, double nms_iou) {
  const auto order = nms_order(dets);
  return grid_nms(dets, order, nms_iou);
}

std::vector<Detection> nms(std::span<const Detection> dets, double nms_iou) {
  std::vector<Detection> out;
  for (std::size_t i : nms_indices(dets, nms_iou)) out.push_back(dets[i]);
  return out;
}

std::vector<Detection> aggregate(std::span<const TileDetections> dets, const TileIndex& index,
                                 const AggregationConfig& cfg) {
  cfg.validate();
  std::vector<TileDetections> inner;
  inner.reserve(dets.size());
  for (const TileDetections& t : dets) inner.push_back(discard_border(t, cfg.border_band_frac, cfg.border_mode));
  std::vector<Detection> world = to_world(inner, index);
  std::erase_if(world, [&](const Detection& d) { return d.score < cfg.score_min; });
  return nms(world, cfg.nms_iou);
}

PreparedDetections::PreparedDetections(std::span<const TileDetections> dets, const TileIndex& index,
                                       double band_frac, BorderMode mode) {
  std::vector<TileDetections> inner;
  inner.reserve(dets.size());
  for (const TileDetections& t : dets) inner.push_back(discard_border(t, band_frac, mode));
  *this = PreparedDetections(to_world(inner, index));
}

PreparedDetections::PreparedDetections(std::vector<Detection> world) {
  const auto order = nms_order(world);
  sorted_.reserve(world.size());
  for (std::size_t i : order) sorted_.push_back(std::move(world[i]));
}

std::vector<Detection> PreparedDetections::select(double score_min, double nms_iou) const {
  // Sorted by score first, so the confidence filter is a prefix.
  const auto end = std::partition_point(sorted_.begin(), sorted_.end(),
                                        [&](const Detection& d) { return d.score >= score_min; });
  const std::span<const Detection> prefix(sorted_.data(), static_cast<std::size_t>(end - sorted_.begin()));
  std::vector<std::size_t> order(prefix.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Detection> out;
  for (std::size_t i : grid_nms(prefix, order, nms_iou)) out.push_back(prefix[i]);
  return out;
}

TileDetectionsFile read_tile_detections(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  TileDetectionsFile file;
  const json* tiles = &doc;
  if (doc.is_object()) {
    file.crs = doc.value("crs", std::string{});
    if (!doc.contains("tiles")) throw ValidationError(fmt::format("{}: missing 'tiles' array", path.string()));
    tiles = &doc["tiles"];
  }
  if (!tiles->is_array()) throw ValidationError(fmt::format("{}: 'tiles' must be an array", path.string()));
  try {
    for (const json& rec : *tiles) {
      TileDetections t;
      t.tile_id = rec.at("tile_id").get<std::string>();
      t.width = rec.value("width", std::int64_t{0});
      t.height = rec.value("height", std::int64_t{0});
      for (const json& b : rec.at("boxes")) {
        const auto v = b.get<std::vector<double>>();
        if (v.size() != 4) throw ValidationError(fmt::format("tile '{}': boxes must be [x, y, w, h]", t.tile_id));
        t.boxes.push_back({v[0], v[1], v[0] + v[2], v[1] + v[3]});
      }
      t.scores = rec.at("scores").get<std::vector<double>>();
      if (t.scores.size() != t.boxes.size()) {
        throw ValidationError(fmt::format("tile '{}': {} boxes but {} scores", t.tile_id, t.boxes.size(),
                                          t.scores.size()));
      }
      for (double s : t.scores) {
        if (!(s >= 0.0 && s <= 1.0)) throw ValidationError(fmt::format("tile '{}': score {} outside [0, 1]", t.tile_id, s));
      }
      for (const auto& b : t.boxes) {
        if (!has_positive_area(b)) throw ValidationError(fmt::format("tile '{}': zero-area box", t.tile_id));
      }
      if (rec.contains("transform")) {
        const auto c = rec["transform"].get<std::vector<double>>();
        if (c.size() != 6) throw ValidationError(fmt::format("tile '{}': transform needs 6 values", t.tile_id));
        file.embedded_index[t.tile_id] = {AffineTransform(c[0], c[1], c[2], c[3], c[4], c[5]), t.width, t.height};
      }
      file.tiles.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}: malformed detections: {}", path.string(), e.what()));
  }
  return file;
}

std::string tile_detections_json(const TileDetectionsFile& file) {
  json tiles = json::array();
  for (const TileDetections& t : file.tiles) {
    json boxes = json::array();
    for (const auto& b : t.boxes) boxes.push_back({b.min_x, b.min_y, b.width(), b.height()});
    json rec{{"tile_id", t.tile_id}, {"width", t.width}, {"height", t.height}, {"boxes", std::move(boxes)},
             {"scores", t.scores}};
    if (auto it = file.embedded_index.find(t.tile_id); it != file.embedded_index.end()) {
      const AffineTransform& tf = it->second.transform;
      rec["transform"] = {tf.a(), tf.b(), tf.c(), tf.d(), tf.e(), tf.f()};
    }
    tiles.push_back(std::move(rec));
  }
  json doc{{"crs", file.crs}, {"tiles", std::move(tiles)}};
  return doc.dump() + "\n";
}

void write_tile_detections(const std::filesystem::path& path, const TileDetectionsFile& file) {
  write_text_file(path, tile_detections_json(file));
}

}  // namespace crownbench
