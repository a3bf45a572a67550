#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crownbench/datamodel.hpp"
#include "crownbench/geometry.hpp"
#include "crownbench/tiler.hpp"

namespace crownbench {

enum class BorderMode {
  intersecting,  // drop boxes touching the band at all
  contained,     // drop only boxes lying entirely inside the band
};

struct AggregationConfig {
  double border_band_frac = 0.05;
  double score_min = 0.0;
  double nms_iou = 0.5;
  BorderMode border_mode = BorderMode::intersecting;

  void validate() const;
};

/// Raw model output for one tile, boxes in tile pixels.
struct TileDetections {
  std::string tile_id;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<Box<double>> boxes;
  std::vector<double> scores;
};

struct TileGeoref {
  AffineTransform transform;
  std::int64_t width = 0;
  std::int64_t height = 0;
};

using TileIndex = std::map<std::string, TileGeoref>;

TileIndex tile_index(const std::vector<TileRecord>& tiles);

TileDetections discard_border(const TileDetections& dets, double band_frac,
                              BorderMode mode = BorderMode::intersecting);

/// Throws ValidationError for a tile_id missing from `index`.
std::vector<Detection> to_world(std::span<const TileDetections> dets, const TileIndex& index);

/// Processing order of NMS: score desc, min_x asc, min_y asc, tile_id asc,
/// then input position.
std::vector<std::size_t> nms_order(std::span<const Detection> dets);

/// Greedy NMS over a uniform grid index. Returns kept indices in processing
/// order. A detection survives iff its IoU with every kept one is <= nms_iou.
std::vector<std::size_t> nms_indices(std::span<const Detection> dets, double nms_iou);
std::vector<Detection> nms(std::span<const Detection> dets, double nms_iou);

/// discard_border -> to_world -> score >= score_min -> nms.
std::vector<Detection> aggregate(std::span<const TileDetections> dets, const TileIndex& index,
                                 const AggregationConfig& cfg);

/// World detections after border discard, sorted in NMS order once so that
/// score filtering is a prefix and many (score_min, nms_iou) cells can be
/// evaluated cheaply.
class PreparedDetections {
 public:
  PreparedDetections() = default;
  PreparedDetections(std::span<const TileDetections> dets, const TileIndex& index,
                     double band_frac, BorderMode mode = BorderMode::intersecting);
  explicit PreparedDetections(std::vector<Detection> world);

  std::vector<Detection> select(double score_min, double nms_iou) const;
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<Detection> sorted_;
};

// Per-tile detections JSON:
//   {"crs": "...", "tiles": [{"tile_id", "boxes": [[x,y,w,h]...], "scores": [...],
//     optional "width", "height", "transform": [a..f]}]}
// A bare array of tile records is accepted too.
struct TileDetectionsFile {
  std::string crs;
  std::vector<TileDetections> tiles;
  TileIndex embedded_index;  // only tiles that carried a transform
};

TileDetectionsFile read_tile_detections(const std::filesystem::path& path);
std::string tile_detections_json(const TileDetectionsFile& file);
void write_tile_detections(const std::filesystem::path& path, const TileDetectionsFile& file);

}  // namespace crownbench
