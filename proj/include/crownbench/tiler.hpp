#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crownbench/datamodel.hpp"
#include "crownbench/image.hpp"

namespace crownbench {

struct TilingConfig {
  std::int64_t tile_size_px = 1777;
  double overlap = 0.5;
  double min_annotation_frac = 0.4;
  double max_dark_frac = 0.8;
  std::optional<double> resample_gsd;
  /// Drop tiles with no annotations (ready-to-train datasets). Off for
  /// inference tiling.
  bool drop_empty = true;
  unsigned workers = 0;  // 0 = hardware concurrency

  std::int64_t stride_px() const;
  /// Throws ValidationError.
  void validate() const;
};

struct GridPlan {
  std::vector<PixelBox> windows;
  /// Raster narrower or shorter than one tile; the window was clamped.
  bool undersized = false;
};

/// Window origins along one axis of length `n`.
std::vector<std::int64_t> plan_axis(std::int64_t n, std::int64_t tile, std::int64_t stride);

/// Row-major sliding-window grid with the final window snapped to the edge.
GridPlan plan_grid(std::int64_t width, std::int64_t height, const TilingConfig& cfg);
GridPlan plan_grid(const RasterMeta& raster, const TilingConfig& cfg);

/// An annotation kept in a tile, in tile-local fractional pixels.
struct TileAnnotation {
  std::int64_t ann_id = 0;
  Box<double> box;
};

struct TileRecord {
  std::string tile_id;
  std::string raster_id;
  PixelBox pixel_window;
  AffineTransform transform;
  std::string crs;
  std::optional<Split> split;  // empty for inference tiling without AOIs
  std::vector<TileAnnotation> annotations;
  double masked_frac = 0.0;
  double white_frac = 0.0;
  double transparent_frac = 0.0;

  std::int64_t width() const { return pixel_window.width(); }
  std::int64_t height() const { return pixel_window.height(); }
  GeoBox footprint() const { return pixel_to_world(PixelBox{0, 0, width(), height()}, transform); }
};

/// `{raster_id}_{split}_{gsd cm with p for .}_{col}_{row}`; "infer" when no split.
std::string tile_name(const std::string& raster_id, std::optional<Split> split, double gsd_m,
                      std::int64_t col, std::int64_t row);

struct PixelStats {
  double dark_frac = 0.0;         // all RGB <= 5, or alpha == 0
  double white_frac = 0.0;        // all RGB >= 250
  double transparent_frac = 0.0;  // alpha == 0
};

PixelStats pixel_stats(const Image& image);

/// Blackens (and makes transparent, when there is alpha) every pixel whose
/// center lies outside the AOIs of `split` or inside one of their holes.
/// Returns the fraction of pixels masked.
double mask_tile(Image& pixels, const AffineTransform& tile_transform,
                 const std::vector<AOI>& aois, Split split);

/// Keeps annotations with at least `min_frac` of their area inside the tile
/// footprint, clipped to it and expressed in tile pixels.
std::vector<TileAnnotation> assign_annotations(const TileRecord& tile,
                                               const std::vector<Annotation>& annotations,
                                               double min_frac);

std::vector<TileRecord> filter_tiles(std::vector<TileRecord> tiles, const TilingConfig& cfg);

/// Output of tiling one scene: the (possibly resampled) raster grid the
/// windows refer to, its pixels, and the kept tiles sorted by tile_id.
struct TilingResult {
  RasterMeta raster;
  std::shared_ptr<const Image> pixels;
  std::vector<TileRecord> tiles;
};

/// Full tiling of one scene: optional resampling, grid, per-split masking,
/// annotation assignment and filtering. Without AOIs every window is tiled
/// with no split and no masking.
TilingResult tile_scene(const SceneBundle& scene, const TilingConfig& cfg);

/// Cropped and masked pixels of one tile.
Image render_tile(const TilingResult& tiling, const std::vector<AOI>& aois, const TileRecord& tile);

/// Writes `out_dir/tiles/<tile_id>.tif` (skipped when tiling.pixels is null)
/// and `out_dir/coco.json`; returns the JSON path.
std::filesystem::path emit_coco(const TilingResult& tiling, const std::vector<AOI>& aois,
                                const std::filesystem::path& out_dir, unsigned workers = 0);

/// Deterministic COCO document for the given records.
std::string coco_json(const std::vector<TileRecord>& tiles);

/// Parses a COCO index produced by emit_coco back into records.
std::vector<TileRecord> read_coco(const std::filesystem::path& path);
std::vector<TileRecord> parse_coco(const std::string& text);

}  // namespace crownbench
