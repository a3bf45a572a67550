#include "crownbench/tiler.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "crownbench/geojson.hpp"
#include "crownbench/raster_io.hpp"
#include "crownbench/worker_pool.hpp"

namespace crownbench {

using nlohmann::json;

std::int64_t TilingConfig::stride_px() const {
  return static_cast<std::int64_t>(std::llround(static_cast<double>(tile_size_px) * (1.0 - overlap)));
}

void TilingConfig::validate() const {
  if (tile_size_px <= 0) throw ValidationError("tile size must be positive");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ValidationError(fmt::format("overlap {} outside [0, 1)", overlap));
  if (stride_px() < 1) throw ValidationError("tile stride rounds to zero pixels; lower the overlap");
  if (!(min_annotation_frac >= 0.0 && min_annotation_frac <= 1.0)) {
    throw ValidationError("min_annotation_frac must lie in [0, 1]");
  }
  if (!(max_dark_frac >= 0.0 && max_dark_frac <= 1.0)) throw ValidationError("max_dark_frac must lie in [0, 1]");
  if (resample_gsd && !(*resample_gsd > 0.0)) throw ValidationError("resample GSD must be positive");
}

std::vector<std::int64_t> plan_axis(std::int64_t n, std::int64_t tile, std::int64_t stride) {
  if (n <= tile) return {0};
  std::vector<std::int64_t> origins;
  for (std::int64_t o = 0; o + tile <= n; o += stride) origins.push_back(o);
  if (origins.back() + tile < n) origins.push_back(n - tile);
  return origins;
}

GridPlan plan_grid(std::int64_t width, std::int64_t height, const TilingConfig& cfg) {
  cfg.validate();
  GridPlan plan;
  plan.undersized = width < cfg.tile_size_px || height < cfg.tile_size_px;
  const auto cols = plan_axis(width, cfg.tile_size_px, cfg.stride_px());
  const auto rows = plan_axis(height, cfg.tile_size_px, cfg.stride_px());
  plan.windows.reserve(cols.size() * rows.size());
  for (std::int64_t r : rows) {
    for (std::int64_t c : cols) {
      plan.windows.push_back({c, r, std::min(c + cfg.tile_size_px, width), std::min(r + cfg.tile_size_px, height)});
    }
  }
  return plan;
}

namespace {

struct ResampledGrid {
  std::int64_t width;
  std::int64_t height;
  AffineTransform transform;
};

ResampledGrid resampled_grid(const RasterMeta& raster, const std::optional<double>& target_gsd) {
  if (!target_gsd) return {raster.width, raster.height, raster.transform};
  const double factor = *target_gsd / raster.gsd();
  const auto w = std::max<std::int64_t>(1, std::llround(static_cast<double>(raster.width) / factor));
  const auto h = std::max<std::int64_t>(1, std::llround(static_cast<double>(raster.height) / factor));
  AffineTransform::Matrix m = raster.transform.matrix();
  m.col(0) *= static_cast<double>(raster.width) / static_cast<double>(w);
  m.col(1) *= static_cast<double>(raster.height) / static_cast<double>(h);
  return {w, h, AffineTransform(m)};
}

// Marks pixel centers inside `aoi` row by row. Crossing rules mirror
// contains() so both paths agree.
void rasterize_north_up(Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& inside,
                        const AffineTransform& t, const AOI& aoi) {
  const Eigen::Index h = inside.rows(), w = inside.cols();
  std::vector<double> xs;
  for (const Polygon& poly : aoi.polygons) {
    const GeoBox env = envelope(poly);
    for (Eigen::Index r = 0; r < h; ++r) {
      const double y = t.f() + t.e() * (static_cast<double>(r) + 0.5);
      if (y < env.min_y || y > env.max_y) continue;
      xs.clear();
      auto add_ring = [&](const Ring& ring) {
        const std::size_t n = ring.size();
        if (n < 3) return;
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
          const auto& a = ring[i];
          const auto& b = ring[j];
          if ((a.y() > y) != (b.y() > y)) xs.push_back(a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y()));
        }
      };
      add_ring(poly.exterior);
      for (const Ring& hole : poly.holes) add_ring(hole);
      std::sort(xs.begin(), xs.end());
      for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
        // center x = c + a*(col + 0.5) in [xs[k], xs[k+1])
        const double lo = (xs[k] - t.c()) / t.a() - 0.5;
        const double hi = (xs[k + 1] - t.c()) / t.a() - 0.5;
        auto first = static_cast<Eigen::Index>(std::max(0.0, std::ceil(lo)));
        auto last = static_cast<Eigen::Index>(std::min(static_cast<double>(w), std::ceil(hi)));
        // Guard the ceil() against rounding at the span ends.
        while (first > 0 && t.c() + t.a() * (static_cast<double>(first - 1) + 0.5) >= xs[k]) --first;
        while (first < w && t.c() + t.a() * (static_cast<double>(first) + 0.5) < xs[k]) ++first;
        while (last < w && t.c() + t.a() * (static_cast<double>(last) + 0.5) < xs[k + 1]) ++last;
        while (last > 0 && t.c() + t.a() * (static_cast<double>(last - 1) + 0.5) >= xs[k + 1]) --last;
        for (Eigen::Index c = first; c < last; ++c) inside(r, c) = true;
      }
    }
  }
}

std::string gsd_label(double gsd_m) {
  std::string s = fmt::format("{:.1f}", gsd_m * 100.0);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s + "cm";
}

}  // namespace

std::string tile_name(const std::string& raster_id, std::optional<Split> split, double gsd_m,
                      std::int64_t col, std::int64_t row) {
  return fmt::format("{}_{}_{}_{:06d}_{:06d}", raster_id, split ? to_string(*split) : "infer",
                     gsd_label(gsd_m), col, row);
}

PixelStats pixel_stats(const Image& image) {
  PixelStats s;
  const double total = static_cast<double>(image.width() * image.height());
  if (total == 0.0 || image.band_count() < 3) return s;
  const Plane& r = image.bands[0];
  const Plane& g = image.bands[1];
  const Plane& b = image.bands[2];
  auto dark = (r <= 5) && (g <= 5) && (b <= 5);
  const auto white = (r >= 250) && (g >= 250) && (b >= 250);
  s.white_frac = static_cast<double>(white.count()) / total;
  if (image.has_alpha()) {
    const auto clear = image.bands[3] == 0;
    s.transparent_frac = static_cast<double>(clear.count()) / total;
    s.dark_frac = static_cast<double>((dark || clear).count()) / total;
  } else {
    s.dark_frac = static_cast<double>(dark.count()) / total;
  }
  return s;
}

double mask_tile(Image& pixels, const AffineTransform& tile_transform, const std::vector<AOI>& aois,
                 Split split) {
  const Eigen::Index h = pixels.height(), w = pixels.width();
  if (h == 0 || w == 0) return 0.0;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> inside =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(h, w, false);
  const bool scanline = tile_transform.north_up();
  for (const AOI& aoi : aois) {
    if (aoi.split != split) continue;
    if (scanline) {
      rasterize_north_up(inside, tile_transform, aoi);
    } else {
      for (Eigen::Index r = 0; r < h; ++r) {
        for (Eigen::Index c = 0; c < w; ++c) {
          if (inside(r, c)) continue;
          const Eigen::Vector2d p = tile_transform.apply(static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5);
          inside(r, c) = contains(aoi, p.x(), p.y());
        }
      }
    }
  }
  const auto masked = !inside;
  for (Plane& band : pixels.bands) band = masked.select(std::uint8_t{0}, band);
  return static_cast<double>(masked.count()) / static_cast<double>(h * w);
}

std::vector<TileAnnotation> assign_annotations(const TileRecord& tile,
                                               const std::vector<Annotation>& annotations,
                                               double min_frac) {
  const GeoBox footprint = tile.footprint();
  const double w = static_cast<double>(tile.width()), h = static_cast<double>(tile.height());
  std::vector<TileAnnotation> kept;
  for (const Annotation& a : annotations) {
    const double inter = intersection_area(a.box, footprint);
    if (inter <= 0.0 || inter / a.box.area() < min_frac) continue;
    Box<double> px = world_to_pixel_exact(intersection(a.box, footprint), tile.transform);
    px.min_x = std::clamp(px.min_x, 0.0, w);
    px.max_x = std::clamp(px.max_x, 0.0, w);
    px.min_y = std::clamp(px.min_y, 0.0, h);
    px.max_y = std::clamp(px.max_y, 0.0, h);
    kept.push_back({a.ann_id, px});
  }
  return kept;
}

std::vector<TileRecord> filter_tiles(std::vector<TileRecord> tiles, const TilingConfig& cfg) {
  std::erase_if(tiles, [&](const TileRecord& t) {
    return (cfg.drop_empty && t.annotations.empty()) || t.masked_frac > cfg.max_dark_frac ||
           t.white_frac > cfg.max_dark_frac || t.transparent_frac > cfg.max_dark_frac;
  });
  return tiles;
}

TilingResult tile_scene(const SceneBundle& scene, const TilingConfig& cfg) {
  cfg.validate();
  scene.raster.validate();
  TilingResult result;
  const ResampledGrid grid = resampled_grid(scene.raster, cfg.resample_gsd);
  result.raster = scene.raster;
  result.raster.width = grid.width;
  result.raster.height = grid.height;
  result.raster.transform = grid.transform;
  if (scene.pixels) {
    result.pixels = cfg.resample_gsd
                        ? std::make_shared<const Image>(resample_bilinear(*scene.pixels, grid.width, grid.height))
                        : scene.pixels;
  }

  const GridPlan plan = plan_grid(grid.width, grid.height, cfg);
  const double gsd = result.raster.gsd();

  // One candidate per (window, split) pair; the split's annotations only.
  struct Candidate {
    TileRecord record;
    const std::vector<Annotation>* annotations;
  };
  std::vector<Candidate> candidates;
  std::map<Split, std::vector<Annotation>> by_split;
  std::vector<Split> splits;
  if (!scene.aois.empty()) {
    for (const Annotation& a : scene.annotations) {
      if (auto s = assign_split(a, scene.aois)) by_split[*s].push_back(a);
    }
    for (Split s : {Split::train, Split::valid, Split::test}) {
      if (std::any_of(scene.aois.begin(), scene.aois.end(), [&](const AOI& a) { return a.split == s; })) {
        splits.push_back(s);
        by_split[s];
      }
    }
  }

  for (const PixelBox& win : plan.windows) {
    TileRecord rec;
    rec.raster_id = scene.raster.raster_id;
    rec.pixel_window = win;
    rec.transform = grid.transform.shifted(static_cast<double>(win.min_x), static_cast<double>(win.min_y));
    rec.crs = scene.raster.crs;
    if (splits.empty()) {
      rec.tile_id = tile_name(rec.raster_id, std::nullopt, gsd, win.min_x, win.min_y);
      candidates.push_back({rec, &scene.annotations});
      continue;
    }
    const GeoBox footprint = rec.footprint();
    for (Split s : splits) {
      const bool touches = std::any_of(scene.aois.begin(), scene.aois.end(), [&](const AOI& a) {
        return a.split == s && overlap_area(footprint, a) > 0.0;
      });
      if (!touches) continue;
      TileRecord r = rec;
      r.split = s;
      r.tile_id = tile_name(r.raster_id, s, gsd, win.min_x, win.min_y);
      candidates.push_back({std::move(r), &by_split[s]});
    }
  }

  parallel_for(candidates.size(), cfg.workers, [&](std::size_t i) {
    Candidate& c = candidates[i];
    c.record.annotations = assign_annotations(c.record, *c.annotations, cfg.min_annotation_frac);
    if (result.pixels) {
      const Image px = render_tile(result, scene.aois, c.record);
      const PixelStats stats = pixel_stats(px);
      c.record.masked_frac = stats.dark_frac;
      c.record.white_frac = stats.white_frac;
      c.record.transparent_frac = stats.transparent_frac;
    }
  });

  std::vector<TileRecord> records;
  records.reserve(candidates.size());
  for (Candidate& c : candidates) records.push_back(std::move(c.record));
  result.tiles = filter_tiles(std::move(records), cfg);
  std::sort(result.tiles.begin(), result.tiles.end(),
            [](const TileRecord& a, const TileRecord& b) { return a.tile_id < b.tile_id; });
  return result;
}

Image render_tile(const TilingResult& tiling, const std::vector<AOI>& aois, const TileRecord& tile) {
  if (!tiling.pixels) throw ValidationError("render_tile: tiling carries no pixels");
  const PixelBox& w = tile.pixel_window;
  Image px = tiling.pixels->crop(w.min_x, w.min_y, w.width(), w.height());
  if (tile.split) mask_tile(px, tile.transform, aois, *tile.split);
  return px;
}

std::string coco_json(const std::vector<TileRecord>& tiles) {
  json images = json::array();
  json annotations = json::array();
  std::int64_t ann_seq = 1;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const TileRecord& t = tiles[i];
    const std::int64_t image_id = static_cast<std::int64_t>(i) + 1;
    const AffineTransform& tf = t.transform;
    images.push_back({{"id", image_id},
                      {"file_name", "tiles/" + t.tile_id + ".tif"},
                      {"width", t.width()},
                      {"height", t.height()},
                      {"tile_id", t.tile_id},
                      {"raster_id", t.raster_id},
                      {"split", t.split ? json(std::string(to_string(*t.split))) : json(nullptr)},
                      {"crs", t.crs},
                      {"transform", {tf.a(), tf.b(), tf.c(), tf.d(), tf.e(), tf.f()}},
                      {"pixel_window", {t.pixel_window.min_x, t.pixel_window.min_y, t.pixel_window.max_x,
                                        t.pixel_window.max_y}},
                      {"masked_frac", t.masked_frac},
                      {"white_frac", t.white_frac},
                      {"transparent_frac", t.transparent_frac}});
    for (const TileAnnotation& a : t.annotations) {
      annotations.push_back({{"id", ann_seq++},
                             {"image_id", image_id},
                             {"category_id", 1},
                             {"bbox", {a.box.min_x, a.box.min_y, a.box.width(), a.box.height()}},
                             {"area", a.box.area()},
                             {"iscrowd", 0},
                             {"ann_id", a.ann_id}});
    }
  }
  json doc{{"images", std::move(images)},
           {"annotations", std::move(annotations)},
           {"categories", json::array({{{"id", 1}, {"name", "tree"}, {"supercategory", "tree"}}})}};
  return doc.dump() + "\n";
}

std::filesystem::path emit_coco(const TilingResult& tiling, const std::vector<AOI>& aois,
                                const std::filesystem::path& out_dir, unsigned workers) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "tiles", ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", (out_dir / "tiles").string(), ec.message()));
  if (tiling.pixels) {
    parallel_for(tiling.tiles.size(), workers, [&](std::size_t i) {
      const TileRecord& t = tiling.tiles[i];
      write_geotiff(out_dir / "tiles" / (t.tile_id + ".tif"), render_tile(tiling, aois, t), t.transform, t.crs);
    });
  }
  const auto path = out_dir / "coco.json";
  write_text_file(path, coco_json(tiling.tiles));
  return path;
}

std::vector<TileRecord> parse_coco(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("invalid COCO JSON: {}", e.what()));
  }
  std::vector<TileRecord> tiles;
  std::map<std::int64_t, std::size_t> by_id;
  try {
    for (const json& img : doc.at("images")) {
      TileRecord t;
      t.tile_id = img.contains("tile_id") ? img["tile_id"].get<std::string>()
                                          : std::filesystem::path(img.at("file_name").get<std::string>()).stem().string();
      t.raster_id = img.value("raster_id", std::string{});
      if (img.contains("split") && img["split"].is_string()) t.split = parse_split(img["split"].get<std::string>());
      t.crs = img.value("crs", std::string{});
      const auto w = img.at("width").get<std::int64_t>();
      const auto h = img.at("height").get<std::int64_t>();
      if (img.contains("pixel_window")) {
        const auto pw = img["pixel_window"].get<std::vector<std::int64_t>>();
        if (pw.size() != 4) throw ValidationError("pixel_window needs 4 values");
        t.pixel_window = {pw[0], pw[1], pw[2], pw[3]};
      } else {
        t.pixel_window = {0, 0, w, h};
      }
      if (img.contains("transform")) {
        const auto c = img["transform"].get<std::vector<double>>();
        if (c.size() != 6) throw ValidationError("transform needs 6 values");
        t.transform = AffineTransform(c[0], c[1], c[2], c[3], c[4], c[5]);
      }
      t.masked_frac = img.value("masked_frac", 0.0);
      t.white_frac = img.value("white_frac", 0.0);
      t.transparent_frac = img.value("transparent_frac", 0.0);
      by_id[img.at("id").get<std::int64_t>()] = tiles.size();
      tiles.push_back(std::move(t));
    }
    for (const json& a : doc.at("annotations")) {
      auto it = by_id.find(a.at("image_id").get<std::int64_t>());
      if (it == by_id.end()) throw ValidationError("annotation refers to an unknown image_id");
      const auto bbox = a.at("bbox").get<std::vector<double>>();
      if (bbox.size() != 4) throw ValidationError("bbox needs 4 values");
      tiles[it->second].annotations.push_back(
          {a.value("ann_id", a.at("id").get<std::int64_t>()), {bbox[0], bbox[1], bbox[0] + bbox[2], bbox[1] + bbox[3]}});
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed COCO JSON: {}", e.what()));
  }
  return tiles;
}

std::vector<TileRecord> read_coco(const std::filesystem::path& path) {
  return parse_coco(read_text_file(path));
}

GridPlan plan_grid(const RasterMeta& raster, const TilingConfig& cfg) {
  const ResampledGrid grid = resampled_grid(raster, cfg.resample_gsd);
  return plan_grid(grid.width, grid.height, cfg);
}

}  // namespace crownbench
