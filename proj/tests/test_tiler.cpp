#include <gtest/gtest.h>

#include <json.hpp>
#include <algorithm>
#include <random>
#include <set>

#include "crownbench/geojson.hpp"
#include "crownbench/raster_io.hpp"
#include "crownbench/tiler.hpp"
#include "support.hpp"

using namespace crownbench;
namespace fs = std::filesystem;

namespace {

Ring rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

TilingConfig config(std::int64_t tile, double overlap) {
  TilingConfig c;
  c.tile_size_px = tile;
  c.overlap = overlap;
  c.workers = 2;
  return c;
}

// 100 x 100 m tile at 1 m/px with its top-left corner at (0, 100).
TileRecord unit_tile() {
  TileRecord t;
  t.tile_id = "t";
  t.pixel_window = {0, 0, 100, 100};
  t.transform = AffineTransform::north_up(0, 100, 1.0);
  return t;
}

SceneBundle scene_with_pixels(std::int64_t w, std::int64_t h, double gsd, std::uint8_t fill = 120) {
  SceneBundle s;
  s.raster = {"r", w, h, AffineTransform::north_up(0, static_cast<double>(h) * gsd, gsd), "EPSG:32618"};
  s.pixels = std::make_shared<const Image>(w, h, 3, fill);
  return s;
}

}  // namespace

TEST(PlanAxis, ThirteenWindowsAtQuarterStride) {
  const auto o = plan_axis(4000, 1000, 250);
  ASSERT_EQ(o.size(), 13u);
  for (std::size_t i = 0; i < o.size(); ++i) EXPECT_EQ(o[i], static_cast<std::int64_t>(i) * 250);
}

TEST(PlanAxis, ExactFitGivesOneWindow) { EXPECT_EQ(plan_axis(1000, 1000, 250), (std::vector<std::int64_t>{0})); }

TEST(PlanAxis, FinalWindowSnapsToEdge) {
  EXPECT_EQ(plan_axis(1100, 1000, 250), (std::vector<std::int64_t>{0, 100}));
}

TEST(PlanAxisProperty, CountFormulaAndCoverage) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::int64_t> tile(1, 300), extra(1, 3000);
  std::uniform_real_distribution<double> ov(0.0, 0.95);
  for (int i = 0; i < 2000; ++i) {
    TilingConfig c = config(tile(rng), ov(rng));
    if (c.stride_px() < 1) continue;
    const std::int64_t n = c.tile_size_px + extra(rng);
    const auto o = plan_axis(n, c.tile_size_px, c.stride_px());
    const auto expected = (n - c.tile_size_px + c.stride_px() - 1) / c.stride_px() + 1;
    EXPECT_EQ(static_cast<std::int64_t>(o.size()), expected);
    std::int64_t covered = 0;
    for (std::int64_t start : o) {
      EXPECT_LE(start, covered);
      covered = std::max(covered, start + c.tile_size_px);
    }
    EXPECT_EQ(covered, n);
  }
}

TEST(PlanGrid, UndersizedRasterClampedAndFlagged) {
  const GridPlan p = plan_grid(500, 2000, config(1000, 0.5));
  EXPECT_TRUE(p.undersized);
  ASSERT_EQ(p.windows.size(), 3u);
  EXPECT_EQ(p.windows[0], (PixelBox{0, 0, 500, 1000}));
}

TEST(PlanGrid, RowMajorOrder) {
  const GridPlan p = plan_grid(2000, 1500, config(1000, 0.5));
  ASSERT_EQ(p.windows.size(), 3u * 2u);
  EXPECT_EQ(p.windows[1], (PixelBox{500, 0, 1500, 1000}));
  EXPECT_EQ(p.windows[3], (PixelBox{0, 500, 1000, 1500}));
}

TEST(TilingConfig, DefaultTileIsEightyMetresAtNativeGsd) {
  TilingConfig c;
  EXPECT_EQ(c.tile_size_px, static_cast<std::int64_t>(80.0 / 0.045));
}

TEST(TilingConfig, Validation) {
  EXPECT_THROW(config(0, 0.5).validate(), ValidationError);
  EXPECT_THROW(config(100, 1.0).validate(), ValidationError);
  EXPECT_THROW(config(100, -0.1).validate(), ValidationError);
  EXPECT_THROW(config(10, 0.99).validate(), ValidationError);  // stride rounds to 0
  EXPECT_EQ(config(1777, 0.75).stride_px(), 444);
}

TEST(TileName, Format) {
  EXPECT_EQ(tile_name("site", Split::train, 0.045, 444, 0), "site_train_4p5cm_000444_000000");
  EXPECT_EQ(tile_name("site", std::nullopt, 0.1, 0, 12), "site_infer_10p0cm_000000_000012");
}

TEST(MaskTile, FullyInsideUnchanged) {
  Image px(10, 10, 3, 100);
  const auto t = AffineTransform::north_up(0, 10, 1.0);
  const std::vector<AOI> aois{{Split::train, {Polygon{rect(-5, -5, 15, 15), {}}}}};
  EXPECT_EQ(mask_tile(px, t, aois, Split::train), 0.0);
  EXPECT_TRUE(px == Image(10, 10, 3, 100));
}

TEST(MaskTile, FullyOutsideAllMasked) {
  Image px(10, 10, 4, 100);
  const auto t = AffineTransform::north_up(0, 10, 1.0);
  const std::vector<AOI> aois{{Split::train, {Polygon{rect(50, 50, 60, 60), {}}}},
                              {Split::test, {Polygon{rect(-5, -5, 15, 15), {}}}}};
  EXPECT_EQ(mask_tile(px, t, aois, Split::train), 1.0);
  EXPECT_TRUE(px == Image(10, 10, 4, 0));
}

TEST(MaskTile, HoleOverOneQuadrant) {
  Image px(100, 100, 3, 100);
  const auto t = AffineTransform::north_up(0, 100, 1.0);
  const std::vector<AOI> aois{{Split::valid, {Polygon{rect(-1, -1, 101, 101), {rect(50, 50, 101, 101)}}}}};
  EXPECT_NEAR(mask_tile(px, t, aois, Split::valid), 0.25, 1.0 / (100.0 * 100.0));
  EXPECT_EQ(px.bands[0](0, 99), 0);    // top-right quadrant is the hole
  EXPECT_EQ(px.bands[0](99, 0), 100);
}

TEST(MaskTile, ScanlineMatchesPointTestOnRandomPolygons) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> coord(-10.0, 70.0);
  for (int i = 0; i < 200; ++i) {
    Ring ring;
    for (int k = 0; k < 7; ++k) ring.push_back({coord(rng), coord(rng)});
    ring.push_back(ring.front());
    const std::vector<AOI> aois{{Split::train, {Polygon{ring, {}}}}};
    const auto north = AffineTransform::north_up(0.0, 60.0, 0.75);
    Image fast(80, 80, 3, 50);
    mask_tile(fast, north, aois, Split::train);
    for (Eigen::Index r = 0; r < 80; ++r) {
      for (Eigen::Index c = 0; c < 80; ++c) {
        const auto p = north.apply(static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5);
        ASSERT_EQ(fast.bands[0](r, c) != 0, contains(aois[0], p.x(), p.y())) << "polygon " << i;
      }
    }
  }
}

TEST(AssignAnnotations, InsideKeptUnclipped) {
  const auto kept = assign_annotations(unit_tile(), {{7, {10, 10, 20, 30}, "r"}}, 0.4);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].ann_id, 7);
  // rows grow downward: y 30 -> row 70
  EXPECT_EQ(kept[0].box, (Box<double>{10, 70, 20, 90}));
}

TEST(AssignAnnotations, ThirtyNinePercentDropped) {
  // x from 61 to 161: 39 of 100 units inside
  EXPECT_TRUE(assign_annotations(unit_tile(), {{1, {61, 10, 161, 20}, "r"}}, 0.4).empty());
}

TEST(AssignAnnotations, ExactlyFortyPercentKeptAndClipped) {
  const auto kept = assign_annotations(unit_tile(), {{1, {60, 10, 160, 20}, "r"}}, 0.4);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].box, (Box<double>{60, 80, 100, 90}));
}

TEST(AssignAnnotationsProperty, MonotoneInThreshold) {
  std::mt19937_64 rng(23);
  std::vector<Annotation> anns;
  for (int i = 0; i < 500; ++i) anns.push_back({i, testing_support::random_box(rng, 140.0, 40.0), "r"});
  for (auto& a : anns) {
    a.box.min_x -= 20;
    a.box.max_x -= 20;
    a.box.min_y -= 20;
    a.box.max_y -= 20;
  }
  std::set<std::int64_t> previous;
  for (double f : {1.0, 0.8, 0.6, 0.4, 0.2, 0.0}) {
    std::set<std::int64_t> now;
    for (const auto& k : assign_annotations(unit_tile(), anns, f)) now.insert(k.ann_id);
    EXPECT_TRUE(std::includes(now.begin(), now.end(), previous.begin(), previous.end()));
    previous = now;
  }
}

TEST(FilterTiles, Rules) {
  TilingConfig cfg;
  auto tile = [](std::size_t n_ann, double masked, double white = 0, double clear = 0) {
    TileRecord t;
    t.annotations.resize(n_ann);
    t.masked_frac = masked;
    t.white_frac = white;
    t.transparent_frac = clear;
    return t;
  };
  EXPECT_TRUE(filter_tiles({tile(0, 0.0)}, cfg).empty());
  EXPECT_TRUE(filter_tiles({tile(3, 0.81)}, cfg).empty());
  EXPECT_EQ(filter_tiles({tile(1, 0.80)}, cfg).size(), 1u);
  EXPECT_TRUE(filter_tiles({tile(2, 0.0, 0.9)}, cfg).empty());
  EXPECT_TRUE(filter_tiles({tile(2, 0.0, 0.0, 0.85)}, cfg).empty());
  cfg.drop_empty = false;
  EXPECT_EQ(filter_tiles({tile(0, 0.0)}, cfg).size(), 1u);
}

TEST(PixelStats, Classification) {
  Image img(4, 1, 4, 128);
  img.bands[0](0, 0) = img.bands[1](0, 0) = img.bands[2](0, 0) = 3;      // dark
  img.bands[0](0, 1) = img.bands[1](0, 1) = img.bands[2](0, 1) = 255;    // white
  img.bands[3](0, 2) = 0;                                                // transparent
  const PixelStats s = pixel_stats(img);
  EXPECT_DOUBLE_EQ(s.dark_frac, 0.5);
  EXPECT_DOUBLE_EQ(s.white_frac, 0.25);
  EXPECT_DOUBLE_EQ(s.transparent_frac, 0.25);
}

TEST(TileScene, SplitsMaskingAndFiltering) {
  SceneBundle s = scene_with_pixels(200, 100, 1.0);
  s.aois = {{Split::train, {Polygon{rect(0, 0, 100, 100), {}}}}, {Split::test, {Polygon{rect(100, 0, 200, 100), {}}}}};
  s.annotations = {{1, {10, 10, 20, 20}, "r"}, {2, {150, 50, 160, 60}, "r"}, {3, {95, 50, 103, 60}, "r"}};
  TilingConfig cfg = config(100, 0.5);
  const TilingResult res = tile_scene(s, cfg);
  // windows at x = 0, 50, 100; the middle window straddles both splits.
  std::vector<std::string> ids;
  for (const auto& t : res.tiles) ids.push_back(t.tile_id);
  // The test half of the middle window holds no annotation and is dropped.
  EXPECT_EQ(ids, (std::vector<std::string>{"r_test_100p0cm_000100_000000", "r_train_100p0cm_000000_000000",
                                           "r_train_100p0cm_000050_000000"}));
  for (const auto& t : res.tiles) {
    if (t.pixel_window.min_x == 50) EXPECT_NEAR(t.masked_frac, 0.5, 1e-12) << t.tile_id;
    for (const auto& a : t.annotations) {
      if (t.split == Split::train) EXPECT_NE(a.ann_id, 2);
      if (t.split == Split::test) EXPECT_EQ(a.ann_id, 2);
    }
  }
}

TEST(TileScene, DarkTilesDroppedAtThreshold) {
  SceneBundle s = scene_with_pixels(100, 100, 1.0, 0);
  s.annotations = {{1, {10, 10, 20, 20}, "r"}};
  EXPECT_TRUE(tile_scene(s, config(100, 0.0)).tiles.empty());
}

TEST(TileScene, ResamplingChangesGrid) {
  SceneBundle s = scene_with_pixels(400, 400, 0.05);
  s.annotations = {{1, {1, 1, 3, 3}, "r"}};
  TilingConfig cfg = config(100, 0.0);
  cfg.resample_gsd = 0.1;
  const TilingResult res = tile_scene(s, cfg);
  EXPECT_EQ(res.raster.width, 200);
  EXPECT_DOUBLE_EQ(res.raster.gsd(), 0.1);
  ASSERT_EQ(res.tiles.size(), 1u);
  EXPECT_EQ(res.pixels->width(), 200);
  EXPECT_EQ(res.tiles[0].tile_id, "r_infer_10p0cm_000000_000100");
}

TEST(EmitCoco, CountsAndRoundTrip) {
  const fs::path dir = testing_support::scratch("coco_emit");
  SceneBundle s = scene_with_pixels(200, 100, 1.0);
  s.annotations = {{1, {5, 5, 15, 15}, "r"}, {2, {20, 20, 30, 30}, "r"}, {3, {40, 60, 50, 70}, "r"},
                   {4, {120, 10, 130, 20}, "r"}, {5, {150.25, 40.5, 160.75, 55.125}, "r"}};
  const TilingResult res = tile_scene(s, config(100, 0.0));
  ASSERT_EQ(res.tiles.size(), 2u);
  const fs::path path = emit_coco(res, s.aois, dir, 2);
  const auto doc = nlohmann::json::parse(read_text_file(path));
  EXPECT_EQ(doc["images"].size(), 2u);
  EXPECT_EQ(doc["annotations"].size(), 5u);
  EXPECT_EQ(doc["categories"].size(), 1u);
  EXPECT_EQ(doc["categories"][0]["name"], "tree");
  for (const auto& t : res.tiles) EXPECT_TRUE(fs::exists(dir / "tiles" / (t.tile_id + ".tif")));

  const auto back = read_coco(path);
  ASSERT_EQ(back.size(), res.tiles.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].tile_id, res.tiles[i].tile_id);
    EXPECT_EQ(back[i].transform, res.tiles[i].transform);
    EXPECT_EQ(back[i].pixel_window, res.tiles[i].pixel_window);
    EXPECT_EQ(back[i].crs, res.tiles[i].crs);
    ASSERT_EQ(back[i].annotations.size(), res.tiles[i].annotations.size());
    for (std::size_t k = 0; k < back[i].annotations.size(); ++k) {
      const auto& a = back[i].annotations[k].box;
      const auto& b = res.tiles[i].annotations[k].box;
      EXPECT_NEAR(a.min_x, b.min_x, 1e-6);
      EXPECT_NEAR(a.min_y, b.min_y, 1e-6);
      EXPECT_NEAR(a.max_x, b.max_x, 1e-6);
      EXPECT_NEAR(a.max_y, b.max_y, 1e-6);
    }
  }
  const GeoRaster tile = read_geotiff(dir / "tiles" / (res.tiles[1].tile_id + ".tif"));
  EXPECT_EQ(tile.meta.transform, res.tiles[1].transform);
  EXPECT_EQ(tile.image.width(), 100);
}

TEST(EmitCoco, EmptyInputIsValidJson) {
  const auto doc = nlohmann::json::parse(coco_json({}));
  EXPECT_TRUE(doc["images"].empty());
  EXPECT_TRUE(doc["annotations"].empty());
  EXPECT_EQ(doc["categories"].size(), 1u);
}

TEST(EmitCoco, DeterministicBytes) {
  SceneBundle s = scene_with_pixels(300, 300, 0.5);
  std::mt19937_64 rng(24);
  for (int i = 0; i < 50; ++i) s.annotations.push_back({i, testing_support::random_box(rng, 140.0, 8.0), "r"});
  TilingConfig a = config(100, 0.5), b = a;
  a.workers = 1;
  b.workers = 4;
  EXPECT_EQ(coco_json(tile_scene(s, a).tiles), coco_json(tile_scene(s, b).tiles));
}

TEST(ParseCoco, RejectsMalformed) {
  EXPECT_THROW(parse_coco("{"), ValidationError);
  EXPECT_THROW(parse_coco(R"({"images":[{"id":1,"width":1,"height":1}],"annotations":[{"image_id":9,"bbox":[0,0,1,1]}]})"),
               ValidationError);
}
