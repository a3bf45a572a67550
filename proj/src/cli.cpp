#include "crownbench/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <json.hpp>
#include <set>

#include "crownbench/aggregator.hpp"
#include "crownbench/errors.hpp"
#include "crownbench/geojson.hpp"
#include "crownbench/metrics.hpp"
#include "crownbench/raster_io.hpp"
#include "crownbench/scaleplan.hpp"
#include "crownbench/synth.hpp"
#include "crownbench/tiler.hpp"
#include "crownbench/tuner.hpp"
#include "crownbench/version.hpp"
#include "crownbench/worker_pool.hpp"

namespace crownbench::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for hashing", path));
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("SHA-256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

namespace {

// Flat key-value JSON config. Keys are long option names of the selected
// subcommand. A RunManifest is accepted too; its "config" member is used.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      doc = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    if (doc.is_object() && doc.contains("subcommand") && doc.contains("config")) doc = doc["config"];
    if (!doc.is_object()) throw CLI::ConfigError("config must be a flat JSON object");
    std::vector<std::string> parents;
    if (auto subs = root_->get_subcommands(); !subs.empty()) parents.push_back(subs.front()->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      if (value.is_null()) continue;
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(key, v));
      } else {
        item.inputs.push_back(scalar(key, value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar(const std::string& key, const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConfigError(fmt::format("config key '{}' must hold a scalar or a list of scalars", key));
  }

  const CLI::App* root_;
};

struct Run {
  std::string subcommand;
  json inputs = json::object();
  std::vector<std::string> outputs;

  void input(const std::string& path) { inputs[path] = sha256_file(path); }
};

json resolved_config(const CLI::App& sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    const bool flag = opt->get_expected_max() == 0;
    const bool multi = opt->get_expected_max() > 1;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      if (flag) {
        cfg[name] = true;
      } else if (multi) {
        cfg[name] = results;
      } else {
        cfg[name] = results.empty() ? std::string() : results.back();
      }
    } else if (flag) {
      cfg[name] = false;
    } else if (multi) {
      cfg[name] = json::array();
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    } else {
      cfg[name] = nullptr;
    }
  }
  return cfg;
}

fs::path manifest_for_file(const fs::path& out) {
  fs::path m = out;
  m.replace_extension(".manifest.json");
  return m;
}

void write_manifest(const fs::path& path, const Run& run, const json& config, double seconds) {
  json m;
  m["subcommand"] = run.subcommand;
  m["version"] = std::string(kVersion);
  m["config"] = config;
  m["inputs"] = run.inputs;
  m["outputs"] = run.outputs;
  m["wall_time_s"] = seconds;
  write_text_file(path, m.dump(1) + "\n");
}

std::pair<long, long> parse_range(const std::string& text, const std::string& flag) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    std::size_t u1 = 0, u2 = 0;
    const std::string lo = text.substr(0, colon), hi = text.substr(colon + 1);
    const long a = std::stol(lo, &u1), b = std::stol(hi, &u2);
    if (u1 != lo.size() || u2 != hi.size()) throw std::invalid_argument(text);
    return {a, b};
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("{} expects MIN:MAX in pixels, got '{}'", flag, text));
  }
}

BorderMode parse_border_mode(const std::string& s) {
  if (s == "intersecting") return BorderMode::intersecting;
  if (s == "contained") return BorderMode::contained;
  throw ValidationError(fmt::format("unknown border mode '{}'", s));
}

void require_same_crs(const std::string& a, const std::string& a_what, const std::string& b,
                      const std::string& b_what) {
  if (!a.empty() && !b.empty() && a != b) {
    throw ValidationError(fmt::format("CRS mismatch: {} is in '{}' but {} is in '{}'", a_what, a, b_what, b));
  }
}

json eval_json(const RasterEval& e) {
  return {{"raster_id", e.raster_id}, {"tp", e.tp},         {"fp", e.fp}, {"fn", e.fn},
          {"precision", e.precision}, {"recall", e.recall}, {"f1", e.f1}, {"n_truth", e.n_truth}};
}

std::vector<GeoBox> boxes_of(const std::vector<Annotation>& anns) {
  std::vector<GeoBox> out;
  out.reserve(anns.size());
  for (const Annotation& a : anns) out.push_back(a.box);
  return out;
}

// ---- tile

struct TileArgs {
  std::string raster, annotations, out;
  std::vector<std::string> aoi;
  std::int64_t tile_size_px = 1777;
  double overlap = 0.5;
  double min_annotation_frac = 0.4;
  double max_dark_frac = 0.8;
  std::optional<double> resample_gsd;
  bool keep_empty = false;
  unsigned workers = 0;
};

void cmd_tile(const TileArgs& a, Run& run, std::ostream& err) {
  TilingConfig cfg;
  cfg.tile_size_px = a.tile_size_px;
  cfg.overlap = a.overlap;
  cfg.min_annotation_frac = a.min_annotation_frac;
  cfg.max_dark_frac = a.max_dark_frac;
  cfg.resample_gsd = a.resample_gsd;
  cfg.drop_empty = !a.keep_empty;
  cfg.workers = a.workers;
  cfg.validate();

  run.input(a.raster);
  if (fs::exists(sidecar_path(a.raster))) run.input(sidecar_path(a.raster).string());
  if (!a.annotations.empty()) run.input(a.annotations);
  for (const auto& p : a.aoi) run.input(p);

  const SceneBundle scene = load_scene(a.raster, a.annotations, a.aoi);
  const TilingResult tiling = tile_scene(scene, cfg);
  const fs::path coco = emit_coco(tiling, scene.aois, a.out, a.workers);
  run.outputs.push_back(coco.string());
  for (const TileRecord& t : tiling.tiles) run.outputs.push_back((fs::path(a.out) / "tiles" / (t.tile_id + ".tif")).string());
  err << fmt::format("tile: {} tiles written to {}\n", tiling.tiles.size(), a.out);
}

// ---- aggregate

struct AggregateArgs {
  std::string detections, tiles_index, out;
  double nms_iou = 0.5;
  double score_min = 0.0;
  double band = 0.05;
  std::string border_mode = "intersecting";
};

void cmd_aggregate(const AggregateArgs& a, Run& run, std::ostream& err) {
  AggregationConfig cfg;
  cfg.nms_iou = a.nms_iou;
  cfg.score_min = a.score_min;
  cfg.border_band_frac = a.band;
  cfg.border_mode = parse_border_mode(a.border_mode);
  cfg.validate();

  run.input(a.detections);
  TileDetectionsFile file = read_tile_detections(a.detections);
  TileIndex index;
  std::string crs = file.crs;
  if (!a.tiles_index.empty()) {
    run.input(a.tiles_index);
    const auto records = read_coco(a.tiles_index);
    for (const TileRecord& r : records) {
      require_same_crs(file.crs, "detections '" + a.detections + "'", r.crs, "tile index '" + a.tiles_index + "'");
      if (crs.empty()) crs = r.crs;
    }
    index = tile_index(records);
  }
  index.insert(file.embedded_index.begin(), file.embedded_index.end());
  if (crs.empty()) throw ValidationError("aggregate: no CRS in the detections or the tile index");

  const auto merged = aggregate(file.tiles, index, cfg);
  write_detections(a.out, crs, merged);
  run.outputs.push_back(a.out);
  err << fmt::format("aggregate: {} detections from {} tiles\n", merged.size(), file.tiles.size());
}

// ---- evaluate

struct EvaluateArgs {
  std::vector<std::string> pred, truth;
  std::string report;
  double iou = 0.75;
  unsigned workers = 0;
};

void cmd_evaluate(const EvaluateArgs& a, Run& run, std::ostream& err) {
  if (a.pred.size() != a.truth.size()) {
    throw ValidationError(fmt::format("evaluate: {} --pred but {} --truth; pass them in pairs", a.pred.size(),
                                      a.truth.size()));
  }
  if (!(a.iou > 0.0 && a.iou <= 1.0)) throw ValidationError(fmt::format("--iou {} outside (0, 1]", a.iou));
  for (std::size_t i = 0; i < a.pred.size(); ++i) {
    run.input(a.pred[i]);
    run.input(a.truth[i]);
  }
  std::vector<RasterEval> evals(a.pred.size());
  parallel_for(a.pred.size(), a.workers, [&](std::size_t i) {
    const auto preds = read_detections(a.pred[i]);
    const std::string raster_id = fs::path(a.truth[i]).stem().string();
    const auto truth = read_annotations(a.truth[i], raster_id);
    if (preds.crs != truth.crs) {
      throw ValidationError(fmt::format("CRS mismatch: predictions '{}' are in '{}' but truth '{}' is in '{}'",
                                        a.pred[i], preds.crs, a.truth[i], truth.crs));
    }
    evals[i] = raster_f1(preds.items, boxes_of(truth.items), a.iou, raster_id);
  });

  json report;
  report["iou_threshold"] = a.iou;
  report["rasters"] = json::array();
  std::size_t total = 0;
  for (const RasterEval& e : evals) {
    report["rasters"].push_back(eval_json(e));
    total += e.n_truth;
  }
  if (evals.size() == 1) {
    const json single = eval_json(evals.front());
    for (const auto& [k, v] : single.items()) report[k] = v;
  }
  report["rf1"] = total > 0 ? json(dataset_rf1(evals, a.iou).rf1) : json(nullptr);
  report["config"] = {{"pred", a.pred}, {"truth", a.truth}, {"iou", a.iou}};
  write_text_file(a.report, report.dump(1) + "\n");
  run.outputs.push_back(a.report);
  err << fmt::format("evaluate: RF1 {} over {} raster(s)\n", report["rf1"].dump(), evals.size());
}

// ---- evaluate-coco

struct EvaluateCocoArgs {
  std::string pred, coco, report;
  int max_dets = 400;
};

void cmd_evaluate_coco(const EvaluateCocoArgs& a, Run& run, std::ostream& err) {
  run.input(a.pred);
  run.input(a.coco);
  const auto file = read_tile_detections(a.pred);
  const auto records = read_coco(a.coco);
  std::map<std::string, const TileDetections*> by_tile;
  for (const auto& t : file.tiles) {
    if (!by_tile.emplace(t.tile_id, &t).second) {
      throw ValidationError(fmt::format("evaluate-coco: tile '{}' appears twice in '{}'", t.tile_id, a.pred));
    }
  }
  std::vector<CocoImage> images;
  images.reserve(records.size());
  std::set<std::string> known;
  for (const TileRecord& r : records) {
    require_same_crs(file.crs, "detections '" + a.pred + "'", r.crs, "tile index '" + a.coco + "'");
    known.insert(r.tile_id);
    CocoImage img;
    for (const TileAnnotation& t : r.annotations) img.truths.push_back(t.box);
    if (auto it = by_tile.find(r.tile_id); it != by_tile.end()) {
      const TileDetections& d = *it->second;
      for (std::size_t i = 0; i < d.boxes.size(); ++i) img.detections.push_back({d.boxes[i], d.scores[i]});
    }
    images.push_back(std::move(img));
  }
  for (const auto& [id, _] : by_tile) {
    if (!known.count(id)) throw ValidationError(fmt::format("evaluate-coco: tile '{}' is not in '{}'", id, a.coco));
  }
  const auto thresholds = coco_iou_thresholds();
  const CocoEval ev = coco_eval(images, thresholds, a.max_dets);
  auto nan_null = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json report = {{"iou_thresholds", ev.iou_thresholds}, {"max_dets", ev.max_dets},
                 {"ap", ev.ap},                         {"ar", ev.ar},
                 {"map_50_95", ev.map_50_95},           {"mar_50_95", ev.mar_50_95},
                 {"map_50", nan_null(ev.map_50)},       {"mar_50", nan_null(ev.mar_50)},
                 {"images", images.size()},
                 {"config", {{"pred", a.pred}, {"coco", a.coco}, {"max_dets", a.max_dets}}}};
  write_text_file(a.report, report.dump(1) + "\n");
  run.outputs.push_back(a.report);
  err << fmt::format("evaluate-coco: mAP50:95 {:.4f}, mAR50:95 {:.4f} over {} images\n", ev.map_50_95,
                     ev.mar_50_95, images.size());
}

// ---- tune

struct TuneArgs {
  std::string pred_dir, truth_dir, out;
  double grid_step = 0.05;
  double iou = 0.75;
  double band = 0.05;
  std::string border_mode = "intersecting";
  unsigned workers = 0;
};

std::vector<std::string> files_with_suffix(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw IoError(fmt::format("'{}' is not a directory", dir.string()));
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) {
      out.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void cmd_tune(const TuneArgs& a, Run& run, std::ostream& err) {
  const GridSpec grid = GridSpec::uniform(a.grid_step, a.iou);
  const auto ids = files_with_suffix(a.truth_dir, ".geojson");
  if (ids.empty()) throw ValidationError(fmt::format("tune: no .geojson truth files in '{}'", a.truth_dir));
  std::vector<std::string> missing, orphans;
  for (const auto& id : ids) {
    if (!fs::exists(fs::path(a.pred_dir) / (id + ".json"))) missing.push_back(id);
  }
  const std::set<std::string> truth_ids(ids.begin(), ids.end());
  for (const auto& id : files_with_suffix(a.pred_dir, ".json")) {
    if (!id.ends_with(".coco") && !id.ends_with(".manifest") && !truth_ids.count(id)) orphans.push_back(id);
  }
  if (!missing.empty()) {
    throw ValidationError(fmt::format("tune: no detections for raster(s) {}", fmt::join(missing, ", ")));
  }
  if (!orphans.empty()) {
    throw ValidationError(fmt::format("tune: no truth for detection file(s) {}", fmt::join(orphans, ", ")));
  }

  std::vector<ValidationRaster> rasters(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const fs::path pred = fs::path(a.pred_dir) / (ids[i] + ".json");
    const fs::path coco = fs::path(a.pred_dir) / (ids[i] + ".coco.json");
    const fs::path truth = fs::path(a.truth_dir) / (ids[i] + ".geojson");
    run.input(pred.string());
    run.input(truth.string());
    auto file = read_tile_detections(pred);
    ValidationRaster& r = rasters[i];
    r.raster_id = ids[i];
    if (fs::exists(coco)) {
      run.input(coco.string());
      const auto records = read_coco(coco);
      for (const auto& rec : records) require_same_crs(file.crs, pred.string(), rec.crs, coco.string());
      r.index = tile_index(records);
    }
    r.index.insert(file.embedded_index.begin(), file.embedded_index.end());
    const auto t = read_annotations(truth, ids[i]);
    require_same_crs(file.crs, "detections '" + pred.string() + "'", t.crs, "truth '" + truth.string() + "'");
    r.tiles = std::move(file.tiles);
    r.truths = boxes_of(t.items);
  }

  TuneOptions opts;
  opts.border_band_frac = a.band;
  opts.border_mode = parse_border_mode(a.border_mode);
  opts.workers = a.workers;
  const TuneResult res = tune(rasters, grid, opts);

  json surface = json::array();
  for (Eigen::Index i = 0; i < res.surface.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < res.surface.cols(); ++j) row.push_back(res.surface(i, j));
    surface.push_back(std::move(row));
  }
  json out = {{"best_nms_iou", res.best_nms_iou},
              {"best_score_min", res.best_score_min},
              {"best_rf1", res.best_rf1},
              {"iou_threshold", grid.iou_threshold},
              {"nms_values", grid.nms_values},
              {"score_values", grid.score_values},
              {"surface", surface},
              {"rasters", ids}};
  write_text_file(a.out, out.dump(1) + "\n");
  run.outputs.push_back(a.out);
  err << fmt::format("tune: best RF1 {:.4f} at nms_iou {} and score_min {} over {} cells\n", res.best_rf1,
                     res.best_nms_iou, res.best_score_min, res.surface.size());
}

// ---- plan

struct PlanArgs {
  double gsd = 0.0;
  long tile_px = 0;
  std::string crop, resize, out;
  bool no_fallback = false;
};

void cmd_plan(const PlanArgs& a, Run& run, std::ostream& out) {
  AugPlan plan;
  plan.native_gsd = a.gsd;
  plan.tile_size_px = a.tile_px;
  std::tie(plan.crop_min_px, plan.crop_max_px) = parse_range(a.crop, "--crop");
  std::tie(plan.resize_min_px, plan.resize_max_px) = parse_range(a.resize, "--resize");
  plan.fallback = !a.no_fallback;
  plan.validate();

  const ExtentRange extent = effective_extent_range(plan);
  const Interval gsd = effective_gsd_range(plan);
  AugPlan crop_only = plan;
  crop_only.fallback = false;
  const Interval gsd_crop_only = effective_gsd_range(crop_only);

  out << fmt::format("gsd {} cm | tile {} px | crop {} | resize {} | extent {} m | resolution {} cm/px\n",
                     format_one_decimal(a.gsd * 100.0), a.tile_px, a.crop, a.resize, format_extent(extent),
                     format_gsd_cm(gsd));
  if (!a.out.empty()) {
    json doc = {
        {"extent_m", {{"crop_min", extent.crop.min}, {"crop_max", extent.crop.max},
                      {"fallback", extent.fallback ? json(*extent.fallback) : json(nullptr)}}},
        {"gsd_m", {{"min", gsd.min}, {"max", gsd.max}}},
        {"gsd_without_fallback_m", {{"min", gsd_crop_only.min}, {"max", gsd_crop_only.max}}},
        {"extent_text", format_extent(extent)},
        {"gsd_cm_text", format_gsd_cm(gsd)},
        {"gsd_without_fallback_cm_text", format_gsd_cm(gsd_crop_only)}};
    write_text_file(a.out, doc.dump(1) + "\n");
    run.outputs.push_back(a.out);
  }
}

// ---- synth

struct SynthArgs {
  SynthConfig cfg;
  std::string out;
  std::int64_t tile_size_px = 1777;
  double overlap = 0.75;
  double min_annotation_frac = 0.4;
  bool no_raster = false;
  unsigned workers = 0;
};

void cmd_synth(const SynthArgs& a, Run& run, std::ostream& err) {
  SynthConfig cfg = a.cfg;
  cfg.render_pixels = !a.no_raster;
  TilingConfig tcfg;
  tcfg.tile_size_px = a.tile_size_px;
  tcfg.overlap = a.overlap;
  tcfg.min_annotation_frac = a.min_annotation_frac;
  tcfg.drop_empty = false;
  tcfg.workers = a.workers;
  tcfg.validate();

  SceneBundle scene = gen_scene(cfg);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  if (scene.pixels) {
    const fs::path png = dir / "scene.png";
    write_png_sidecar(png, *scene.pixels, scene.raster.transform, scene.raster.crs);
    run.outputs.push_back(png.string());
    run.outputs.push_back(sidecar_path(png).string());
  }
  write_annotations(dir / "truth.geojson", scene.raster.crs, scene.annotations);
  run.outputs.push_back((dir / "truth.geojson").string());

  const GeoBox ext = scene.raster.extent();
  AOI aoi;
  aoi.split = Split::test;
  aoi.polygons.push_back(Polygon{{{ext.min_x, ext.min_y}, {ext.max_x, ext.min_y}, {ext.max_x, ext.max_y},
                                  {ext.min_x, ext.max_y}, {ext.min_x, ext.min_y}},
                                 {}});
  write_aois(dir / "aoi.geojson", scene.raster.crs, {aoi});
  run.outputs.push_back((dir / "aoi.geojson").string());

  SceneBundle geometry_only = scene;
  geometry_only.pixels.reset();
  const TilingResult tiling = tile_scene(geometry_only, tcfg);

  TileDetectionsFile dets;
  dets.crs = scene.raster.crs;
  dets.tiles.resize(tiling.tiles.size());
  dets.embedded_index = tile_index(tiling.tiles);
  SynthConfig pixel_cfg = cfg;
  pixel_cfg.jitter_sigma = cfg.jitter_sigma / tiling.raster.gsd();
  parallel_for(tiling.tiles.size(), a.workers, [&](std::size_t k) {
    const TileRecord& t = tiling.tiles[k];
    std::vector<Box<double>> truths;
    for (const TileAnnotation& ta : t.annotations) truths.push_back(ta.box);
    TileDetections& d = dets.tiles[k];
    d.tile_id = t.tile_id;
    d.width = t.width();
    d.height = t.height();
    for (const ScoredBox& sb : perturb(truths, pixel_cfg, k + 1)) {
      d.boxes.push_back(sb.box);
      d.scores.push_back(sb.score);
    }
  });
  write_tile_detections(dir / "detections.json", dets);
  write_text_file(dir / "coco.json", coco_json(tiling.tiles));
  run.outputs.push_back((dir / "detections.json").string());
  run.outputs.push_back((dir / "coco.json").string());
  err << fmt::format("synth: {} crowns, {} tiles written to {}\n", scene.annotations.size(), tiling.tiles.size(),
                     a.out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tree-crown detection benchmark toolkit: tiling, aggregation, evaluation and tuning", "crownbench"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);
  app.option_defaults()->always_capture_default();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "Flat JSON config (or a RunManifest); flags override it");
  app.config_formatter(std::make_shared<JsonConfig>(&app));

  TileArgs tile;
  auto* t = app.add_subcommand("tile", "Cut a georeferenced raster into training or inference tiles");
  t->add_option("--raster", tile.raster, "GeoTIFF or PNG with a .geo.json sidecar")->required();
  t->add_option("--annotations", tile.annotations, "Box annotations GeoJSON");
  t->add_option("--aoi", tile.aoi, "AOI GeoJSON with split labels (repeatable)");
  t->add_option("--tile-size-px", tile.tile_size_px, "Tile side in pixels");
  t->add_option("--overlap", tile.overlap, "Overlap fraction in [0, 1)");
  t->add_option("--min-annotation-frac", tile.min_annotation_frac, "Minimum visible fraction of a box to keep it");
  t->add_option("--max-dark-frac", tile.max_dark_frac, "Maximum masked, white or transparent fraction of a tile");
  t->add_option("--resample-gsd", tile.resample_gsd, "Resample to this GSD (m/px) before tiling");
  t->add_flag("--keep-empty", tile.keep_empty, "Keep tiles without annotations");
  t->add_option("--workers", tile.workers, "Worker threads (0 = CROWNBENCH_WORKERS or all cores)");
  t->add_option("--out", tile.out, "Output directory")->required();

  AggregateArgs agg;
  auto* g = app.add_subcommand("aggregate", "Merge tile detections into one raster-level GeoJSON");
  g->add_option("--detections", agg.detections, "Per-tile detections JSON")->required();
  g->add_option("--tiles-index", agg.tiles_index, "coco.json written by tile");
  g->add_option("--nms-iou", agg.nms_iou, "NMS IoU threshold")->check(CLI::Range(0.0, 1.0));
  g->add_option("--score-min", agg.score_min, "Minimum score")->check(CLI::Range(0.0, 1.0));
  g->add_option("--band", agg.band, "Border band as a fraction of the tile side")->check(CLI::Range(0.0, 0.5));
  g->add_option("--border-mode", agg.border_mode, "intersecting or contained")
      ->check(CLI::IsMember({"intersecting", "contained"}));
  g->add_option("--out", agg.out, "Output GeoJSON")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Raster-level precision, recall and F1 with greedy matching");
  e->add_option("--pred", ev.pred, "Predictions GeoJSON (repeatable, paired with --truth)")
      ->required();
  e->add_option("--truth", ev.truth, "Truth GeoJSON (repeatable)")->required();
  e->add_option("--iou", ev.iou, "IoU threshold in (0, 1]");
  e->add_option("--workers", ev.workers, "Worker threads");
  e->add_option("--report", ev.report, "Report JSON")->required();

  EvaluateCocoArgs ec;
  auto* c = app.add_subcommand("evaluate-coco", "COCO-style mAP and mAR over tiles");
  c->add_option("--pred", ec.pred, "Per-tile detections JSON")->required();
  c->add_option("--coco", ec.coco, "coco.json with tile truths")->required();
  c->add_option("--max-dets", ec.max_dets, "Detections per tile")->check(CLI::PositiveNumber);
  c->add_option("--report", ec.report, "Report JSON")->required();

  TuneArgs tu;
  auto* u = app.add_subcommand("tune", "Grid search over NMS IoU and minimum score maximizing RF1");
  u->add_option("--pred-dir", tu.pred_dir, "Directory of <raster>.json tile detections")
      ->required();
  u->add_option("--truth-dir", tu.truth_dir, "Directory of <raster>.geojson truths")
      ->required();
  u->add_option("--grid-step", tu.grid_step, "Grid spacing on both axes");
  u->add_option("--iou", tu.iou, "IoU threshold for RF1");
  u->add_option("--band", tu.band, "Border band fraction")->check(CLI::Range(0.0, 0.5));
  u->add_option("--border-mode", tu.border_mode, "intersecting or contained")
      ->check(CLI::IsMember({"intersecting", "contained"}));
  u->add_option("--workers", tu.workers, "Worker threads");
  u->add_option("--out", tu.out, "Result JSON")->required();

  PlanArgs pl;
  auto* p = app.add_subcommand("plan", "Effective extent and GSD ranges of a crop-and-resize augmentation");
  p->add_option("--gsd", pl.gsd, "Native GSD in m/px")->required();
  p->add_option("--tile-px", pl.tile_px, "Tile side in pixels")->required();
  p->add_option("--crop", pl.crop, "Crop side range MIN:MAX in pixels")->required();
  p->add_option("--resize", pl.resize, "Resize side range MIN:MAX in pixels")->required();
  p->add_flag("--no-fallback", pl.no_fallback, "Crops are always applied");
  p->add_option("--out", pl.out, "Result JSON");

  SynthArgs sy;
  auto* s = app.add_subcommand("synth", "Generate a synthetic scene with truth and perturbed detections");
  s->add_option("--seed", sy.cfg.seed, "RNG seed");
  s->add_option("--extent", sy.cfg.extent_m, "Scene side in meters");
  s->add_option("--gsd", sy.cfg.gsd, "GSD in m/px");
  s->add_option("--crowns", sy.cfg.n_crowns, "Number of crowns");
  s->add_option("--crown-median", sy.cfg.crown_median_m, "Median crown diameter in meters");
  s->add_option("--crown-log-sigma", sy.cfg.crown_log_sigma, "Log-space sigma of crown diameter");
  s->add_option("--crown-min", sy.cfg.crown_min_m, "Smallest crown diameter in meters");
  s->add_option("--crown-max", sy.cfg.crown_max_m, "Largest crown diameter in meters");
  s->add_option("--max-iou", sy.cfg.max_gt_iou, "Largest IoU between two crowns");
  s->add_option("--margin", sy.cfg.margin_m, "Crown-free margin along the scene edge in meters");
  s->add_option("--jitter", sy.cfg.jitter_sigma, "Edge jitter sigma in meters");
  s->add_option("--drop", sy.cfg.drop_prob, "Probability of missing a crown");
  s->add_option("--spurious", sy.cfg.spurious_rate, "Spurious detections per crown");
  s->add_option("--crs", sy.cfg.crs, "CRS string");
  s->add_option("--raster-id", sy.cfg.raster_id, "Raster identifier used in tile names");
  s->add_option("--tile-size-px", sy.tile_size_px, "Tile side in pixels for the detections");
  s->add_option("--overlap", sy.overlap, "Tile overlap for the detections");
  s->add_option("--min-annotation-frac", sy.min_annotation_frac, "Minimum visible fraction of a crown per tile");
  s->add_flag("--no-raster", sy.no_raster, "Skip rendering scene.png");
  s->add_option("--workers", sy.workers, "Worker threads");
  s->add_option("--out", sy.out, "Output directory")->required();

  const auto started = std::chrono::steady_clock::now();
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::FileError& ex) {
    err << ex.what() << "\n";
    return kExitIo;
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  Run r;
  r.subcommand = sub->get_name();
  try {
    fs::path manifest;
    if (sub == t) {
      cmd_tile(tile, r, err);
      manifest = fs::path(tile.out) / "manifest.json";
    } else if (sub == g) {
      cmd_aggregate(agg, r, err);
      manifest = manifest_for_file(agg.out);
    } else if (sub == e) {
      cmd_evaluate(ev, r, err);
      manifest = manifest_for_file(ev.report);
    } else if (sub == c) {
      cmd_evaluate_coco(ec, r, err);
      manifest = manifest_for_file(ec.report);
    } else if (sub == u) {
      cmd_tune(tu, r, err);
      manifest = manifest_for_file(tu.out);
    } else if (sub == p) {
      cmd_plan(pl, r, out);
      if (!pl.out.empty()) manifest = manifest_for_file(pl.out);
    } else if (sub == s) {
      cmd_synth(sy, r, err);
      manifest = fs::path(sy.out) / "manifest.json";
    }
    if (!manifest.empty()) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
      write_manifest(manifest, r, resolved_config(*sub), elapsed.count());
    }
  } catch (const IoError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace crownbench::cli
