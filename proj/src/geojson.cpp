#include "crownbench/geojson.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

namespace crownbench {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

namespace {

json parse_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
}

std::string crs_of(const json& doc) {
  if (auto it = doc.find("crs"); it != doc.end()) {
    if (it->is_string()) return it->get<std::string>();
    if (it->is_object() && it->contains("properties") && (*it)["properties"].contains("name")) {
      return (*it)["properties"]["name"].get<std::string>();
    }
  }
  return {};
}

json crs_member(const std::string& crs) {
  return json{{"type", "name"}, {"properties", {{"name", crs}}}};
}

const json& features_of(const json& doc, const std::filesystem::path& path) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw ValidationError(fmt::format("{}: expected a GeoJSON FeatureCollection", path.string()));
  }
  return doc["features"];
}

Ring parse_ring(const json& coords) {
  Ring r;
  r.reserve(coords.size());
  for (const json& p : coords) {
    if (!p.is_array() || p.size() < 2) throw ValidationError("GeoJSON position must have two numbers");
    r.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return r;
}

Polygon parse_polygon(const json& coords) {
  if (!coords.is_array() || coords.empty()) throw ValidationError("GeoJSON polygon has no rings");
  Polygon poly;
  poly.exterior = parse_ring(coords[0]);
  for (std::size_t i = 1; i < coords.size(); ++i) poly.holes.push_back(parse_ring(coords[i]));
  return poly;
}

std::vector<Polygon> parse_polygons(const json& geometry) {
  const std::string type = geometry.value("type", "");
  if (type == "Polygon") return {parse_polygon(geometry.at("coordinates"))};
  if (type == "MultiPolygon") {
    std::vector<Polygon> out;
    for (const json& c : geometry.at("coordinates")) out.push_back(parse_polygon(c));
    return out;
  }
  throw ValidationError(fmt::format("unsupported geometry type '{}'", type));
}

json ring_json(const Ring& r) {
  json arr = json::array();
  for (const auto& p : r) arr.push_back({p.x(), p.y()});
  if (!r.empty() && r.front() != r.back()) arr.push_back({r.front().x(), r.front().y()});
  return arr;
}

json box_geometry(const GeoBox& b) {
  return json{{"type", "Polygon"},
              {"coordinates",
               json::array({json::array({{b.min_x, b.min_y},
                                         {b.max_x, b.min_y},
                                         {b.max_x, b.max_y},
                                         {b.min_x, b.max_y},
                                         {b.min_x, b.min_y}})})}};
}

json collection(const std::string& crs, json features) {
  json doc{{"type", "FeatureCollection"}, {"features", std::move(features)}};
  if (!crs.empty()) doc["crs"] = crs_member(crs);
  return doc;
}

std::string dump(const json& doc) { return doc.dump(1) + "\n"; }

GeoBox feature_box(const json& feature) {
  const auto polys = parse_polygons(feature.at("geometry"));
  if (polys.size() != 1) throw ValidationError("box feature must be a single polygon");
  return envelope(polys.front());
}

}  // namespace

CrsTagged<Annotation> read_annotations(const std::filesystem::path& path,
                                       const std::string& raster_id) {
  const json doc = parse_file(path);
  CrsTagged<Annotation> out{crs_of(doc), {}};
  std::vector<std::string> bad;
  std::size_t index = 0;
  for (const json& f : features_of(doc, path)) {
    const json props = f.value("properties", json::object());
    if (!props.contains("ann_id") || !props["ann_id"].is_number_integer()) {
      bad.push_back(fmt::format("feature #{} (missing integer ann_id)", index));
      ++index;
      continue;
    }
    Annotation a;
    a.ann_id = props["ann_id"].get<std::int64_t>();
    a.raster_id = raster_id;
    try {
      a.box = feature_box(f);
    } catch (const std::exception& e) {
      bad.push_back(fmt::format("ann_id {} ({})", a.ann_id, e.what()));
      ++index;
      continue;
    }
    if (!has_positive_area(a.box)) {
      bad.push_back(fmt::format("ann_id {} (zero-area box)", a.ann_id));
    } else {
      out.items.push_back(a);
    }
    ++index;
  }
  if (!bad.empty()) {
    throw ValidationError(fmt::format("{}: invalid annotations: {}", path.string(), fmt::join(bad, "; ")));
  }
  return out;
}

void write_annotations(const std::filesystem::path& path, const std::string& crs,
                       const std::vector<Annotation>& annotations) {
  json features = json::array();
  for (const Annotation& a : annotations) {
    features.push_back({{"type", "Feature"},
                        {"properties", {{"ann_id", a.ann_id}}},
                        {"geometry", box_geometry(a.box)}});
  }
  write_text_file(path, dump(collection(crs, std::move(features))));
}

CrsTagged<AOI> read_aois(const std::filesystem::path& path) {
  const json doc = parse_file(path);
  CrsTagged<AOI> out{crs_of(doc), {}};
  for (const json& f : features_of(doc, path)) {
    const json props = f.value("properties", json::object());
    if (!props.contains("split") || !props["split"].is_string()) {
      throw ValidationError(fmt::format("{}: AOI feature without a 'split' property", path.string()));
    }
    AOI aoi;
    aoi.split = parse_split(props["split"].get<std::string>());
    aoi.polygons = parse_polygons(f.at("geometry"));
    out.items.push_back(std::move(aoi));
  }
  return out;
}

void write_aois(const std::filesystem::path& path, const std::string& crs,
                const std::vector<AOI>& aois) {
  json features = json::array();
  for (const AOI& aoi : aois) {
    json polys = json::array();
    for (const Polygon& p : aoi.polygons) {
      json rings = json::array({ring_json(p.exterior)});
      for (const Ring& h : p.holes) rings.push_back(ring_json(h));
      polys.push_back(std::move(rings));
    }
    json geometry = polys.size() == 1 ? json{{"type", "Polygon"}, {"coordinates", polys[0]}}
                                      : json{{"type", "MultiPolygon"}, {"coordinates", polys}};
    features.push_back({{"type", "Feature"},
                        {"properties", {{"split", std::string(to_string(aoi.split))}}},
                        {"geometry", std::move(geometry)}});
  }
  write_text_file(path, dump(collection(crs, std::move(features))));
}

CrsTagged<Detection> read_detections(const std::filesystem::path& path) {
  const json doc = parse_file(path);
  CrsTagged<Detection> out{crs_of(doc), {}};
  std::size_t index = 0;
  for (const json& f : features_of(doc, path)) {
    const json props = f.value("properties", json::object());
    Detection d;
    d.box = feature_box(f);
    d.score = props.value("score", 1.0);
    d.tile_id = props.value("tile_id", std::string{});
    if (!has_positive_area(d.box) || !(d.score >= 0.0 && d.score <= 1.0)) {
      throw ValidationError(fmt::format("{}: detection #{} has a zero-area box or a score outside [0, 1]",
                                        path.string(), index));
    }
    out.items.push_back(std::move(d));
    ++index;
  }
  return out;
}

void write_detections(const std::filesystem::path& path, const std::string& crs,
                      const std::vector<Detection>& detections) {
  json features = json::array();
  for (const Detection& d : detections) {
    features.push_back({{"type", "Feature"},
                        {"properties", {{"score", d.score}, {"tile_id", d.tile_id}}},
                        {"geometry", box_geometry(d.box)}});
  }
  write_text_file(path, dump(collection(crs, std::move(features))));
}

}  // namespace crownbench
