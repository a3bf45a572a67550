#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crownbench/datamodel.hpp"

namespace crownbench {

template <typename T>
struct CrsTagged {
  std::string crs;
  std::vector<T> items;
};

/// FeatureCollection of box polygons with {"ann_id": int}. The CRS is taken
/// from the legacy "crs" member ({"type":"name","properties":{"name":...}}).
/// Zero-area or non-polygon features raise one ValidationError listing every
/// offending ann_id.
CrsTagged<Annotation> read_annotations(const std::filesystem::path& path,
                                       const std::string& raster_id = {});
void write_annotations(const std::filesystem::path& path, const std::string& crs,
                       const std::vector<Annotation>& annotations);

/// Features with {"split": ...}; one AOI per feature. MultiPolygon accepted.
CrsTagged<AOI> read_aois(const std::filesystem::path& path);
void write_aois(const std::filesystem::path& path, const std::string& crs,
                const std::vector<AOI>& aois);

/// Raster-level detections, properties {"score", "tile_id"}.
CrsTagged<Detection> read_detections(const std::filesystem::path& path);
void write_detections(const std::filesystem::path& path, const std::string& crs,
                      const std::vector<Detection>& detections);

/// Reads a whole file; IoError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for CLI use (truncate + write); IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace crownbench
