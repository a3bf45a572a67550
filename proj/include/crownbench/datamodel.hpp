#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crownbench/geometry.hpp"
#include "crownbench/image.hpp"

namespace crownbench {

enum class Split { train, valid, test };

std::string_view to_string(Split s);
/// Throws ValidationError on anything other than train/valid/test.
Split parse_split(std::string_view s);

struct RasterMeta {
  std::string raster_id;
  std::int64_t width = 0;
  std::int64_t height = 0;
  AffineTransform transform;
  std::string crs;

  double gsd() const { return gsd_x(transform); }
  GeoBox extent() const { return pixel_to_world(PixelBox{0, 0, width, height}, transform); }
  double hectares() const { return static_cast<double>(width * height) * gsd() * gsd() / 1e4; }

  /// Throws ValidationError when dimensions, GSD or transform are unusable.
  void validate() const;
};

using Ring = std::vector<Eigen::Vector2d>;

/// Exterior ring plus hole rings, world coordinates, closed rings.
struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;
};

struct AOI {
  Split split = Split::train;
  std::vector<Polygon> polygons;
};

struct Annotation {
  std::int64_t ann_id = 0;
  GeoBox box;
  std::string raster_id;
};

struct Detection {
  GeoBox box;
  double score = 0.0;
  std::string tile_id;
};

struct SceneBundle {
  RasterMeta raster;
  std::vector<AOI> aois;
  std::vector<Annotation> annotations;
  std::shared_ptr<const Image> pixels;
};

// Polygon helpers. Rings may be given open or closed.

/// Shoelace area, always non-negative.
double ring_area(const Ring& ring);

/// Area of the part of `box` covered by the polygon minus its holes.
double overlap_area(const GeoBox& box, const Polygon& poly);
double overlap_area(const GeoBox& box, const AOI& aoi);

/// Even-odd containment with hole subtraction.
bool contains(const Polygon& poly, double x, double y);
bool contains(const AOI& aoi, double x, double y);

GeoBox envelope(const Polygon& poly);

/// Split of the AOIs with the largest overlap with `a.box`; ties go to
/// train, then valid, then test. Empty when nothing overlaps.
std::optional<Split> assign_split(const Annotation& a, const std::vector<AOI>& aois);

/// Checks closure and hole containment; throws ValidationError.
void validate_aoi(const AOI& aoi);

/// Loads raster metadata + pixels, annotations and AOIs and checks that every
/// CRS string agrees. `aoi_paths` may be empty.
SceneBundle load_scene(const std::string& raster_path, const std::string& annotations_path,
                       const std::vector<std::string>& aoi_paths);

}  // namespace crownbench
