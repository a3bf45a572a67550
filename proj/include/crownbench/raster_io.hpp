#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "crownbench/datamodel.hpp"
#include "crownbench/image.hpp"

namespace crownbench {

struct GeoRaster {
  RasterMeta meta;
  Image image;
};

enum class TiffCompression { none, deflate };

struct TiffWriteOptions {
  TiffCompression compression = TiffCompression::deflate;
  /// Square tiles of this side (a multiple of 16) instead of strips when > 0.
  std::uint32_t tile_side = 0;
  /// One plane per band instead of interleaved samples.
  bool planar = false;
};

/// Reads 8-bit, 3 or 4 band GeoTIFFs (strip or tile layout, contiguous or
/// planar). Georeference comes from ModelPixelScale+ModelTiepoint or
/// ModelTransformation, the CRS from the GeoKey directory. raster_id is the
/// file stem.
GeoRaster read_geotiff(const std::filesystem::path& path);

void write_geotiff(const std::filesystem::path& path, const Image& image,
                   const AffineTransform& transform, const std::string& crs,
                   const TiffWriteOptions& opts = {});

/// `scene.png` -> `scene.geo.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& png_path);

/// PNG pixels plus a JSON sidecar holding {"crs", "transform": [a..f]}.
GeoRaster read_png_sidecar(const std::filesystem::path& png_path);
void write_png_sidecar(const std::filesystem::path& png_path, const Image& image,
                       const AffineTransform& transform, const std::string& crs);

/// Dispatches on extension: .tif/.tiff or .png.
GeoRaster read_raster(const std::filesystem::path& path);

}  // namespace crownbench
