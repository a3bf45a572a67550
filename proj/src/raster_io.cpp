#include "crownbench/raster_io.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cstdarg>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>

#include "crownbench/geojson.hpp"

namespace crownbench {

namespace {

constexpr ttag_t kModelPixelScale = 33550;
constexpr ttag_t kModelTiepoint = 33922;
constexpr ttag_t kModelTransformation = 34264;
constexpr ttag_t kGeoKeyDirectory = 34735;
constexpr ttag_t kGeoDoubleParams = 34736;
constexpr ttag_t kGeoAsciiParams = 34737;

constexpr std::uint16_t kGTModelType = 1024;
constexpr std::uint16_t kGTRasterType = 1025;
constexpr std::uint16_t kGTCitation = 1026;
constexpr std::uint16_t kGeographicType = 2048;
constexpr std::uint16_t kProjectedCSType = 3072;
constexpr std::uint16_t kUserDefined = 32767;
constexpr std::uint16_t kRasterPixelIsPoint = 2;

char kScaleName[] = "ModelPixelScaleTag";
char kTiepointName[] = "ModelTiepointTag";
char kTransformName[] = "ModelTransformationTag";
char kKeyDirName[] = "GeoKeyDirectoryTag";
char kDoubleName[] = "GeoDoubleParamsTag";
char kAsciiName[] = "GeoAsciiParamsTag";

const TIFFFieldInfo kGeoFields[] = {
    {kModelPixelScale, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1, kScaleName},
    {kModelTiepoint, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1, kTiepointName},
    {kModelTransformation, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1, kTransformName},
    {kGeoKeyDirectory, -1, -1, TIFF_SHORT, FIELD_CUSTOM, 1, 1, kKeyDirName},
    {kGeoDoubleParams, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1, kDoubleName},
    {kGeoAsciiParams, -1, -1, TIFF_ASCII, FIELD_CUSTOM, 1, 0, kAsciiName},
};

TIFFExtendProc g_parent_extender = nullptr;

void geotiff_extender(TIFF* tif) {
  TIFFMergeFieldInfo(tif, kGeoFields, sizeof(kGeoFields) / sizeof(kGeoFields[0]));
  if (g_parent_extender) g_parent_extender(tif);
}

thread_local std::string g_tiff_error;

void tiff_error_handler(const char* module, const char* fmt, va_list ap) {
  char buf[1024];
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  g_tiff_error = module ? fmt::format("{}: {}", module, buf) : std::string(buf);
}

void tiff_warning_handler(const char*, const char*, va_list) {}

void init_libtiff() {
  static std::once_flag once;
  std::call_once(once, [] {
    g_parent_extender = TIFFSetTagExtender(geotiff_extender);
    TIFFSetErrorHandler(tiff_error_handler);
    TIFFSetWarningHandler(tiff_warning_handler);
  });
}

struct TiffCloser {
  void operator()(TIFF* t) const { TIFFClose(t); }
};
using TiffPtr = std::unique_ptr<TIFF, TiffCloser>;

TiffPtr open_tiff(const std::filesystem::path& path, const char* mode) {
  init_libtiff();
  g_tiff_error.clear();
  TIFF* t = TIFFOpen(path.string().c_str(), mode);
  if (!t) {
    throw IoError(fmt::format("cannot open TIFF '{}': {}", path.string(),
                              g_tiff_error.empty() ? "unknown error" : g_tiff_error));
  }
  return TiffPtr(t);
}

template <typename T>
std::vector<T> get_array(TIFF* tif, ttag_t tag) {
  std::uint16_t count = 0;
  T* data = nullptr;
  if (!TIFFGetField(tif, tag, &count, &data) || !data) return {};
  return std::vector<T>(data, data + count);
}

std::string crs_from_geokeys(TIFF* tif) {
  const auto keys = get_array<std::uint16_t>(tif, kGeoKeyDirectory);
  if (keys.size() < 4) return {};
  char* ascii = nullptr;
  std::string ascii_params;
  if (TIFFGetField(tif, kGeoAsciiParams, &ascii) && ascii) ascii_params = ascii;

  std::optional<std::uint16_t> projected, geographic;
  std::string citation;
  const std::size_t n = keys[3];
  for (std::size_t i = 0; i < n && 4 + 4 * i + 3 < keys.size(); ++i) {
    const std::uint16_t id = keys[4 + 4 * i], loc = keys[5 + 4 * i];
    const std::uint16_t count = keys[6 + 4 * i], value = keys[7 + 4 * i];
    if (loc == 0) {
      if (id == kProjectedCSType) projected = value;
      if (id == kGeographicType) geographic = value;
    } else if (loc == kGeoAsciiParams && id == kGTCitation && value + count <= ascii_params.size()) {
      citation = ascii_params.substr(value, count);
      if (!citation.empty() && citation.back() == '|') citation.pop_back();
    }
  }
  if (projected && *projected != kUserDefined) return fmt::format("EPSG:{}", *projected);
  if (geographic && *geographic != kUserDefined) return fmt::format("EPSG:{}", *geographic);
  return citation;
}

AffineTransform transform_from_tags(TIFF* tif, const std::filesystem::path& path, bool pixel_is_point) {
  AffineTransform t;
  const auto matrix = get_array<double>(tif, kModelTransformation);
  if (matrix.size() >= 16) {
    t = AffineTransform(matrix[0], matrix[1], matrix[3], matrix[4], matrix[5], matrix[7]);
  } else {
    const auto scale = get_array<double>(tif, kModelPixelScale);
    const auto tie = get_array<double>(tif, kModelTiepoint);
    if (scale.size() < 2 || tie.size() < 6) {
      throw ValidationError(fmt::format("'{}' carries no georeference tags", path.string()));
    }
    t = AffineTransform(scale[0], 0.0, tie[3] - tie[0] * scale[0], 0.0, -scale[1],
                        tie[4] + tie[1] * scale[1]);
  }
  // PixelIsPoint places the reference on the pixel center.
  if (pixel_is_point) t = t.shifted(-0.5, -0.5);
  return t;
}

bool is_pixel_is_point(TIFF* tif) {
  const auto keys = get_array<std::uint16_t>(tif, kGeoKeyDirectory);
  if (keys.size() < 4) return false;
  for (std::size_t i = 0; i < keys[3] && 4 + 4 * i + 3 < keys.size(); ++i) {
    if (keys[4 + 4 * i] == kGTRasterType && keys[5 + 4 * i] == 0) {
      return keys[7 + 4 * i] == kRasterPixelIsPoint;
    }
  }
  return false;
}

}  // namespace

GeoRaster read_geotiff(const std::filesystem::path& path) {
  TiffPtr tif = open_tiff(path, "r");
  TIFF* t = tif.get();
  std::uint32_t width = 0, height = 0;
  std::uint16_t bits = 0, spp = 0, planar = PLANARCONFIG_CONTIG, format = SAMPLEFORMAT_UINT;
  TIFFGetField(t, TIFFTAG_IMAGEWIDTH, &width);
  TIFFGetField(t, TIFFTAG_IMAGELENGTH, &height);
  TIFFGetFieldDefaulted(t, TIFFTAG_BITSPERSAMPLE, &bits);
  TIFFGetFieldDefaulted(t, TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(t, TIFFTAG_PLANARCONFIG, &planar);
  TIFFGetFieldDefaulted(t, TIFFTAG_SAMPLEFORMAT, &format);
  if (bits != 8 || format != SAMPLEFORMAT_UINT) {
    throw ValidationError(fmt::format("'{}': only 8-bit unsigned samples are supported (got {} bits)",
                                      path.string(), bits));
  }
  if (spp != 3 && spp != 4) {
    throw ValidationError(fmt::format("'{}': expected 3 or 4 bands, got {}", path.string(), spp));
  }

  GeoRaster out;
  out.image = Image(width, height, spp);
  const bool separate = planar == PLANARCONFIG_SEPARATE;

  auto fail = [&](const char* what) {
    throw IoError(fmt::format("'{}': failed to read {}: {}", path.string(), what, g_tiff_error));
  };

  if (TIFFIsTiled(t)) {
    std::uint32_t tw = 0, th = 0;
    TIFFGetField(t, TIFFTAG_TILEWIDTH, &tw);
    TIFFGetField(t, TIFFTAG_TILELENGTH, &th);
    std::vector<std::uint8_t> buf(TIFFTileSize(t));
    const int passes = separate ? spp : 1;
    for (int s = 0; s < passes; ++s) {
      for (std::uint32_t ty = 0; ty < height; ty += th) {
        for (std::uint32_t tx = 0; tx < width; tx += tw) {
          if (TIFFReadTile(t, buf.data(), tx, ty, 0, static_cast<tsample_t>(s)) < 0) fail("tile");
          const std::uint32_t h = std::min(th, height - ty), w = std::min(tw, width - tx);
          for (std::uint32_t y = 0; y < h; ++y) {
            for (std::uint32_t x = 0; x < w; ++x) {
              if (separate) {
                out.image.bands[s](ty + y, tx + x) = buf[y * tw + x];
              } else {
                for (int b = 0; b < spp; ++b) out.image.bands[b](ty + y, tx + x) = buf[(y * tw + x) * spp + b];
              }
            }
          }
        }
      }
    }
  } else {
    std::vector<std::uint8_t> line(TIFFScanlineSize(t));
    if (separate) {
      for (int s = 0; s < spp; ++s) {
        for (std::uint32_t y = 0; y < height; ++y) {
          if (TIFFReadScanline(t, line.data(), y, static_cast<tsample_t>(s)) < 0) fail("scanline");
          std::memcpy(out.image.bands[s].row(y).data(), line.data(), width);
        }
      }
    } else {
      for (std::uint32_t y = 0; y < height; ++y) {
        if (TIFFReadScanline(t, line.data(), y, 0) < 0) fail("scanline");
        for (std::uint32_t x = 0; x < width; ++x) {
          for (int b = 0; b < spp; ++b) out.image.bands[b](y, x) = line[x * spp + b];
        }
      }
    }
  }

  out.meta.raster_id = path.stem().string();
  out.meta.width = width;
  out.meta.height = height;
  out.meta.transform = transform_from_tags(t, path, is_pixel_is_point(t));
  out.meta.crs = crs_from_geokeys(t);
  return out;
}

void write_geotiff(const std::filesystem::path& path, const Image& image,
                   const AffineTransform& transform, const std::string& crs,
                   const TiffWriteOptions& opts) {
  const int spp = image.band_count();
  if (spp != 3 && spp != 4) throw ValidationError("write_geotiff: image must have 3 or 4 bands");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  TiffPtr tif = open_tiff(path, "w");
  TIFF* t = tif.get();
  const auto width = static_cast<std::uint32_t>(image.width());
  const auto height = static_cast<std::uint32_t>(image.height());
  TIFFSetField(t, TIFFTAG_IMAGEWIDTH, width);
  TIFFSetField(t, TIFFTAG_IMAGELENGTH, height);
  TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, 8);
  TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, spp);
  TIFFSetField(t, TIFFTAG_SAMPLEFORMAT, SAMPLEFORMAT_UINT);
  TIFFSetField(t, TIFFTAG_PLANARCONFIG, opts.planar ? PLANARCONFIG_SEPARATE : PLANARCONFIG_CONTIG);
  TIFFSetField(t, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_RGB);
  TIFFSetField(t, TIFFTAG_COMPRESSION,
               opts.compression == TiffCompression::deflate ? COMPRESSION_ADOBE_DEFLATE : COMPRESSION_NONE);
  if (spp == 4) {
    std::uint16_t extra = EXTRASAMPLE_UNASSALPHA;
    TIFFSetField(t, TIFFTAG_EXTRASAMPLES, 1, &extra);
  }
  if (opts.tile_side > 0) {
    if (opts.tile_side % 16 != 0) throw ValidationError("write_geotiff: tile side must be a multiple of 16");
    TIFFSetField(t, TIFFTAG_TILEWIDTH, opts.tile_side);
    TIFFSetField(t, TIFFTAG_TILELENGTH, opts.tile_side);
  } else {
    TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, TIFFDefaultStripSize(t, 0));
  }

  if (transform.b() == 0.0 && transform.d() == 0.0) {
    double scale[3] = {transform.a(), -transform.e(), 0.0};
    double tie[6] = {0.0, 0.0, 0.0, transform.c(), transform.f(), 0.0};
    TIFFSetField(t, kModelPixelScale, 3, scale);
    TIFFSetField(t, kModelTiepoint, 6, tie);
  } else {
    double m[16] = {transform.a(), transform.b(), 0.0, transform.c(),
                    transform.d(), transform.e(), 0.0, transform.f(),
                    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
    TIFFSetField(t, kModelTransformation, 16, m);
  }

  std::vector<std::uint16_t> keys = {1, 1, 0, 0};
  std::string ascii;
  static const std::regex kEpsg(R"(EPSG:(\d+))");
  std::smatch m;
  if (std::regex_match(crs, m, kEpsg) && std::stoul(m[1]) < kUserDefined) {
    const auto code = static_cast<std::uint16_t>(std::stoul(m[1]));
    const bool geographic = code >= 4000 && code < 5000;
    keys.insert(keys.end(), {kGTModelType, 0, 1, static_cast<std::uint16_t>(geographic ? 2 : 1)});
    keys.insert(keys.end(), {kGTRasterType, 0, 1, 1});
    keys.insert(keys.end(), {geographic ? kGeographicType : kProjectedCSType, 0, 1, code});
  } else if (!crs.empty()) {
    ascii = crs + "|";
    keys.insert(keys.end(), {kGTModelType, 0, 1, 1});
    keys.insert(keys.end(), {kGTRasterType, 0, 1, 1});
    keys.insert(keys.end(), {kGTCitation, static_cast<std::uint16_t>(kGeoAsciiParams),
                             static_cast<std::uint16_t>(ascii.size()), 0});
    keys.insert(keys.end(), {kProjectedCSType, 0, 1, kUserDefined});
  }
  keys[3] = static_cast<std::uint16_t>((keys.size() - 4) / 4);
  if (keys[3] > 0) {
    TIFFSetField(t, kGeoKeyDirectory, static_cast<std::uint16_t>(keys.size()), keys.data());
    if (!ascii.empty()) TIFFSetField(t, kGeoAsciiParams, ascii.c_str());
  }

  auto fail = [&](const char* what) {
    throw IoError(fmt::format("'{}': failed to write {}: {}", path.string(), what, g_tiff_error));
  };
  const int planes = opts.planar ? spp : 1;
  const int per_pixel = opts.planar ? 1 : spp;
  if (opts.tile_side > 0) {
    const std::uint32_t side = opts.tile_side;
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(side) * side * per_pixel);
    for (int plane = 0; plane < planes; ++plane) {
      for (std::uint32_t y0 = 0; y0 < height; y0 += side) {
        for (std::uint32_t x0 = 0; x0 < width; x0 += side) {
          std::fill(buf.begin(), buf.end(), std::uint8_t{0});
          for (std::uint32_t y = y0; y < std::min(height, y0 + side); ++y) {
            for (std::uint32_t x = x0; x < std::min(width, x0 + side); ++x) {
              const std::size_t at = (static_cast<std::size_t>(y - y0) * side + (x - x0)) * per_pixel;
              for (int b = 0; b < per_pixel; ++b) buf[at + b] = image.bands[opts.planar ? plane : b](y, x);
            }
          }
          if (TIFFWriteTile(t, buf.data(), x0, y0, 0, static_cast<std::uint16_t>(plane)) < 0) fail("tile");
        }
      }
    }
    return;
  }
  std::vector<std::uint8_t> line(static_cast<std::size_t>(width) * per_pixel);
  for (int plane = 0; plane < planes; ++plane) {
    for (std::uint32_t y = 0; y < height; ++y) {
      for (std::uint32_t x = 0; x < width; ++x) {
        for (int b = 0; b < per_pixel; ++b) line[x * per_pixel + b] = image.bands[opts.planar ? plane : b](y, x);
      }
      if (TIFFWriteScanline(t, line.data(), y, static_cast<std::uint16_t>(plane)) < 0) fail("scanline");
    }
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& png_path) {
  std::filesystem::path p = png_path;
  p.replace_extension(".geo.json");
  return p;
}

GeoRaster read_png_sidecar(const std::filesystem::path& png_path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, png_path.string().c_str())) {
    throw IoError(fmt::format("cannot read PNG '{}': {}", png_path.string(), png.message));
  }
  const bool alpha = (png.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  png.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  const int spp = alpha ? 4 : 3;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    throw IoError(fmt::format("cannot decode PNG '{}': {}", png_path.string(), png.message));
  }
  GeoRaster out;
  out.image = Image(png.width, png.height, spp);
  for (std::uint32_t y = 0; y < png.height; ++y) {
    for (std::uint32_t x = 0; x < png.width; ++x) {
      for (int b = 0; b < spp; ++b) out.image.bands[b](y, x) = buf[(static_cast<std::size_t>(y) * png.width + x) * spp + b];
    }
  }

  const auto side = sidecar_path(png_path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(side));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("{}: invalid sidecar: {}", side.string(), e.what()));
  }
  const auto coeffs = meta.at("transform").get<std::vector<double>>();
  if (coeffs.size() != 6) throw ValidationError(fmt::format("{}: transform needs 6 values", side.string()));
  out.meta.transform = AffineTransform(coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4], coeffs[5]);
  out.meta.crs = meta.value("crs", std::string{});
  out.meta.raster_id = meta.value("raster_id", png_path.stem().string());
  out.meta.width = png.width;
  out.meta.height = png.height;
  return out;
}

void write_png_sidecar(const std::filesystem::path& png_path, const Image& image,
                       const AffineTransform& transform, const std::string& crs) {
  const int spp = image.band_count();
  if (spp != 3 && spp != 4) throw ValidationError("write_png_sidecar: image must have 3 or 4 bands");
  if (png_path.has_parent_path()) std::filesystem::create_directories(png_path.parent_path());
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = spp == 4 ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  for (std::uint32_t y = 0; y < png.height; ++y) {
    for (std::uint32_t x = 0; x < png.width; ++x) {
      for (int b = 0; b < spp; ++b) buf[(static_cast<std::size_t>(y) * png.width + x) * spp + b] = image.bands[b](y, x);
    }
  }
  if (!png_image_write_to_file(&png, png_path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError(fmt::format("cannot write PNG '{}': {}", png_path.string(), png.message));
  }
  nlohmann::json meta{{"crs", crs},
                      {"raster_id", png_path.stem().string()},
                      {"transform", {transform.a(), transform.b(), transform.c(), transform.d(),
                                     transform.e(), transform.f()}}};
  write_text_file(sidecar_path(png_path), meta.dump(1) + "\n");
}

GeoRaster read_raster(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".tif" || ext == ".tiff") return read_geotiff(path);
  if (ext == ".png") return read_png_sidecar(path);
  throw ValidationError(fmt::format("'{}': unsupported raster format (expected .tif/.tiff or .png)",
                                    path.string()));
}

}  // namespace crownbench
