#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace crownbench {

/// One 8-bit band, row-major so rows map directly onto scanlines.
using Plane = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit RGB or RGBA raster held as separate planes.
struct Image {
  std::vector<Plane> bands;

  Image() = default;
  Image(Eigen::Index width, Eigen::Index height, int n_bands, std::uint8_t fill = 0)
      : bands(n_bands, Plane::Constant(height, width, fill)) {}

  Eigen::Index width() const { return bands.empty() ? 0 : bands.front().cols(); }
  Eigen::Index height() const { return bands.empty() ? 0 : bands.front().rows(); }
  int band_count() const { return static_cast<int>(bands.size()); }
  bool has_alpha() const { return bands.size() == 4; }

  Image crop(Eigen::Index col, Eigen::Index row, Eigen::Index w, Eigen::Index h) const {
    Image out;
    out.bands.reserve(bands.size());
    for (const auto& b : bands) out.bands.emplace_back(b.block(row, col, h, w));
    return out;
  }

  friend bool operator==(const Image& l, const Image& r) {
    if (l.bands.size() != r.bands.size()) return false;
    for (std::size_t i = 0; i < l.bands.size(); ++i) {
      if (l.bands[i].rows() != r.bands[i].rows() || l.bands[i].cols() != r.bands[i].cols() ||
          !(l.bands[i] == r.bands[i]).all())
        return false;
    }
    return true;
  }
};

/// Bilinear resample to `new_width` x `new_height` sampling pixel centers.
Image resample_bilinear(const Image& src, Eigen::Index new_width, Eigen::Index new_height);

}  // namespace crownbench
