#include "crownbench/image.hpp"

#include <algorithm>
#include <cmath>

#include "crownbench/errors.hpp"

namespace crownbench {

Image resample_bilinear(const Image& src, Eigen::Index new_width, Eigen::Index new_height) {
  if (new_width <= 0 || new_height <= 0) throw ValidationError("resample: target size must be positive");
  const Eigen::Index sw = src.width(), sh = src.height();
  if (sw == new_width && sh == new_height) return src;
  Image dst(new_width, new_height, src.band_count());
  const double fx = static_cast<double>(sw) / static_cast<double>(new_width);
  const double fy = static_cast<double>(sh) / static_cast<double>(new_height);

  // Precompute column taps once; rows are handled in the loop.
  std::vector<Eigen::Index> x0(new_width), x1(new_width);
  std::vector<double> wx(new_width);
  for (Eigen::Index x = 0; x < new_width; ++x) {
    const double sx = std::clamp((static_cast<double>(x) + 0.5) * fx - 0.5, 0.0, static_cast<double>(sw - 1));
    x0[x] = static_cast<Eigen::Index>(std::floor(sx));
    x1[x] = std::min(x0[x] + 1, sw - 1);
    wx[x] = sx - static_cast<double>(x0[x]);
  }
  for (Eigen::Index y = 0; y < new_height; ++y) {
    const double sy = std::clamp((static_cast<double>(y) + 0.5) * fy - 0.5, 0.0, static_cast<double>(sh - 1));
    const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(sy));
    const Eigen::Index y1 = std::min(y0 + 1, sh - 1);
    const double wy = sy - static_cast<double>(y0);
    for (int b = 0; b < src.band_count(); ++b) {
      const Plane& s = src.bands[b];
      Plane& d = dst.bands[b];
      for (Eigen::Index x = 0; x < new_width; ++x) {
        const double top = s(y0, x0[x]) * (1.0 - wx[x]) + s(y0, x1[x]) * wx[x];
        const double bottom = s(y1, x0[x]) * (1.0 - wx[x]) + s(y1, x1[x]) * wx[x];
        d(y, x) = static_cast<std::uint8_t>(std::lround(top * (1.0 - wy) + bottom * wy));
      }
    }
  }
  return dst;
}

}  // namespace crownbench
