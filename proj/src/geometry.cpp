#include "crownbench/geometry.hpp"

#include <cmath>

namespace crownbench {

AffineTransform AffineTransform::inverse() const {
  if (!invertible()) throw DomainError("affine transform is not invertible");
  const double det = determinant();
  const double ia = e() / det, ib = -b() / det;
  const double id = -d() / det, ie = a() / det;
  return {ia, ib, -(ia * c() + ib * f()), id, ie, -(id * c() + ie * f())};
}

Box<double> world_to_pixel_exact(const GeoBox& g, const AffineTransform& t) {
  if (!t.invertible()) throw DomainError("world_to_pixel: transform is not invertible");
  return pixel_to_world(g, t.inverse());
}

PixelBox world_to_pixel(const GeoBox& g, const AffineTransform& t) {
  const Box<double> p = world_to_pixel_exact(g, t);
  // std::round is half-away-from-zero.
  const PixelBox out{static_cast<std::int64_t>(std::round(p.min_x)),
                     static_cast<std::int64_t>(std::round(p.min_y)),
                     static_cast<std::int64_t>(std::round(p.max_x)),
                     static_cast<std::int64_t>(std::round(p.max_y))};
  if (out.min_x < 0 || out.min_y < 0) {
    throw DomainError("world_to_pixel: box maps to negative pixel indices");
  }
  return out;
}

}  // namespace crownbench
