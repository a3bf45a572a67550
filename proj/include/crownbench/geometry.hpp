#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>

#include "crownbench/errors.hpp"

namespace crownbench {

/// Axis-aligned box. `Scalar` is double for world and fractional pixel
/// coordinates, an integer type for pixel windows.
template <typename Scalar>
struct Box {
  Scalar min_x{};
  Scalar min_y{};
  Scalar max_x{};
  Scalar max_y{};

  constexpr Scalar width() const { return max_x - min_x; }
  constexpr Scalar height() const { return max_y - min_y; }
  constexpr bool valid() const { return min_x <= max_x && min_y <= max_y; }

  double area() const {
    return static_cast<double>(width()) * static_cast<double>(height());
  }

  template <typename Other>
  Box<Other> cast() const {
    return {static_cast<Other>(min_x), static_cast<Other>(min_y),
            static_cast<Other>(max_x), static_cast<Other>(max_y)};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

/// World-space box in the raster CRS units.
using GeoBox = Box<double>;

/// Integer pixel window; (col_min,row_min) inclusive corner, (col_max,row_max)
/// the exclusive pixel edge. Row 0 is the top of the raster.
using PixelBox = Box<std::int64_t>;

template <typename Scalar>
std::ostream& operator<<(std::ostream& os, const Box<Scalar>& b) {
  return os << '(' << b.min_x << ", " << b.min_y << ", " << b.max_x << ", "
            << b.max_y << ')';
}

/// Overlap of two boxes, or an inverted box when they are disjoint; check
/// valid() before use.
template <typename Scalar>
constexpr Box<Scalar> intersection(const Box<Scalar>& a, const Box<Scalar>& b) {
  return {std::max(a.min_x, b.min_x), std::max(a.min_y, b.min_y),
          std::min(a.max_x, b.max_x), std::min(a.max_y, b.max_y)};
}

template <typename Scalar>
double intersection_area(const Box<Scalar>& a, const Box<Scalar>& b) {
  const double w = static_cast<double>(std::min(a.max_x, b.max_x)) -
                   static_cast<double>(std::max(a.min_x, b.min_x));
  const double h = static_cast<double>(std::min(a.max_y, b.max_y)) -
                   static_cast<double>(std::max(a.min_y, b.min_y));
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

template <typename Scalar>
bool has_positive_area(const Box<Scalar>& b) {
  return b.max_x > b.min_x && b.max_y > b.min_y;
}

/// Intersection over union. Throws DomainError on a zero-area operand.
template <typename Scalar>
double iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  if (!has_positive_area(a) || !has_positive_area(b)) {
    throw DomainError("iou: operand box has zero area");
  }
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  if (a == b) return 1.0;
  return inter / (a.area() + b.area() - inter);
}

/// Six-coefficient affine georeference:
///   x = a*col + b*row + c
///   y = d*col + e*row + f
/// stored as a 2x3 matrix [[a b c] [d e f]].
class AffineTransform {
 public:
  using Matrix = Eigen::Matrix<double, 2, 3>;

  AffineTransform() { coeffs_ << 1, 0, 0, 0, 1, 0; }
  AffineTransform(double a, double b, double c, double d, double e, double f) {
    coeffs_ << a, b, c, d, e, f;
  }
  explicit AffineTransform(const Matrix& m) : coeffs_(m) {}

  /// North-up transform anchored at the world coordinate of the top-left
  /// pixel corner.
  static AffineTransform north_up(double origin_x, double origin_y, double gsd) {
    return {gsd, 0.0, origin_x, 0.0, -gsd, origin_y};
  }

  double a() const { return coeffs_(0, 0); }
  double b() const { return coeffs_(0, 1); }
  double c() const { return coeffs_(0, 2); }
  double d() const { return coeffs_(1, 0); }
  double e() const { return coeffs_(1, 1); }
  double f() const { return coeffs_(1, 2); }
  const Matrix& matrix() const { return coeffs_; }

  double determinant() const { return a() * e() - b() * d(); }
  bool invertible() const { return determinant() != 0.0 && std::isfinite(determinant()); }
  bool north_up() const { return b() == 0.0 && d() == 0.0 && a() > 0.0 && e() < 0.0; }

  Eigen::Vector2d apply(double col, double row) const {
    return coeffs_.leftCols<2>() * Eigen::Vector2d(col, row) + coeffs_.col(2);
  }

  /// Throws DomainError if singular.
  AffineTransform inverse() const;

  /// Transform of a sub-window whose top-left pixel is (col, row) in this grid.
  AffineTransform shifted(double col, double row) const {
    Matrix m = coeffs_;
    m.col(2) = apply(col, row);
    return AffineTransform(m);
  }

  /// Same footprint sampled at `factor` times the pixel size.
  AffineTransform rescaled(double factor) const {
    Matrix m = coeffs_;
    m.leftCols<2>() *= factor;
    return AffineTransform(m);
  }

  friend bool operator==(const AffineTransform& l, const AffineTransform& r) {
    return l.coeffs_ == r.coeffs_;
  }

 private:
  Matrix coeffs_;
};

/// Envelope of the four transformed corners of a pixel-space box. Exact for
/// north-up transforms.
template <typename Scalar>
GeoBox pixel_to_world(const Box<Scalar>& p, const AffineTransform& t) {
  if (!t.invertible()) throw DomainError("pixel_to_world: transform is not invertible");
  const double x0 = static_cast<double>(p.min_x), y0 = static_cast<double>(p.min_y);
  const double x1 = static_cast<double>(p.max_x), y1 = static_cast<double>(p.max_y);
  Eigen::Matrix<double, 2, 4> corners;
  corners.col(0) = t.apply(x0, y0);
  corners.col(1) = t.apply(x1, y0);
  corners.col(2) = t.apply(x0, y1);
  corners.col(3) = t.apply(x1, y1);
  const Eigen::Vector2d lo = corners.rowwise().minCoeff();
  const Eigen::Vector2d hi = corners.rowwise().maxCoeff();
  return {lo.x(), lo.y(), hi.x(), hi.y()};
}

/// Fractional pixel-space envelope of a world box (no rounding).
Box<double> world_to_pixel_exact(const GeoBox& g, const AffineTransform& t);

/// Inverse of pixel_to_world with half-away-from-zero rounding. Does not clamp;
/// throws DomainError when the result has a negative index.
PixelBox world_to_pixel(const GeoBox& g, const AffineTransform& t);

/// Ground sampling distance along columns (|a| for north-up rasters).
inline double gsd_x(const AffineTransform& t) { return std::hypot(t.a(), t.d()); }
inline double gsd_y(const AffineTransform& t) { return std::hypot(t.b(), t.e()); }

}  // namespace crownbench
