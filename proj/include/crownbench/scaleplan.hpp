#pragma once

#include <optional>
#include <string>

namespace crownbench {

/// Random crop then random resize of square training tiles.
struct AugPlan {
  double native_gsd = 0.0;  // m/px
  long tile_size_px = 0;
  long crop_min_px = 0;
  long crop_max_px = 0;
  long resize_min_px = 0;
  long resize_max_px = 0;
  /// When the crop is skipped the full tile is resized.
  bool fallback = true;

  void validate() const;
};

struct Interval {
  double min = 0.0;
  double max = 0.0;
};

struct ExtentRange {
  Interval crop;                   // meters
  std::optional<double> fallback;  // meters, full-tile extent
};

ExtentRange effective_extent_range(const AugPlan& plan);

/// m/px. Smallest crop upsampled to the largest size gives the minimum;
/// largest crop (or the full tile under fallback) at the smallest size the
/// maximum.
Interval effective_gsd_range(const AugPlan& plan);

/// "[30, 120]∪{160}": meters rounded to one decimal, trailing ".0" dropped.
std::string format_extent(const ExtentRange& r);
/// "[1.7, 15.6]" in cm/px.
std::string format_gsd_cm(const Interval& r);

/// Rounds to one decimal and prints without a trailing ".0".
std::string format_one_decimal(double v);

}  // namespace crownbench
