#include "crownbench/scaleplan.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "crownbench/errors.hpp"

namespace crownbench {

void AugPlan::validate() const {
  if (!(native_gsd > 0.0)) throw ValidationError("native GSD must be positive");
  if (tile_size_px <= 0) throw ValidationError("tile size must be positive");
  if (!(0 < crop_min_px && crop_min_px <= crop_max_px && crop_max_px <= tile_size_px)) {
    throw ValidationError(fmt::format("crop range [{}, {}] must satisfy 0 < min <= max <= tile size {}",
                                      crop_min_px, crop_max_px, tile_size_px));
  }
  if (!(0 < resize_min_px && resize_min_px <= resize_max_px)) {
    throw ValidationError(fmt::format("resize range [{}, {}] must satisfy 0 < min <= max", resize_min_px,
                                      resize_max_px));
  }
}

ExtentRange effective_extent_range(const AugPlan& plan) {
  plan.validate();
  ExtentRange r;
  r.crop = {static_cast<double>(plan.crop_min_px) * plan.native_gsd,
            static_cast<double>(plan.crop_max_px) * plan.native_gsd};
  if (plan.fallback) r.fallback = static_cast<double>(plan.tile_size_px) * plan.native_gsd;
  return r;
}

Interval effective_gsd_range(const AugPlan& plan) {
  plan.validate();
  const long largest = plan.fallback ? std::max(plan.crop_max_px, plan.tile_size_px) : plan.crop_max_px;
  return {plan.native_gsd * static_cast<double>(plan.crop_min_px) / static_cast<double>(plan.resize_max_px),
          plan.native_gsd * static_cast<double>(largest) / static_cast<double>(plan.resize_min_px)};
}

std::string format_one_decimal(double v) {
  std::string s = fmt::format("{:.1f}", std::round(v * 10.0) / 10.0);
  if (s.size() > 2 && s.ends_with(".0")) s.resize(s.size() - 2);
  if (s == "-0") s = "0";
  return s;
}

std::string format_extent(const ExtentRange& r) {
  std::string s = fmt::format("[{}, {}]", format_one_decimal(r.crop.min), format_one_decimal(r.crop.max));
  // Fallback equal to the crop maximum adds nothing.
  if (r.fallback && format_one_decimal(*r.fallback) != format_one_decimal(r.crop.max)) {
    s += fmt::format("∪{{{}}}", format_one_decimal(*r.fallback));
  }
  return s;
}

std::string format_gsd_cm(const Interval& r) {
  return fmt::format("[{}, {}]", format_one_decimal(r.min * 100.0), format_one_decimal(r.max * 100.0));
}

}  // namespace crownbench
