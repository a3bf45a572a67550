#include "crownbench/datamodel.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "crownbench/geojson.hpp"
#include "crownbench/raster_io.hpp"

namespace crownbench {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw ValidationError(fmt::format("unknown split '{}' (expected train, valid or test)", s));
}

void RasterMeta::validate() const {
  if (width <= 0 || height <= 0) {
    throw ValidationError(fmt::format("raster '{}' has invalid size {}x{}", raster_id, width, height));
  }
  if (!transform.invertible()) {
    throw ValidationError(fmt::format("raster '{}' has a singular geotransform", raster_id));
  }
  const double gx = gsd_x(transform), gy = gsd_y(transform);
  if (!(gx > 0.0) || std::abs(gx - gy) > 1e-6 * std::max(gx, gy)) {
    throw ValidationError(fmt::format(
        "raster '{}' has non-square pixels ({} x {}); resample it first", raster_id, gx, gy));
  }
}

namespace {

Ring open_ring(const Ring& ring) {
  Ring r = ring;
  if (r.size() > 1 && r.front() == r.back()) r.pop_back();
  return r;
}

double signed_area(const Ring& r) {
  double s = 0.0;
  for (std::size_t i = 0, n = r.size(); i < n; ++i) {
    const auto& p = r[i];
    const auto& q = r[(i + 1) % n];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

// Sutherland-Hodgman against the four half-planes of an axis-aligned box.
// The output may contain zero-width slivers for concave input but its area is
// exact.
Ring clip_to_box(const Ring& ring, const GeoBox& box) {
  Ring poly = open_ring(ring);
  auto clip = [&](auto inside, auto cross) {
    if (poly.empty()) return;
    Ring out;
    out.reserve(poly.size() + 4);
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
      const Eigen::Vector2d& cur = poly[i];
      const Eigen::Vector2d& prev = poly[(i + n - 1) % n];
      const bool in_cur = inside(cur), in_prev = inside(prev);
      if (in_cur) {
        if (!in_prev) out.push_back(cross(prev, cur));
        out.push_back(cur);
      } else if (in_prev) {
        out.push_back(cross(prev, cur));
      }
    }
    poly = std::move(out);
  };
  auto at_x = [](double x) {
    return [x](const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
      const double t = (x - p.x()) / (q.x() - p.x());
      return Eigen::Vector2d(x, p.y() + t * (q.y() - p.y()));
    };
  };
  auto at_y = [](double y) {
    return [y](const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
      const double t = (y - p.y()) / (q.y() - p.y());
      return Eigen::Vector2d(p.x() + t * (q.x() - p.x()), y);
    };
  };
  clip([&](const Eigen::Vector2d& p) { return p.x() >= box.min_x; }, at_x(box.min_x));
  clip([&](const Eigen::Vector2d& p) { return p.x() <= box.max_x; }, at_x(box.max_x));
  clip([&](const Eigen::Vector2d& p) { return p.y() >= box.min_y; }, at_y(box.min_y));
  clip([&](const Eigen::Vector2d& p) { return p.y() <= box.max_y; }, at_y(box.max_y));
  return poly;
}

bool ring_contains(const Ring& ring, double x, double y) {
  bool inside = false;
  const Ring r = open_ring(ring);
  for (std::size_t i = 0, j = r.size() - 1, n = r.size(); i < n; j = i++) {
    const auto& a = r[i];
    const auto& b = r[j];
    if ((a.y() > y) != (b.y() > y)) {
      const double xc = a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (x < xc) inside = !inside;
    }
  }
  return inside;
}

bool on_boundary(const Ring& ring, const Eigen::Vector2d& p) {
  const Ring r = open_ring(ring);
  for (std::size_t i = 0, n = r.size(); i < n; ++i) {
    const Eigen::Vector2d a = r[i], b = r[(i + 1) % n];
    const Eigen::Vector2d ab = b - a, ap = p - a;
    const double cross = ab.x() * ap.y() - ab.y() * ap.x();
    const double scale = std::max(1.0, ab.norm() * ap.norm());
    if (std::abs(cross) <= 1e-12 * scale && ap.dot(ab) >= 0.0 && ap.dot(ab) <= ab.squaredNorm()) {
      return true;
    }
  }
  return false;
}

}  // namespace

double ring_area(const Ring& ring) { return std::abs(signed_area(open_ring(ring))); }

double overlap_area(const GeoBox& box, const Polygon& poly) {
  if (poly.exterior.size() < 3 || !has_positive_area(box)) return 0.0;
  if (intersection_area(box, envelope(poly)) <= 0.0) return 0.0;
  double area = std::abs(signed_area(clip_to_box(poly.exterior, box)));
  for (const Ring& hole : poly.holes) area -= std::abs(signed_area(clip_to_box(hole, box)));
  return std::max(area, 0.0);
}

double overlap_area(const GeoBox& box, const AOI& aoi) {
  double total = 0.0;
  for (const Polygon& p : aoi.polygons) total += overlap_area(box, p);
  return total;
}

bool contains(const Polygon& poly, double x, double y) {
  if (poly.exterior.size() < 3 || !ring_contains(poly.exterior, x, y)) return false;
  return std::none_of(poly.holes.begin(), poly.holes.end(),
                      [&](const Ring& h) { return h.size() >= 3 && ring_contains(h, x, y); });
}

bool contains(const AOI& aoi, double x, double y) {
  return std::any_of(aoi.polygons.begin(), aoi.polygons.end(),
                     [&](const Polygon& p) { return contains(p, x, y); });
}

GeoBox envelope(const Polygon& poly) {
  if (poly.exterior.empty()) return {};
  GeoBox b{poly.exterior.front().x(), poly.exterior.front().y(), poly.exterior.front().x(),
           poly.exterior.front().y()};
  for (const auto& p : poly.exterior) {
    b.min_x = std::min(b.min_x, p.x());
    b.min_y = std::min(b.min_y, p.y());
    b.max_x = std::max(b.max_x, p.x());
    b.max_y = std::max(b.max_y, p.y());
  }
  return b;
}

std::optional<Split> assign_split(const Annotation& a, const std::vector<AOI>& aois) {
  std::array<double, 3> overlap{};
  for (const AOI& aoi : aois) overlap[static_cast<int>(aoi.split)] += overlap_area(a.box, aoi);
  // Strict > keeps the earlier split on ties: train, valid, test.
  std::optional<Split> best;
  double best_area = 0.0;
  for (Split s : {Split::train, Split::valid, Split::test}) {
    if (overlap[static_cast<int>(s)] > best_area) {
      best_area = overlap[static_cast<int>(s)];
      best = s;
    }
  }
  return best;
}

void validate_aoi(const AOI& aoi) {
  auto check_ring = [&](const Ring& r, const char* what) {
    if (r.size() < 4 || r.front() != r.back()) {
      throw ValidationError(fmt::format("{} AOI: {} ring is not closed or has fewer than 4 vertices",
                                        to_string(aoi.split), what));
    }
  };
  for (const Polygon& p : aoi.polygons) {
    check_ring(p.exterior, "exterior");
    for (const Ring& h : p.holes) {
      check_ring(h, "hole");
      for (const auto& v : h) {
        if (!ring_contains(p.exterior, v.x(), v.y()) && !on_boundary(p.exterior, v)) {
          throw ValidationError(fmt::format("{} AOI: hole vertex ({}, {}) lies outside its exterior ring",
                                            to_string(aoi.split), v.x(), v.y()));
        }
      }
    }
  }
}

SceneBundle load_scene(const std::string& raster_path, const std::string& annotations_path,
                       const std::vector<std::string>& aoi_paths) {
  GeoRaster raster = read_raster(raster_path);
  raster.meta.validate();

  SceneBundle scene;
  scene.raster = raster.meta;
  scene.pixels = std::make_shared<const Image>(std::move(raster.image));

  auto check_crs = [&](const std::string& crs, const std::string& path) {
    if (crs != scene.raster.crs) {
      throw ValidationError(fmt::format("CRS mismatch: raster '{}' is in '{}' but '{}' is in '{}'",
                                        raster_path, scene.raster.crs, path, crs));
    }
  };

  if (!annotations_path.empty()) {
    auto anns = read_annotations(annotations_path, scene.raster.raster_id);
    check_crs(anns.crs, annotations_path);
    const GeoBox extent = scene.raster.extent();
    std::vector<std::int64_t> outside;
    std::set<std::int64_t> seen;
    std::vector<std::int64_t> duplicates;
    for (const Annotation& a : anns.items) {
      if (intersection_area(a.box, extent) <= 0.0) outside.push_back(a.ann_id);
      if (!seen.insert(a.ann_id).second) duplicates.push_back(a.ann_id);
    }
    if (!duplicates.empty()) {
      throw ValidationError(fmt::format("{}: duplicate ann_id values: {}", annotations_path,
                                        fmt::join(duplicates, ", ")));
    }
    if (!outside.empty()) {
      throw ValidationError(fmt::format("{}: annotations outside the raster extent: {}",
                                        annotations_path, fmt::join(outside, ", ")));
    }
    scene.annotations = std::move(anns.items);
  }

  for (const std::string& path : aoi_paths) {
    auto aois = read_aois(path);
    check_crs(aois.crs, path);
    for (AOI& aoi : aois.items) {
      validate_aoi(aoi);
      scene.aois.push_back(std::move(aoi));
    }
  }
  return scene;
}

}  // namespace crownbench
