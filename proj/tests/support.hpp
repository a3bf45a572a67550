#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "crownbench/datamodel.hpp"
#include "crownbench/metrics.hpp"

namespace testing_support {

namespace fs = std::filesystem;

/// Fresh per-test scratch directory.
inline fs::path scratch(const std::string& name) {
  const char* base = std::getenv("CROWNBENCH_TEST_TMP");
  fs::path dir = fs::path(base ? base : fs::temp_directory_path().string()) / "crownbench_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline crownbench::GeoBox random_box(std::mt19937_64& rng, double extent, double max_side, double min_side = 0.5) {
  std::uniform_real_distribution<double> pos(0.0, extent), side(min_side, max_side);
  const double x = pos(rng), y = pos(rng);
  return {x, y, x + side(rng), y + side(rng)};
}

/// Boxes clustered around a few centers so that overlaps are common.
inline std::vector<crownbench::GeoBox> clustered_boxes(std::mt19937_64& rng, std::size_t n, double extent) {
  std::uniform_real_distribution<double> pos(0.0, extent), jitter(-3.0, 3.0), side(1.0, 12.0);
  std::vector<crownbench::GeoBox> centers;
  const std::size_t k = std::max<std::size_t>(1, n / 4);
  for (std::size_t i = 0; i < k; ++i) {
    const double x = pos(rng), y = pos(rng);
    centers.push_back({x, y, x + side(rng), y + side(rng)});
  }
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::vector<crownbench::GeoBox> out;
  for (std::size_t i = 0; i < n; ++i) {
    crownbench::GeoBox c = centers[pick(rng)];
    const double dx = jitter(rng), dy = jitter(rng);
    const double w = std::max(0.5, c.width() + jitter(rng)), h = std::max(0.5, c.height() + jitter(rng));
    out.push_back({c.min_x + dx, c.min_y + dy, c.min_x + dx + w, c.min_y + dy + h});
  }
  return out;
}

/// Scores drawn either continuously or from a coarse grid (to produce ties).
inline double random_score(std::mt19937_64& rng, bool coarse) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double s = u(rng);
  return coarse ? std::round(s * 10.0) / 10.0 : s;
}

inline std::vector<crownbench::Detection> as_detections(const std::vector<crownbench::GeoBox>& boxes,
                                                        std::mt19937_64& rng, bool coarse = false) {
  std::vector<crownbench::Detection> out;
  for (const auto& b : boxes) out.push_back({b, random_score(rng, coarse), {}});
  return out;
}

}  // namespace testing_support
