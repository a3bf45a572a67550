#include "crownbench/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace crownbench {

namespace {

// std::mt19937_64 output is fully specified; the mappings below are too, so
// scenes are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void render(Image& img, const SceneBundle& scene, std::uint64_t seed) {
  const AffineTransform& t = scene.raster.transform;
  const Eigen::Index w = img.width(), h = img.height();
  // Background: understory noise, hashed per pixel.
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const std::uint64_t n = splitmix(mix_seed(seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)));
      img.bands[0](r, c) = static_cast<std::uint8_t>(70 + (n & 31));
      img.bands[1](r, c) = static_cast<std::uint8_t>(60 + ((n >> 8) & 31));
      img.bands[2](r, c) = static_cast<std::uint8_t>(40 + ((n >> 16) & 15));
    }
  }
  // Crowns: shaded filled ellipses inscribed in their boxes.
  const AffineTransform inv = t.inverse();
  for (const Annotation& a : scene.annotations) {
    const Box<double> px = pixel_to_world(a.box, inv);
    const double cx = 0.5 * (px.min_x + px.max_x), cy = 0.5 * (px.min_y + px.max_y);
    const double rx = 0.5 * px.width(), ry = 0.5 * px.height();
    const Eigen::Index c0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(px.min_x)));
    const Eigen::Index c1 = std::min<Eigen::Index>(w, static_cast<Eigen::Index>(std::ceil(px.max_x)));
    const Eigen::Index r0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(px.min_y)));
    const Eigen::Index r1 = std::min<Eigen::Index>(h, static_cast<Eigen::Index>(std::ceil(px.max_y)));
    const std::uint64_t tone = splitmix(mix_seed(seed, 0xc0ffeeULL, static_cast<std::uint64_t>(a.ann_id)));
    const double base_g = 120.0 + static_cast<double>(tone & 63);
    const double base_r = 40.0 + static_cast<double>((tone >> 8) & 31);
    for (Eigen::Index r = r0; r < r1; ++r) {
      for (Eigen::Index c = c0; c < c1; ++c) {
        const double dx = (static_cast<double>(c) + 0.5 - cx) / rx;
        const double dy = (static_cast<double>(r) + 0.5 - cy) / ry;
        const double d2 = dx * dx + dy * dy;
        if (d2 > 1.0) continue;
        const double shade = 1.0 - 0.35 * d2;
        img.bands[0](r, c) = clamp_u8(base_r * shade);
        img.bands[1](r, c) = clamp_u8(base_g * shade);
        img.bands[2](r, c) = clamp_u8(30.0 * shade);
      }
    }
  }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix(splitmix(splitmix(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

void SynthConfig::validate() const {
  auto rate = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(extent_m > 0.0) || !(gsd > 0.0)) throw ValidationError("synth: extent and gsd must be positive");
  if (n_crowns < 0) throw ValidationError("synth: crown count must be non-negative");
  if (!(crown_median_m > 0.0 && crown_min_m > 0.0 && crown_min_m <= crown_max_m)) {
    throw ValidationError("synth: crown size parameters must be positive with min <= max");
  }
  if (!(crown_log_sigma >= 0.0)) throw ValidationError("synth: crown log sigma must be non-negative");
  if (!rate(max_gt_iou) || !rate(drop_prob) || !rate(spurious_rate)) {
    throw ValidationError("synth: max IoU, drop probability and spurious rate must lie in [0, 1]");
  }
  if (!(jitter_sigma >= 0.0)) throw ValidationError("synth: jitter sigma must be non-negative");
  if (!(margin_m >= 0.0) || 2.0 * margin_m >= extent_m) throw ValidationError("synth: margin leaves no room");
  if (max_attempts < 1) throw ValidationError("synth: max_attempts must be at least 1");
}

SceneBundle gen_scene(const SynthConfig& cfg) {
  cfg.validate();
  SceneBundle scene;
  const auto size_px = std::max<std::int64_t>(1, std::llround(cfg.extent_m / cfg.gsd));
  scene.raster.raster_id = cfg.raster_id;
  scene.raster.width = size_px;
  scene.raster.height = size_px;
  scene.raster.transform = AffineTransform::north_up(cfg.origin_x, cfg.origin_y, cfg.gsd);
  scene.raster.crs = cfg.crs;
  const GeoBox extent = scene.raster.extent();
  const double room = std::min(extent.width(), extent.height()) - 2.0 * cfg.margin_m;

  std::vector<GeoBox> placed;
  placed.reserve(static_cast<std::size_t>(cfg.n_crowns));
  for (int i = 0; i < cfg.n_crowns; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !ok; ++attempt) {
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(attempt)));
      const double diameter = std::clamp(std::exp(std::log(cfg.crown_median_m) + cfg.crown_log_sigma * rng.normal()),
                                         cfg.crown_min_m, cfg.crown_max_m);
      const double aspect = std::exp(0.15 * rng.normal());
      const double w = std::min(diameter * std::sqrt(aspect), cfg.crown_max_m);
      const double h = std::min(diameter / std::sqrt(aspect), cfg.crown_max_m);
      if (w >= room || h >= room) continue;
      const double cx = rng.uniform(extent.min_x + cfg.margin_m + 0.5 * w, extent.max_x - cfg.margin_m - 0.5 * w);
      const double cy = rng.uniform(extent.min_y + cfg.margin_m + 0.5 * h, extent.max_y - cfg.margin_m - 0.5 * h);
      const GeoBox box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
      ok = std::all_of(placed.begin(), placed.end(),
                       [&](const GeoBox& other) { return iou(box, other) <= cfg.max_gt_iou; });
      if (ok) placed.push_back(box);
    }
    if (!ok) {
      throw ValidationError(fmt::format(
          "synth: could not place crown {} of {} with max GT IoU {} after {} attempts; lower the crown count",
          i + 1, cfg.n_crowns, cfg.max_gt_iou, cfg.max_attempts));
    }
  }
  for (std::size_t i = 0; i < placed.size(); ++i) {
    scene.annotations.push_back({static_cast<std::int64_t>(i) + 1, placed[i], cfg.raster_id});
  }

  if (cfg.render_pixels) {
    auto img = std::make_shared<Image>(size_px, size_px, 3);
    render(*img, scene, cfg.seed);
    scene.pixels = std::move(img);
  }
  return scene;
}

std::vector<ScoredBox> perturb(std::span<const Box<double>> truths, const SynthConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  std::vector<ScoredBox> out;
  if (truths.empty()) return out;
  GeoBox env = truths.front();
  for (const auto& b : truths) {
    env.min_x = std::min(env.min_x, b.min_x);
    env.min_y = std::min(env.min_y, b.min_y);
    env.max_x = std::max(env.max_x, b.max_x);
    env.max_y = std::max(env.max_y, b.max_y);
  }
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const Box<double>& g = truths[i];
    Rng rng(mix_seed(cfg.seed ^ 0x5eedULL, stream, static_cast<std::uint64_t>(i)));
    const bool dropped = rng.uniform() < cfg.drop_prob;
    const bool spurious = rng.uniform() < cfg.spurious_rate;
    if (!dropped) {
      double d[4] = {0.0, 0.0, 0.0, 0.0};
      if (cfg.jitter_sigma > 0.0) {
        for (double& v : d) v = cfg.jitter_sigma * rng.normal();
      }
      Box<double> b{g.min_x + d[0], g.min_y + d[1], g.max_x + d[2], g.max_y + d[3]};
      if (b.min_x > b.max_x) std::swap(b.min_x, b.max_x);
      if (b.min_y > b.max_y) std::swap(b.min_y, b.max_y);
      if (has_positive_area(b)) {
        double jitter = 0.0;
        for (double v : d) jitter = std::max(jitter, std::abs(v));
        const double size = std::sqrt(g.area());
        out.push_back({b, std::clamp(1.0 - jitter / size, 0.05, 0.99)});
      }
    }
    if (spurious) {
      const double w = g.width(), h = g.height();
      const double cx = rng.uniform(env.min_x + 0.5 * w, std::max(env.min_x + 0.5 * w, env.max_x - 0.5 * w));
      const double cy = rng.uniform(env.min_y + 0.5 * h, std::max(env.min_y + 0.5 * h, env.max_y - 0.5 * h));
      out.push_back({{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h}, rng.uniform(0.05, 0.3)});
    }
  }
  return out;
}

}  // namespace crownbench
