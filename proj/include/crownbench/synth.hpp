#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crownbench/datamodel.hpp"
#include "crownbench/geometry.hpp"
#include "crownbench/metrics.hpp"

namespace crownbench {

struct SynthConfig {
  std::uint64_t seed = 1;
  double extent_m = 400.0;
  double gsd = 0.045;
  int n_crowns = 500;
  /// Log-normal crown diameter: median and log-space sigma, clamped.
  double crown_median_m = 6.0;
  double crown_log_sigma = 0.5;
  double crown_min_m = 1.5;
  double crown_max_m = 30.0;
  double max_gt_iou = 0.2;
  /// Crowns are kept at least this far from the scene edge.
  double margin_m = 0.0;
  int max_attempts = 2000;
  // Detection perturbation
  double jitter_sigma = 0.0;  // in the units of the boxes being perturbed
  double drop_prob = 0.0;
  double spurious_rate = 0.0;
  // Georeference
  double origin_x = 300000.0;
  double origin_y = 5000000.0;
  std::string crs = "EPSG:32618";
  std::string raster_id = "synth";
  bool render_pixels = true;

  void validate() const;
};

/// Deterministic scene: non-overlapping-enough crowns drawn as shaded ellipses
/// on a noisy background. Throws ValidationError if the packing constraint
/// cannot be met within max_attempts per crown.
SceneBundle gen_scene(const SynthConfig& cfg);

/// Simulated model output: each box kept with probability 1-drop_prob, each
/// edge jittered by N(0, jitter_sigma), scored clamp(1 - jitter/size, 0.05,
/// 0.99) where jitter is the largest edge shift and size sqrt(area); spurious
/// boxes appended with scores in [0.05, 0.3]. `stream` decorrelates calls that
/// share a seed (e.g. one per tile).
std::vector<ScoredBox> perturb(std::span<const Box<double>> truths, const SynthConfig& cfg,
                               std::uint64_t stream = 0);

/// Counter-based 64-bit mix used to derive independent streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace crownbench
