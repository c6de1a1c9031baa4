#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "dga/geometry.hpp"
#include "dga/uot.hpp"

namespace dga::sim {

enum class OverlapLevel { kSparse, kModerate, kCrowded };

struct SceneConfig {
  double image_width = 512.0;
  double image_height = 512.0;
  int gt_count = 20;
  double min_size = 24.0;   // sqrt-area range for generated boxes
  double max_size = 160.0;
  OverlapLevel overlap = OverlapLevel::kModerate;
  // Fraction of GTs placed as overlapping pairs for the chosen level.
  double overlap_fraction(OverlapLevel level) const;
  uint64_t seed = 0;
};

struct Scene {
  double image_width = 0.0;
  double image_height = 0.0;
  std::vector<BBox> gts;
  int crowd_pairs = 0;  // GT pairs with IoU > 0.5
  uint64_t seed = 0;

  /// GT indices overlapping some other GT with IoU > 0.5.
  std::vector<bool> crowd_flags() const;
};

struct Anchor {
  double cx = 0.0, cy = 0.0;
  int level = 0;
  double box_w = 0.0, box_h = 0.0;  // prior box extent (H:W = 3:1)
};

struct AnchorGrid {
  std::vector<Anchor> anchors;
  std::vector<int> strides;  // per level, power of two
  int min_level = 3;

  size_t size() const { return anchors.size(); }
  std::vector<int> levels() const;
  std::vector<std::pair<double, double>> centers() const;
  std::vector<BBox> boxes() const;
};

struct Prediction {
  BBox box;
  double score = 0.0;  // in (0, 1)
};

/// Deterministic crowded layout generator. Throws std::runtime_error when a
/// feasible packing cannot be found within bounded retries.
Scene generate_scene(const SceneConfig& config);

/// One anchor per stride cell per level, centered in the cell.
AnchorGrid build_anchor_grid(double image_width, double image_height,
                             int min_level, const std::vector<int>& strides);

/// Per-anchor simulated regression output: the nearest GT's box perturbed by
/// jitter that grows with the anchor-to-GT center distance; score is the
/// achieved IoU corrupted by bounded noise. Pure in (scene, grid, noise, seed).
std::vector<Prediction> simulate_predictions(const Scene& scene,
                                             const AnchorGrid& grid,
                                             double noise, uint64_t seed);

/// Column sums of the transport plan: the reconstructed per-anchor density.
Eigen::VectorXd density_from_plan(const uot::TransportPlan& plan);

}  // namespace dga::sim
