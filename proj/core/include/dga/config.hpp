#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dga/transport_cost.hpp"

namespace dga {

enum class PriorMode { kCenterPrior, kIouThreshold };
enum class NmsMode { kDensityGuided, kVanilla };

/// Full experiment description. Serializes to/from versioned JSON; the CLI
/// loads a config file and applies flag overrides on top.
struct ExperimentConfig {
  int schema_version = 1;

  // Scene generation
  double image_width = 512.0;
  double image_height = 512.0;
  int gt_count = 20;
  double min_size = 24.0;
  double max_size = 160.0;
  std::string overlap = "moderate";  // sparse | moderate | crowded
  int scene_count = 1;
  double noise = 0.5;
  uint64_t seed = 1;

  // Anchor pyramid
  int min_level = 3;
  std::vector<int> strides = {8, 16, 32, 64, 128};
  cost::LevelSpec soi_spec();  // SoI table derived from soi_min/soi_max
  std::vector<double> soi_edges = {0.0, 64.0, 128.0, 256.0, 512.0, 2048.0};

  // Candidate prior
  std::string prior_mode = "center_prior";  // center_prior | iou_threshold
  int center_prior_r = 5;
  double candidate_iou_threshold = 0.5;

  // Transport cost
  double gamma = 2.0;
  bool use_level_cost = true;
  bool score_cost = false;  // ablation hook: add -log(score) to the cost

  // UOT solver
  double epsilon = 0.1;
  double rho = 1.0;
  int max_iterations = 500;
  double tolerance = 1e-6;

  // Assignment
  double th_pos = 0.7;
  double th_neg = 0.8;
  std::string strategy = "dyn_k_star";  // dyn_k_star | dyn_k | fix_k
  int fix_k = 10;

  // Losses
  bool d1_on = true;
  bool d2_on = true;
  bool plain_transport = false;  // <C, pi*> instead of L_C^eps
  double gamma1 = 2.0;
  double gamma2 = 0.25;

  // NMS
  std::string nms_mode = "dg";        // dg | vanilla
  std::string nms_variant = "linear";  // square | linear | sqrt
  double sigma = 0.5;
  double vanilla_threshold = 0.5;
  double det_score_threshold = 0.3;
  bool bilinear_density = false;  // sample density at the box center instead
                                  // of the producing anchor

  std::string output_dir;

  void validate() const;  // throws std::invalid_argument on bad combinations

  std::string to_json() const;  // pretty, stable field order
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::string& path);
};

/// Set one named field from a string value ("th" accepts "0.7/0.8").
/// Throws std::invalid_argument for an unknown axis.
void apply_override(ExperimentConfig& config, const std::string& axis,
                    const std::string& value);

}  // namespace dga
