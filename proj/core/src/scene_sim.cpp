#include "dga/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace dga::sim {

double SceneConfig::overlap_fraction(OverlapLevel level) const {
  switch (level) {
    case OverlapLevel::kSparse:
      return 0.0;
    case OverlapLevel::kModerate:
      return 0.3;
    case OverlapLevel::kCrowded:
      return 0.6;
  }
  return 0.0;
}

std::vector<bool> Scene::crowd_flags() const {
  std::vector<bool> flags(gts.size(), false);
  for (size_t i = 0; i < gts.size(); ++i) {
    for (size_t j = i + 1; j < gts.size(); ++j) {
      if (iou(gts[i], gts[j]) > 0.5) {
        flags[i] = true;
        flags[j] = true;
      }
    }
  }
  return flags;
}

namespace {

int count_crowd_pairs(const std::vector<BBox>& gts) {
  int pairs = 0;
  for (size_t i = 0; i < gts.size(); ++i) {
    for (size_t j = i + 1; j < gts.size(); ++j) {
      if (iou(gts[i], gts[j]) > 0.5) ++pairs;
    }
  }
  return pairs;
}

// Pedestrian-like box: sqrt-area scale with H:W drawn in [1.5, 3].
BBox sample_box(double cx, double cy, double scale, double ratio) {
  const double w = scale / std::sqrt(ratio);
  const double h = scale * std::sqrt(ratio);
  return BBox(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
}

bool inside(const BBox& b, double w, double h) {
  return b.x1 > 0.0 && b.y1 > 0.0 && b.x2 < w && b.y2 < h;
}

double max_iou_against(const BBox& b, const std::vector<BBox>& others) {
  double best = 0.0;
  for (const BBox& o : others) best = std::max(best, iou(b, o));
  return best;
}

}  // namespace

Scene generate_scene(const SceneConfig& config) {
  if (config.gt_count < 1) {
    throw std::invalid_argument("generate_scene: gt_count >= 1 required");
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const double frac = config.overlap_fraction(config.overlap);
  const int pair_count = static_cast<int>(config.gt_count * frac) / 2;
  const int single_count = config.gt_count - 2 * pair_count;

  // Crowded scenes draw the pair IoU from the upper part of [0.3, 0.7] so
  // that every generated pair counts as a crowd pair (IoU > 0.5).
  const double iou_lo = config.overlap == OverlapLevel::kCrowded ? 0.55 : 0.3;
  const double iou_hi = 0.7;

  Scene scene;
  scene.image_width = config.image_width;
  scene.image_height = config.image_height;
  scene.seed = config.seed;

  constexpr int kMaxAttempts = 2000;
  auto sample_scale = [&] {
    return config.min_size + (config.max_size - config.min_size) * u01(rng);
  };

  for (int p = 0; p < pair_count; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const double scale = sample_scale();
      const double ratio = 1.5 + 1.5 * u01(rng);
      const double cx = config.image_width * u01(rng);
      const double cy = config.image_height * u01(rng);
      const double target = iou_lo + (iou_hi - iou_lo) * u01(rng);
      try {
        BBox a = sample_box(cx, cy, scale, ratio);
        // Equal boxes shifted by dx along x have IoU (w - dx)/(w + dx).
        const double dx = a.width() * (1.0 - target) / (1.0 + target);
        BBox b(a.x1 + dx, a.y1, a.x2 + dx, a.y2);
        if (!inside(a, config.image_width, config.image_height) ||
            !inside(b, config.image_width, config.image_height)) {
          continue;
        }
        if (max_iou_against(a, scene.gts) > 0.1 ||
            max_iou_against(b, scene.gts) > 0.1) {
          continue;
        }
        scene.gts.push_back(a);
        scene.gts.push_back(b);
        placed = true;
      } catch (const std::invalid_argument&) {
        continue;
      }
    }
    if (!placed) throw std::runtime_error("generate_scene: infeasible pair packing");
  }

  for (int s = 0; s < single_count; ++s) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const double scale = sample_scale();
      const double ratio = 1.5 + 1.5 * u01(rng);
      const double cx = config.image_width * u01(rng);
      const double cy = config.image_height * u01(rng);
      try {
        BBox b = sample_box(cx, cy, scale, ratio);
        if (!inside(b, config.image_width, config.image_height)) continue;
        if (max_iou_against(b, scene.gts) > 0.1) continue;
        scene.gts.push_back(b);
        placed = true;
      } catch (const std::invalid_argument&) {
        continue;
      }
    }
    if (!placed) throw std::runtime_error("generate_scene: infeasible single packing");
  }

  scene.crowd_pairs = count_crowd_pairs(scene.gts);
  return scene;
}

std::vector<int> AnchorGrid::levels() const {
  std::vector<int> out;
  out.reserve(anchors.size());
  for (const Anchor& a : anchors) out.push_back(a.level);
  return out;
}

std::vector<std::pair<double, double>> AnchorGrid::centers() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(anchors.size());
  for (const Anchor& a : anchors) out.emplace_back(a.cx, a.cy);
  return out;
}

std::vector<BBox> AnchorGrid::boxes() const {
  std::vector<BBox> out;
  out.reserve(anchors.size());
  for (const Anchor& a : anchors) {
    out.emplace_back(a.cx - 0.5 * a.box_w, a.cy - 0.5 * a.box_h,
                     a.cx + 0.5 * a.box_w, a.cy + 0.5 * a.box_h);
  }
  return out;
}

AnchorGrid build_anchor_grid(double image_width, double image_height,
                             int min_level, const std::vector<int>& strides) {
  if (strides.empty()) throw std::invalid_argument("build_anchor_grid: no strides");
  for (int s : strides) {
    if (s < 1 || (s & (s - 1)) != 0) {
      throw std::invalid_argument("build_anchor_grid: strides must be powers of two");
    }
  }
  AnchorGrid grid;
  grid.strides = strides;
  grid.min_level = min_level;
  for (size_t l = 0; l < strides.size(); ++l) {
    const double s = static_cast<double>(strides[l]);
    const int nx = static_cast<int>(std::ceil(image_width / s));
    const int ny = static_cast<int>(std::ceil(image_height / s));
    // Prior box: area (4s)^2 at aspect H:W = 3:1.
    const double base = 4.0 * s;
    const double box_w = base / std::sqrt(3.0);
    const double box_h = base * std::sqrt(3.0);
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        Anchor a;
        a.cx = (ix + 0.5) * s;
        a.cy = (iy + 0.5) * s;
        a.level = min_level + static_cast<int>(l);
        a.box_w = box_w;
        a.box_h = box_h;
        grid.anchors.push_back(a);
      }
    }
  }
  return grid;
}

std::vector<Prediction> simulate_predictions(const Scene& scene,
                                             const AnchorGrid& grid,
                                             double noise, uint64_t seed) {
  if (scene.gts.empty()) {
    throw std::invalid_argument("simulate_predictions: scene has no GTs");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  auto truncated = [&](double sigma) {
    return std::clamp(normal(rng) * sigma, -3.0 * sigma, 3.0 * sigma);
  };

  std::vector<Prediction> out;
  out.reserve(grid.size());
  for (const Anchor& anchor : grid.anchors) {
    size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < scene.gts.size(); ++i) {
      const double dx = scene.gts[i].cx() - anchor.cx;
      const double dy = scene.gts[i].cy() - anchor.cy;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        nearest = i;
      }
    }
    const BBox& gt = scene.gts[nearest];
    const double size = std::sqrt(gt.area());
    const double rel = std::sqrt(best) / size;  // distance in GT-size units

    // Jitter grows with anchor-to-GT distance: Gaussian in pixels for the
    // center, Gaussian in log-scale for width/height, truncated at 3 sigma.
    const double sigma_pos = noise * (0.2 + 0.5 * rel) * size;
    const double sigma_log = noise * (0.1 + 0.25 * rel);
    const double cx = gt.cx() + truncated(sigma_pos);
    const double cy = gt.cy() + truncated(sigma_pos);
    const double w = gt.width() * std::exp(truncated(sigma_log));
    const double h = gt.height() * std::exp(truncated(sigma_log));
    BBox pred(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);

    const double quality = iou(pred, gt);
    const double score =
        std::clamp(quality + 0.1 * noise * uni(rng), 1e-6, 1.0 - 1e-6);
    out.push_back(Prediction{pred, score});
  }
  return out;
}

Eigen::VectorXd density_from_plan(const uot::TransportPlan& plan) {
  return plan.pi.colwise().sum().transpose();
}

}  // namespace dga::sim
