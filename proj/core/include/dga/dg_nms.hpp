#pragma once

#include <vector>

#include "dga/geometry.hpp"

namespace dga::nms {

struct Detection {
  BBox box;
  double score = 0.0;    // in (0, 1]
  double density = 0.0;  // >= 0
};

enum class ScaleVariant { kSquare, kLinear, kSqrt };

/// Min-max density scaler, frozen at construction from the initial detection
/// set: s(d) = clamp((d - d_min)/(d_max - d_min), 0, 1), identically 0 when
/// the range is degenerate. The variant applies f = s^2, s, or sqrt(s).
struct DensityScaler {
  double d_min = 0.0;
  double d_max = 0.0;
  ScaleVariant variant = ScaleVariant::kLinear;

  double scaled(double d) const;
};

/// Throws std::invalid_argument on an empty detection set.
DensityScaler build_scaler(const std::vector<Detection>& detections,
                           ScaleVariant variant);

/// Adaptive suppression threshold T = 0.5 + 0.3 * f(d), in [0.5, 0.8].
double adaptive_threshold(double density, const DensityScaler& scaler);

/// Density-guided NMS: greedy max-score selection with per-box adaptive
/// thresholds; survivors decay d <- d * exp(-IoU(b, b_t)^2 / sigma).
/// Output sorted by score descending; score ties broken by input index.
std::vector<Detection> dg_nms(const std::vector<Detection>& detections,
                              double sigma, ScaleVariant variant);

/// Greedy NMS at a fixed IoU threshold.
std::vector<Detection> vanilla_nms(const std::vector<Detection>& detections,
                                   double threshold);

}  // namespace dga::nms
