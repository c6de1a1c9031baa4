#include "dga/dg_nms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dga::nms {

double DensityScaler::scaled(double d) const {
  if (d_max <= d_min) return 0.0;
  const double s = std::clamp((d - d_min) / (d_max - d_min), 0.0, 1.0);
  switch (variant) {
    case ScaleVariant::kSquare:
      return s * s;
    case ScaleVariant::kLinear:
      return s;
    case ScaleVariant::kSqrt:
      return std::sqrt(s);
  }
  return s;
}

DensityScaler build_scaler(const std::vector<Detection>& detections,
                           ScaleVariant variant) {
  if (detections.empty()) {
    throw std::invalid_argument("build_scaler: empty detection set");
  }
  DensityScaler scaler;
  scaler.variant = variant;
  scaler.d_min = detections.front().density;
  scaler.d_max = detections.front().density;
  for (const Detection& d : detections) {
    scaler.d_min = std::min(scaler.d_min, d.density);
    scaler.d_max = std::max(scaler.d_max, d.density);
  }
  return scaler;
}

double adaptive_threshold(double density, const DensityScaler& scaler) {
  return 0.5 + 0.3 * scaler.scaled(density);
}

namespace {

// Indices sorted by score descending, input index ascending on ties.
std::vector<size_t> score_order(const std::vector<Detection>& dets) {
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

}  // namespace

std::vector<Detection> dg_nms(const std::vector<Detection>& detections,
                              double sigma, ScaleVariant variant) {
  if (sigma <= 0.0) throw std::invalid_argument("dg_nms: sigma must be > 0");
  std::vector<Detection> kept;
  if (detections.empty()) return kept;

  const DensityScaler scaler = build_scaler(detections, variant);

  std::vector<Detection> pool = detections;
  std::vector<size_t> order = score_order(pool);
  std::vector<bool> removed(pool.size(), false);

  for (size_t t = 0; t < order.size(); ++t) {
    const size_t ti = order[t];
    if (removed[ti]) continue;
    kept.push_back(pool[ti]);
    removed[ti] = true;
    for (size_t r = t + 1; r < order.size(); ++r) {
      const size_t ri = order[r];
      if (removed[ri]) continue;
      const double overlap = iou(pool[ti].box, pool[ri].box);
      if (overlap > adaptive_threshold(pool[ri].density, scaler)) {
        removed[ri] = true;
      } else {
        pool[ri].density *= std::exp(-overlap * overlap / sigma);
      }
    }
  }
  return kept;
}

std::vector<Detection> vanilla_nms(const std::vector<Detection>& detections,
                                   double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("vanilla_nms: threshold must be in (0,1)");
  }
  std::vector<Detection> kept;
  const std::vector<size_t> order = score_order(detections);
  std::vector<bool> removed(detections.size(), false);
  for (size_t t = 0; t < order.size(); ++t) {
    const size_t ti = order[t];
    if (removed[ti]) continue;
    kept.push_back(detections[ti]);
    for (size_t r = t + 1; r < order.size(); ++r) {
      const size_t ri = order[r];
      if (!removed[ri] && iou(detections[ti].box, detections[ri].box) > threshold) {
        removed[ri] = true;
      }
    }
  }
  return kept;
}

}  // namespace dga::nms
