#include "dga/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dga {

BBox::BBox(double x1_, double y1_, double x2_, double y2_)
    : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
  if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
        std::isfinite(y2))) {
    throw std::invalid_argument("BBox: coordinates must be finite");
  }
  if (!(x1 < x2 && y1 < y2)) {
    throw std::invalid_argument("BBox: requires x1 < x2 and y1 < y2");
  }
}

namespace {

double intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double giou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double ew = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double eh = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const double enclose = ew * eh;
  return inter / uni - (enclose - uni) / enclose;
}

Eigen::MatrixXd pairwise_iou(std::span<const BBox> a, std::span<const BBox> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("pairwise_iou: empty box sequence");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()),
                      static_cast<Eigen::Index>(b.size()));
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          iou(a[i], b[j]);
    }
  }
  return out;
}

}  // namespace dga
