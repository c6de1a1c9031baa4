#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace dga {

/// Axis-aligned box in pixel coordinates, x1 < x2 and y1 < y2.
/// Degenerate (zero-area) or non-finite boxes are rejected at construction.
struct BBox {
  double x1, y1, x2, y2;

  BBox(double x1, double y1, double x2, double y2);

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }
};

/// Intersection over union, in [0, 1].
double iou(const BBox& a, const BBox& b);

/// Generalized IoU, in (-1, 1]. Equals IoU when the union fills the
/// enclosing box.
double giou(const BBox& a, const BBox& b);

/// |A| x |B| matrix with entry (i, j) = iou(A[i], B[j]).
/// Throws std::invalid_argument on an empty input.
Eigen::MatrixXd pairwise_iou(std::span<const BBox> a, std::span<const BBox> b);

inline Eigen::MatrixXd pairwise_iou(const std::vector<BBox>& a,
                                    const std::vector<BBox>& b) {
  return pairwise_iou(std::span<const BBox>(a), std::span<const BBox>(b));
}

}  // namespace dga
