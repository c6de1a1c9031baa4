#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "dga/geometry.hpp"

namespace dga::cost {

/// Per-level size-of-interest ranges, used to pick each GT's preferred
/// pyramid levels. Levels are contiguous integers (e.g. 3..7); ranges are
/// ordered and non-overlapping.
struct LevelSpec {
  int min_level = 3;
  std::vector<std::pair<double, double>> soi;  // one (min_size, max_size) per level
  // Width of the band near a range edge where a GT prefers two levels,
  // as a fraction of the range width.
  double boundary_band = 0.25;

  int max_level() const { return min_level + static_cast<int>(soi.size()) - 1; }
  void validate() const;
};

/// Boolean m x n candidate matrix; a GT whose row is all-false makes the
/// scene degenerate for assignment purposes.
struct CandidateMask {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;

  bool degenerate() const;  // true iff some GT row has no candidate
};

/// Overlap-aware cost from IoU matrices:
///   phi: m x n IoU(GT_i, pred_j), psi: m x m IoU(GT_i, GT_k).
/// C_ij = (1 - phi_ij) * sum_k (1 - psi_ik)^[k != i] * bce(phi_kj, [k == i]).
/// BCE logs are clamped at 1e-7 so the endpoints stay finite.
Eigen::MatrixXd overlap_aware_cost(const Eigen::MatrixXd& phi,
                                   const Eigen::MatrixXd& psi);

/// Convenience overload computing phi and psi from boxes.
Eigen::MatrixXd overlap_aware_cost(const std::vector<BBox>& gts,
                                   const std::vector<BBox>& preds);

/// Preferred level set for a GT, size 1 or 2. The scale measure is
/// sqrt(w * h); out-of-range sizes clamp to the nearest level.
std::vector<int> preferred_levels(const BBox& gt, const LevelSpec& spec);

/// C^level_ij = min over a in L_i of |a - l_j|.
/// Throws std::invalid_argument on an empty preferred set.
Eigen::MatrixXd level_cost(const std::vector<std::vector<int>>& gt_levels,
                           const std::vector<int>& anchor_levels);

/// C = gamma * C^iou + C^level. Throws on shape mismatch.
Eigen::MatrixXd combine_costs(const Eigen::MatrixXd& c_iou,
                              const Eigen::MatrixXd& c_level, double gamma);

/// Per GT and per level, the r^2 anchors with the smallest center distance
/// are candidates (all of them when a level has fewer than r^2 anchors).
CandidateMask center_prior_candidates(
    const std::vector<BBox>& gts,
    const std::vector<std::pair<double, double>>& anchor_centers,
    const std::vector<int>& anchor_levels, int r);

/// mask_ij = iou(gt_i, anchor_j) > threshold.
CandidateMask iou_threshold_candidates(const std::vector<BBox>& gts,
                                       const std::vector<BBox>& anchor_boxes,
                                       double threshold);

/// Raise masked-out entries of a cost matrix to the sentinel value.
Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& cost,
                           const CandidateMask& candidates);

}  // namespace dga::cost
