#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dga/geometry.hpp"
#include "dga/uot.hpp"

namespace dga::assign {

enum class Label { kPositive, kNegative, kIgnore };

/// Per-anchor labels decoded from a transport plan. Positive anchors carry
/// exactly one matched GT and a weight in (0, 1]; per GT the top weight is 1.
struct AssignmentResult {
  std::vector<Label> labels;      // length n
  std::vector<int> matched_gt;    // length n, -1 unless positive
  std::vector<double> weights;    // length n, 0 unless positive
  // GTs that ended up with zero transported mass or zero positives.
  std::vector<int> unassigned_gts;

  int count(Label l) const;
};

/// Label decode strategy. kDynKStar is the cumulative-mass two-threshold
/// rule; kFixK takes the top-k nonzero-density anchors per GT; kDynK picks
/// per-GT k as the rounded sum of the top-20 IoUs to that GT.
enum class Strategy { kDynKStar, kFixK, kDynK };

struct DecodeOptions {
  Strategy strategy = Strategy::kDynKStar;
  double th_pos = 0.7;
  double th_neg = 0.8;
  int fix_k = 10;
  // Required by kDynK only: m x n IoU(GT_i, anchor/pred_j).
  Eigen::MatrixXd dyn_k_iou;
};

/// Decode per-anchor labels from the plan (row-wise cumulative mass against
/// th_pos/th_neg, then column-argmax competition between GTs). Throws
/// std::invalid_argument unless 0 < th_pos <= th_neg <= 1.
AssignmentResult decode_assignment(const uot::TransportPlan& plan,
                                   const DecodeOptions& opts = {});

/// Fill in positive-anchor weights: per GT, density / max density among its
/// positives. Negatives keep implicit weight 1 and are not stored.
AssignmentResult compute_weights(const uot::TransportPlan& plan,
                                 AssignmentResult assignment);

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

struct UotLossBreakdown {
  double transport = 0.0;   // L_C^eps (or <C, pi*> when plain_transport)
  double d1_focal = 0.0;    // object-wise focal term on pi 1 vs a
  double d2_l2 = 0.0;       // anchor-wise L2 norm of pi^T 1 - b
  double total = 0.0;
};

/// Complete transport loss: transport term + focal(a_hat, a) + ||b_hat - b||_2.
/// plain_transport swaps L_C^eps for the bare inner product <C, pi*>.
UotLossBreakdown uot_loss(const uot::TransportPlan& plan,
                          const uot::TransportProblem& problem,
                          const FocalParams& focal = {},
                          bool plain_transport = false);

enum class ClsNormalizer {
  kPosWeightsPlusNegCount,  // sum of positive weights + |negatives|
  kPosWeightsOnly,
};

struct DetectionLossOptions {
  FocalParams focal;
  double gamma1 = 2.0;   // one-stage localization weight
  double gamma2 = 0.25;  // UOT-loss weight
  ClsNormalizer normalizer = ClsNormalizer::kPosWeightsPlusNegCount;
};

struct DetectionLoss {
  double cls = 0.0;
  double loc = 0.0;
  double total = 0.0;  // cls + gamma1 * loc + gamma2 * uot
  bool no_positives = false;
};

/// Weighted focal classification + weighted GIoU localization losses over an
/// assignment, combined with a precomputed UOT loss value.
DetectionLoss detection_loss(const AssignmentResult& assignment,
                             const std::vector<double>& scores,
                             const std::vector<BBox>& pred_boxes,
                             const std::vector<BBox>& gts, double uot_loss_value,
                             const DetectionLossOptions& opts = {});

}  // namespace dga::assign
