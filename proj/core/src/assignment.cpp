#include "dga/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dga::assign {

namespace {

constexpr double kEps = 1e-7;
constexpr double kMassFloor = 1e-12;

double focal_pos(double p, const FocalParams& fp) {
  p = std::clamp(p, kEps, 1.0);
  return -fp.alpha * std::pow(1.0 - p, fp.gamma) * std::log(p);
}

double focal_neg(double p, const FocalParams& fp) {
  p = std::clamp(p, 0.0, 1.0 - kEps);
  return -(1.0 - fp.alpha) * std::pow(p, fp.gamma) * std::log(1.0 - p);
}

// Anchor indices of a GT row ordered by density descending, index ascending
// on ties, zero entries dropped.
std::vector<int> ranked_nonzero(const Eigen::VectorXd& row) {
  std::vector<int> idx;
  for (int j = 0; j < row.size(); ++j) {
    if (row[j] > 0.0) idx.push_back(j);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int p, int q) { return row[p] > row[q]; });
  return idx;
}

}  // namespace

int AssignmentResult::count(Label l) const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), l));
}

AssignmentResult decode_assignment(const uot::TransportPlan& plan,
                                   const DecodeOptions& opts) {
  if (!(opts.th_pos > 0.0 && opts.th_pos <= opts.th_neg && opts.th_neg <= 1.0)) {
    throw std::invalid_argument("decode_assignment: need 0 < th_pos <= th_neg <= 1");
  }
  const int m = static_cast<int>(plan.pi.rows());
  const int n = static_cast<int>(plan.pi.cols());

  // Per-GT votes before column competition.
  std::vector<std::vector<int>> positives(static_cast<size_t>(m));
  std::vector<bool> ignore_vote(static_cast<size_t>(n), false);

  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd row = plan.pi.row(i);
    const double total = row.sum();
    if (total <= kMassFloor) continue;
    const std::vector<int> order = ranked_nonzero(row);

    if (opts.strategy == Strategy::kDynKStar) {
      double cum = 0.0;
      for (size_t t = 0; t < order.size(); ++t) {
        cum += row[order[t]];
        const double frac = cum / total;
        // The head anchor is positive even when it alone exceeds th_pos.
        if (t == 0 || frac <= opts.th_pos) {
          positives[static_cast<size_t>(i)].push_back(order[t]);
        } else if (frac <= opts.th_neg) {
          ignore_vote[static_cast<size_t>(order[t])] = true;
        } else {
          break;  // remaining cumulative fractions only grow
        }
      }
    } else {
      size_t k;
      if (opts.strategy == Strategy::kFixK) {
        k = static_cast<size_t>(std::max(1, opts.fix_k));
      } else {
        if (opts.dyn_k_iou.rows() != m) {
          throw std::invalid_argument("decode_assignment: dyn_k strategy needs dyn_k_iou");
        }
        std::vector<double> ious(opts.dyn_k_iou.row(i).begin(),
                                 opts.dyn_k_iou.row(i).end());
        std::sort(ious.rbegin(), ious.rend());
        const size_t top = std::min<size_t>(20, ious.size());
        const double s = std::accumulate(ious.begin(), ious.begin() + top, 0.0);
        k = static_cast<size_t>(std::max(1.0, std::round(s)));
      }
      for (size_t t = 0; t < std::min(k, order.size()); ++t) {
        positives[static_cast<size_t>(i)].push_back(order[t]);
      }
    }
  }

  AssignmentResult out;
  out.labels.assign(static_cast<size_t>(n), Label::kNegative);
  out.matched_gt.assign(static_cast<size_t>(n), -1);
  out.weights.assign(static_cast<size_t>(n), 0.0);

  // Column competition: an anchor claimed by several GTs goes to the GT with
  // the largest plan entry in that column; losers see it as negative.
  std::vector<int> claimed_by(static_cast<size_t>(n), -1);
  for (int i = 0; i < m; ++i) {
    for (int j : positives[static_cast<size_t>(i)]) {
      int& owner = claimed_by[static_cast<size_t>(j)];
      if (owner < 0 || plan.pi(i, j) > plan.pi(owner, j)) owner = i;
    }
  }
  for (int j = 0; j < n; ++j) {
    if (claimed_by[static_cast<size_t>(j)] >= 0) {
      out.labels[static_cast<size_t>(j)] = Label::kPositive;
      out.matched_gt[static_cast<size_t>(j)] = claimed_by[static_cast<size_t>(j)];
    } else if (ignore_vote[static_cast<size_t>(j)]) {
      out.labels[static_cast<size_t>(j)] = Label::kIgnore;
    }
  }

  for (int i = 0; i < m; ++i) {
    const bool has_pos = std::any_of(
        positives[static_cast<size_t>(i)].begin(), positives[static_cast<size_t>(i)].end(),
        [&](int j) { return claimed_by[static_cast<size_t>(j)] == i; });
    if (!has_pos) out.unassigned_gts.push_back(i);
  }
  return out;
}

AssignmentResult compute_weights(const uot::TransportPlan& plan,
                                 AssignmentResult assignment) {
  const int m = static_cast<int>(plan.pi.rows());
  const int n = static_cast<int>(plan.pi.cols());
  for (int i = 0; i < m; ++i) {
    double dmax = 0.0;
    for (int j = 0; j < n; ++j) {
      if (assignment.labels[static_cast<size_t>(j)] == Label::kPositive &&
          assignment.matched_gt[static_cast<size_t>(j)] == i) {
        dmax = std::max(dmax, plan.pi(i, j));
      }
    }
    if (dmax <= 0.0) continue;
    for (int j = 0; j < n; ++j) {
      if (assignment.labels[static_cast<size_t>(j)] == Label::kPositive &&
          assignment.matched_gt[static_cast<size_t>(j)] == i) {
        assignment.weights[static_cast<size_t>(j)] = plan.pi(i, j) / dmax;
      }
    }
  }
  return assignment;
}

UotLossBreakdown uot_loss(const uot::TransportPlan& plan,
                          const uot::TransportProblem& problem,
                          const FocalParams& focal, bool plain_transport) {
  if (plan.pi.rows() != problem.rows() || plan.pi.cols() != problem.cols()) {
    throw std::invalid_argument("uot_loss: plan/problem shape mismatch");
  }
  UotLossBreakdown out;
  out.transport = plain_transport
                      ? (problem.cost.array() * plan.pi.array()).sum()
                      : uot::objective(plan.pi, problem);

  const Eigen::VectorXd a_hat = plan.pi.rowwise().sum();
  for (Eigen::Index i = 0; i < a_hat.size(); ++i) {
    out.d1_focal += focal_pos(a_hat[i], focal);
  }

  const Eigen::VectorXd b_hat = plan.pi.colwise().sum().transpose();
  out.d2_l2 = (b_hat - problem.b).norm();

  out.total = out.transport + out.d1_focal + out.d2_l2;
  return out;
}

DetectionLoss detection_loss(const AssignmentResult& assignment,
                             const std::vector<double>& scores,
                             const std::vector<BBox>& pred_boxes,
                             const std::vector<BBox>& gts, double uot_loss_value,
                             const DetectionLossOptions& opts) {
  const size_t n = assignment.labels.size();
  if (scores.size() != n || pred_boxes.size() != n) {
    throw std::invalid_argument("detection_loss: anchor index spaces disagree");
  }

  double pos_cls = 0.0, neg_cls = 0.0, loc = 0.0;
  double weight_sum = 0.0;
  int neg_count = 0, pos_count = 0;
  for (size_t j = 0; j < n; ++j) {
    switch (assignment.labels[j]) {
      case Label::kPositive: {
        const double w = assignment.weights[j];
        pos_cls += w * focal_pos(scores[j], opts.focal);
        const BBox& gt = gts[static_cast<size_t>(assignment.matched_gt[j])];
        loc += w * (1.0 - giou(pred_boxes[j], gt));
        weight_sum += w;
        ++pos_count;
        break;
      }
      case Label::kNegative:
        neg_cls += focal_neg(scores[j], opts.focal);
        ++neg_count;
        break;
      case Label::kIgnore:
        break;
    }
  }

  double norm = weight_sum;
  if (opts.normalizer == ClsNormalizer::kPosWeightsPlusNegCount) {
    norm += static_cast<double>(neg_count);
  }
  norm = std::max(norm, 1.0);

  DetectionLoss out;
  out.no_positives = pos_count == 0;
  out.cls = (pos_cls + neg_cls) / norm;
  out.loc = loc / norm;
  out.total = out.cls + opts.gamma1 * out.loc + opts.gamma2 * uot_loss_value;
  return out;
}

}  // namespace dga::assign
