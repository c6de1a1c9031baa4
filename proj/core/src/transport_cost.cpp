#include "dga/transport_cost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dga/uot.hpp"

namespace dga::cost {

namespace {

constexpr double kLogClamp = 1e-7;

double bce_positive(double p) { return -std::log(std::max(p, kLogClamp)); }
double bce_negative(double p) { return -std::log(std::max(1.0 - p, kLogClamp)); }

}  // namespace

void LevelSpec::validate() const {
  if (soi.empty()) throw std::invalid_argument("LevelSpec: empty SoI table");
  for (size_t l = 0; l < soi.size(); ++l) {
    if (!(soi[l].first < soi[l].second)) {
      throw std::invalid_argument("LevelSpec: empty SoI range");
    }
    if (l > 0 && soi[l].first < soi[l - 1].second) {
      throw std::invalid_argument("LevelSpec: SoI ranges must be ordered and disjoint");
    }
  }
  if (boundary_band < 0.0 || boundary_band >= 0.5) {
    throw std::invalid_argument("LevelSpec: boundary_band must be in [0, 0.5)");
  }
}

bool CandidateMask::degenerate() const {
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    if (!mask.row(i).any()) return true;
  }
  return false;
}

Eigen::MatrixXd overlap_aware_cost(const Eigen::MatrixXd& phi,
                                   const Eigen::MatrixXd& psi) {
  const Eigen::Index m = phi.rows();
  const Eigen::Index n = phi.cols();
  if (psi.rows() != m || psi.cols() != m) {
    throw std::invalid_argument("overlap_aware_cost: psi must be m x m");
  }
  Eigen::MatrixXd out(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double penalty = bce_positive(phi(i, j));
      for (Eigen::Index k = 0; k < m; ++k) {
        if (k == i) continue;
        penalty += (1.0 - psi(i, k)) * bce_negative(phi(k, j));
      }
      out(i, j) = (1.0 - phi(i, j)) * penalty;
    }
  }
  return out;
}

Eigen::MatrixXd overlap_aware_cost(const std::vector<BBox>& gts,
                                   const std::vector<BBox>& preds) {
  return overlap_aware_cost(pairwise_iou(gts, preds), pairwise_iou(gts, gts));
}

std::vector<int> preferred_levels(const BBox& gt, const LevelSpec& spec) {
  spec.validate();
  const double scale = std::sqrt(gt.area());
  const int lo = spec.min_level;
  const int hi = spec.max_level();

  if (scale <= spec.soi.front().first) return {lo};
  if (scale >= spec.soi.back().second) return {hi};

  // Home level: the range containing the scale (gaps between ranges fall to
  // the nearer edge's level).
  int home = lo;
  for (size_t l = 0; l < spec.soi.size(); ++l) {
    if (scale < spec.soi[l].second) {
      home = lo + static_cast<int>(l);
      break;
    }
    home = lo + static_cast<int>(l);
  }
  const auto [rmin, rmax] = spec.soi[static_cast<size_t>(home - lo)];
  const double band = spec.boundary_band * (rmax - rmin);

  if (home > lo && scale <= rmin + band) return {home - 1, home};
  if (home < hi && scale >= rmax - band) return {home, home + 1};
  return {home};
}

Eigen::MatrixXd level_cost(const std::vector<std::vector<int>>& gt_levels,
                           const std::vector<int>& anchor_levels) {
  const Eigen::Index m = static_cast<Eigen::Index>(gt_levels.size());
  const Eigen::Index n = static_cast<Eigen::Index>(anchor_levels.size());
  Eigen::MatrixXd out(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& levels = gt_levels[static_cast<size_t>(i)];
    if (levels.empty()) {
      throw std::invalid_argument("level_cost: empty preferred level set");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      int best = std::numeric_limits<int>::max();
      for (int a : levels) {
        best = std::min(best, std::abs(a - anchor_levels[static_cast<size_t>(j)]));
      }
      out(i, j) = static_cast<double>(best);
    }
  }
  return out;
}

Eigen::MatrixXd combine_costs(const Eigen::MatrixXd& c_iou,
                              const Eigen::MatrixXd& c_level, double gamma) {
  if (c_iou.rows() != c_level.rows() || c_iou.cols() != c_level.cols()) {
    throw std::invalid_argument("combine_costs: shape mismatch");
  }
  return gamma * c_iou + c_level;
}

CandidateMask center_prior_candidates(
    const std::vector<BBox>& gts,
    const std::vector<std::pair<double, double>>& anchor_centers,
    const std::vector<int>& anchor_levels, int r) {
  if (r < 1) throw std::invalid_argument("center_prior_candidates: r >= 1 required");
  if (anchor_centers.size() != anchor_levels.size()) {
    throw std::invalid_argument("center_prior_candidates: anchor metadata mismatch");
  }
  const Eigen::Index m = static_cast<Eigen::Index>(gts.size());
  const Eigen::Index n = static_cast<Eigen::Index>(anchor_centers.size());
  const size_t per_level = static_cast<size_t>(r) * static_cast<size_t>(r);

  std::vector<std::vector<size_t>> by_level;
  {
    const auto [lo, hi] = std::minmax_element(anchor_levels.begin(), anchor_levels.end());
    by_level.resize(static_cast<size_t>(*hi - *lo) + 1);
    for (size_t j = 0; j < anchor_levels.size(); ++j) {
      by_level[static_cast<size_t>(anchor_levels[j] - *lo)].push_back(j);
    }
  }

  CandidateMask out;
  out.mask.setConstant(m, n, false);
  std::vector<size_t> idx;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double cx = gts[static_cast<size_t>(i)].cx();
    const double cy = gts[static_cast<size_t>(i)].cy();
    for (const auto& level_anchors : by_level) {
      if (level_anchors.empty()) continue;
      idx = level_anchors;
      const size_t take = std::min(per_level, idx.size());
      auto dist2 = [&](size_t j) {
        const double dx = anchor_centers[j].first - cx;
        const double dy = anchor_centers[j].second - cy;
        return dx * dx + dy * dy;
      };
      std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take),
                        idx.end(), [&](size_t p, size_t q) {
                          const double dp = dist2(p), dq = dist2(q);
                          return dp < dq || (dp == dq && p < q);
                        });
      for (size_t t = 0; t < take; ++t) {
        out.mask(i, static_cast<Eigen::Index>(idx[t])) = true;
      }
    }
  }
  return out;
}

CandidateMask iou_threshold_candidates(const std::vector<BBox>& gts,
                                       const std::vector<BBox>& anchor_boxes,
                                       double threshold) {
  if (threshold < 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("iou_threshold_candidates: threshold must be in [0,1)");
  }
  const Eigen::MatrixXd m = pairwise_iou(gts, anchor_boxes);
  CandidateMask out;
  out.mask = m.array() > threshold;
  return out;
}

Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& cost,
                           const CandidateMask& candidates) {
  if (cost.rows() != candidates.mask.rows() || cost.cols() != candidates.mask.cols()) {
    throw std::invalid_argument("apply_mask: shape mismatch");
  }
  Eigen::MatrixXd out = cost;
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
      if (!candidates.mask(i, j)) out(i, j) = uot::kSentinelCost;
    }
  }
  return out;
}

}  // namespace dga::cost
