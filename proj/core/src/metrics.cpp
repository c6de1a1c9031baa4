#include "dga/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace dga::metrics {

namespace {

std::vector<size_t> by_score_desc(const std::vector<ScoredBox>& dets) {
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

// Kuhn's augmenting-path maximum bipartite matching over IoU-feasible edges.
bool try_augment(size_t det, const std::vector<std::vector<size_t>>& edges,
                 std::vector<bool>& visited, std::vector<int>& gt_owner) {
  for (size_t gt : edges[det]) {
    if (visited[gt]) continue;
    visited[gt] = true;
    if (gt_owner[gt] < 0 ||
        try_augment(static_cast<size_t>(gt_owner[gt]), edges, visited, gt_owner)) {
      gt_owner[gt] = static_cast<int>(det);
      return true;
    }
  }
  return false;
}

}  // namespace

MatchResult match_detections(const std::vector<ScoredBox>& dets,
                             const std::vector<BBox>& gts,
                             const MatchOptions& opts) {
  MatchResult out;
  out.det_to_gt.assign(dets.size(), -1);
  if (dets.empty() || gts.empty()) return out;

  const std::vector<size_t> order = by_score_desc(dets);

  if (opts.optimal) {
    std::vector<std::vector<size_t>> edges(dets.size());
    for (size_t d = 0; d < dets.size(); ++d) {
      for (size_t g = 0; g < gts.size(); ++g) {
        if (iou(dets[d].box, gts[g]) >= opts.iou_threshold) edges[d].push_back(g);
      }
    }
    std::vector<int> gt_owner(gts.size(), -1);
    for (size_t d : order) {
      std::vector<bool> visited(gts.size(), false);
      if (try_augment(d, edges, visited, gt_owner)) ++out.true_positives;
    }
    for (size_t g = 0; g < gts.size(); ++g) {
      if (gt_owner[g] >= 0) out.det_to_gt[static_cast<size_t>(gt_owner[g])] = static_cast<int>(g);
    }
    return out;
  }

  std::vector<bool> gt_taken(gts.size(), false);
  for (size_t d : order) {
    int best_gt = -1;
    double best_v = 0.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) continue;
      const double v = iou(dets[d].box, gts[g]);
      if (v >= opts.iou_threshold && (best_gt < 0 || v > best_v)) {
        best_v = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_taken[static_cast<size_t>(best_gt)] = true;
      out.det_to_gt[d] = best_gt;
      ++out.true_positives;
    }
  }
  return out;
}

namespace {

// Pooled (score, is_tp) pairs over all images, sorted by score descending.
std::vector<std::pair<double, bool>> pooled_detections(
    const std::vector<ImageEval>& images) {
  std::vector<std::pair<double, bool>> pool;
  for (const ImageEval& img : images) {
    const MatchResult match = match_detections(img.detections, img.gts);
    for (size_t d = 0; d < img.detections.size(); ++d) {
      pool.emplace_back(img.detections[d].score, match.det_to_gt[d] >= 0);
    }
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  return pool;
}

int total_gts(const std::vector<ImageEval>& images) {
  int n = 0;
  for (const ImageEval& img : images) n += static_cast<int>(img.gts.size());
  return n;
}

}  // namespace

double ap50(const std::vector<ImageEval>& images) {
  const int gt_count = total_gts(images);
  if (gt_count == 0) throw std::invalid_argument("ap50: no ground truth");

  const auto pool = pooled_detections(images);
  std::vector<double> precision, recall;
  int tp = 0, fp = 0;
  for (const auto& [score, is_tp] : pool) {
    (is_tp ? tp : fp) += 1;
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / gt_count);
  }
  // All-point interpolation: running max of precision from the right.
  double ap = 0.0, prev_recall = 0.0, max_prec = 0.0;
  std::vector<double> interp(precision.size());
  for (size_t k = precision.size(); k-- > 0;) {
    max_prec = std::max(max_prec, precision[k]);
    interp[k] = max_prec;
  }
  for (size_t k = 0; k < interp.size(); ++k) {
    ap += (recall[k] - prev_recall) * interp[k];
    prev_recall = recall[k];
  }
  return ap;
}

double log_average_miss_rate(const std::vector<ImageEval>& images) {
  const int gt_count = total_gts(images);
  if (gt_count == 0) throw std::invalid_argument("log_average_miss_rate: no ground truth");
  const int image_count = static_cast<int>(images.size());

  const auto pool = pooled_detections(images);
  std::vector<double> fppi, miss;
  int tp = 0, fp = 0;
  for (const auto& [score, is_tp] : pool) {
    (is_tp ? tp : fp) += 1;
    fppi.push_back(static_cast<double>(fp) / image_count);
    miss.push_back(1.0 - static_cast<double>(tp) / gt_count);
  }

  double log_sum = 0.0;
  for (int p = 0; p < 9; ++p) {
    const double ref = std::pow(10.0, -2.0 + 2.0 * p / 8.0);
    double mr = 1.0;
    for (size_t k = 0; k < fppi.size(); ++k) {
      if (fppi[k] <= ref) mr = std::min(mr, miss[k]);
    }
    log_sum += std::log(std::clamp(mr, 1e-10, 1.0));
  }
  return std::exp(log_sum / 9.0);
}

double jaccard_index(const std::vector<ScoredBox>& dets,
                     const std::vector<BBox>& gts, const MatchOptions& opts) {
  if (dets.empty() && gts.empty()) return 1.0;
  const MatchResult match = match_detections(dets, gts, opts);
  const double matches = match.true_positives;
  return matches / (static_cast<double>(dets.size()) + static_cast<double>(gts.size()) - matches);
}

EvalReport evaluate(const std::vector<ImageEval>& images, bool dataset_level_ji) {
  EvalReport report;
  report.gt_count = total_gts(images);
  report.ap50 = ap50(images);
  report.mr = log_average_miss_rate(images);

  // Recall split plus TP/FP counts on the unthresholded sets.
  int sparse_total = 0, sparse_hit = 0, crowd_total = 0, crowd_hit = 0;
  for (const ImageEval& img : images) {
    const MatchResult match = match_detections(img.detections, img.gts);
    report.true_positives += match.true_positives;
    report.false_positives +=
        static_cast<int>(img.detections.size()) - match.true_positives;
    std::vector<bool> gt_matched(img.gts.size(), false);
    for (int g : match.det_to_gt) {
      if (g >= 0) gt_matched[static_cast<size_t>(g)] = true;
    }
    for (size_t g = 0; g < img.gts.size(); ++g) {
      const bool crowd = g < img.gt_crowd.size() && img.gt_crowd[g];
      (crowd ? crowd_total : sparse_total) += 1;
      if (gt_matched[g]) (crowd ? crowd_hit : sparse_hit) += 1;
    }
  }
  report.recall_sparse = sparse_total ? static_cast<double>(sparse_hit) / sparse_total : 0.0;
  report.recall_crowd = crowd_total ? static_cast<double>(crowd_hit) / crowd_total : 0.0;

  // Best JI over a score-threshold sweep.
  std::set<double> thresholds{0.0};
  for (const ImageEval& img : images) {
    for (const ScoredBox& d : img.detections) thresholds.insert(d.score);
  }
  double best_ji = 0.0;
  for (double thr : thresholds) {
    if (dataset_level_ji) {
      double matches = 0.0, dets = 0.0;
      for (const ImageEval& img : images) {
        std::vector<ScoredBox> keep;
        for (const ScoredBox& d : img.detections) {
          if (d.score >= thr) keep.push_back(d);
        }
        matches += match_detections(keep, img.gts).true_positives;
        dets += static_cast<double>(keep.size());
      }
      const double denom = dets + report.gt_count - matches;
      best_ji = std::max(best_ji, denom > 0.0 ? matches / denom : 1.0);
    } else {
      double sum = 0.0;
      for (const ImageEval& img : images) {
        std::vector<ScoredBox> keep;
        for (const ScoredBox& d : img.detections) {
          if (d.score >= thr) keep.push_back(d);
        }
        sum += jaccard_index(keep, img.gts);
      }
      best_ji = std::max(best_ji, sum / static_cast<double>(images.size()));
    }
  }
  report.ji = best_ji;
  return report;
}

}  // namespace dga::metrics
