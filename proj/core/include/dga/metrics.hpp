#pragma once

#include <vector>

#include "dga/geometry.hpp"

namespace dga::metrics {

struct ScoredBox {
  BBox box;
  double score = 0.0;
};

/// One evaluated image: detections plus GT boxes with crowd flags (GT
/// overlapping another GT at IoU > 0.5).
struct ImageEval {
  std::vector<ScoredBox> detections;
  std::vector<BBox> gts;
  std::vector<bool> gt_crowd;  // empty means all sparse
};

struct MatchResult {
  std::vector<int> det_to_gt;  // per detection, matched GT index or -1
  int true_positives = 0;
};

struct EvalReport {
  double ap50 = 0.0;
  double mr = 0.0;
  double ji = 0.0;
  double recall_sparse = 0.0;
  double recall_crowd = 0.0;
  int true_positives = 0;
  int false_positives = 0;
  int gt_count = 0;
};

struct MatchOptions {
  double iou_threshold = 0.5;
  // Hungarian-style optimal matching for JI sensitivity checks; the default
  // greedy pass is the standard evaluation protocol.
  bool optimal = false;
};

/// Greedy score-order matching: each detection takes the unmatched GT with
/// the highest IoU >= threshold, one-to-one. Detections must arrive sorted
/// by score descending (this function sorts defensively).
MatchResult match_detections(const std::vector<ScoredBox>& dets,
                             const std::vector<BBox>& gts,
                             const MatchOptions& opts = {});

/// Area under the all-point interpolated precision-recall curve at IoU 0.5,
/// over a set of images. Throws std::invalid_argument on zero total GTs.
double ap50(const std::vector<ImageEval>& images);

/// Log-average miss rate over 9 FPPI points log-spaced in [1e-2, 1].
double log_average_miss_rate(const std::vector<ImageEval>& images);

/// |matches| / (|dets| + |gts| - |matches|) at IoU 0.5 for one image whose
/// detections were already thresholded by the caller. Both-empty is 1.0.
double jaccard_index(const std::vector<ScoredBox>& dets,
                     const std::vector<BBox>& gts,
                     const MatchOptions& opts = {});

/// Full report over a set of images; JI is the per-image mean over a score
/// threshold sweep keeping the best value (dataset_level_ji aggregates
/// matches across images instead).
EvalReport evaluate(const std::vector<ImageEval>& images,
                    bool dataset_level_ji = false);

}  // namespace dga::metrics
