#include <doctest.h>

#include <cmath>

#include "dga/metrics.hpp"

using namespace dga;
using metrics::ImageEval;
using metrics::ScoredBox;

namespace {

BBox unit_at(double x, double y) { return BBox(x, y, x + 10.0, y + 10.0); }

// One image where det i exactly covers GT i.
ImageEval perfect_image(int count) {
  ImageEval img;
  for (int i = 0; i < count; ++i) {
    img.gts.push_back(unit_at(20.0 * i, 0.0));
    img.detections.push_back({unit_at(20.0 * i, 0.0), 0.9 - 0.01 * i});
  }
  return img;
}

}  // namespace

TEST_CASE("greedy matching") {
  SUBCASE("perfect one-to-one") {
    const ImageEval img = perfect_image(4);
    const auto match = metrics::match_detections(img.detections, img.gts);
    CHECK(match.true_positives == 4);
    for (int i = 0; i < 4; ++i) CHECK(match.det_to_gt[static_cast<size_t>(i)] == i);
  }
  SUBCASE("duplicate detections yield one TP one FP") {
    const std::vector<ScoredBox> dets = {{unit_at(0, 0), 0.9}, {unit_at(0, 0), 0.8}};
    const std::vector<BBox> gts = {unit_at(0, 0)};
    const auto match = metrics::match_detections(dets, gts);
    CHECK(match.true_positives == 1);
    CHECK(match.det_to_gt[0] == 0);
    CHECK(match.det_to_gt[1] == -1);
  }
  SUBCASE("3x3 hand-traced case") {
    // GT0 at 0, GT1 at 6 (IoU(gt0,gt1-region dets) engineered), GT2 at 40.
    const std::vector<BBox> gts = {BBox(0, 0, 10, 10), BBox(6, 0, 16, 10),
                                   BBox(40, 0, 50, 10)};
    const std::vector<ScoredBox> dets = {
        {BBox(1, 0, 11, 10), 0.9},   // IoU 9/11=.818 gt0, 5/15=.333 gt1
        {BBox(5, 0, 15, 10), 0.8},   // IoU 5/15 gt0, 9/11 gt1
        {BBox(41, 0, 51, 10), 0.7},  // IoU .818 gt2
    };
    const auto match = metrics::match_detections(dets, gts);
    CHECK(match.true_positives == 3);
    CHECK(match.det_to_gt == std::vector<int>{0, 1, 2});
  }
}

TEST_CASE("optimal matching recovers greedy losses") {
  // Greedy sends det0 to gt1 (its higher IoU) stranding det1, which clears
  // 0.5 only against gt1; optimal matches both.
  const std::vector<BBox> gts = {BBox(0, 0, 10, 10), BBox(3, 0, 13, 10)};
  const std::vector<ScoredBox> dets = {{BBox(2, 0, 12, 10), 0.9},
                                       {BBox(4, 0, 14, 10), 0.8}};
  metrics::MatchOptions opts;
  opts.iou_threshold = 0.5;
  const int greedy = metrics::match_detections(dets, gts, opts).true_positives;
  opts.optimal = true;
  const int optimal = metrics::match_detections(dets, gts, opts).true_positives;
  CHECK(optimal >= greedy);
  CHECK(optimal == 2);
}

TEST_CASE("ap50") {
  SUBCASE("perfect detections give 1.0") {
    CHECK(metrics::ap50({perfect_image(5)}) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("all false positives give 0.0") {
    ImageEval img;
    img.gts = {unit_at(0, 0)};
    img.detections = {{unit_at(100, 100), 0.9}, {unit_at(200, 200), 0.8}};
    CHECK(metrics::ap50({img}) == 0.0);
  }
  SUBCASE("hand-computed interpolated AP: TP TP FP TP over 3 GTs") {
    ImageEval img;
    img.gts = {unit_at(0, 0), unit_at(20, 0), unit_at(40, 0)};
    img.detections = {{unit_at(0, 0), 0.9},
                      {unit_at(20, 0), 0.8},
                      {unit_at(200, 200), 0.7},
                      {unit_at(40, 0), 0.6}};
    // PR points: (1/3,1), (2/3,1), (2/3,2/3), (1, 3/4); interpolated:
    // AP = 1/3*1 + 1/3*1 + 1/3*(3/4) = 11/12.
    CHECK(metrics::ap50({img}) == doctest::Approx(11.0 / 12.0).epsilon(1e-12));
  }
  SUBCASE("zero GTs is an error") {
    ImageEval img;
    img.detections = {{unit_at(0, 0), 0.9}};
    CHECK_THROWS_AS(metrics::ap50({img}), std::invalid_argument);
  }
  SUBCASE("AP is invariant to monotone score rescaling") {
    ImageEval img;
    img.gts = {unit_at(0, 0), unit_at(20, 0)};
    img.detections = {{unit_at(0, 0), 0.9}, {unit_at(100, 0), 0.5}, {unit_at(20, 0), 0.4}};
    const double base = metrics::ap50({img});
    for (auto& d : img.detections) d.score = std::sqrt(d.score) * 0.5;
    CHECK(metrics::ap50({img}) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("log-average miss rate") {
  SUBCASE("perfect detections give ~0") {
    CHECK(metrics::log_average_miss_rate({perfect_image(5)}) < 1e-9);
  }
  SUBCASE("no detections give 1.0") {
    ImageEval img;
    img.gts = {unit_at(0, 0)};
    CHECK(metrics::log_average_miss_rate({img}) == doctest::Approx(1.0));
  }
  SUBCASE("hand evaluation at the nine FPPI points") {
    // One image, 2 GTs. Detections: TP(0.9), FP(0.8), TP(0.7).
    ImageEval img;
    img.gts = {unit_at(0, 0), unit_at(20, 0)};
    img.detections = {{unit_at(0, 0), 0.9},
                      {unit_at(100, 100), 0.8},
                      {unit_at(20, 0), 0.7}};
    // Sweep: k=1: fppi 0, mr 0.5; k=2: fppi 1, mr 0.5; k=3: fppi 1, mr 0.
    // Points below fppi 1 see mr 0.5; the point at fppi 1 sees mr 0 (clamped
    // to 1e-10 in log space).
    const double expect =
        std::exp((8.0 * std::log(0.5) + std::log(1e-10)) / 9.0);
    CHECK(metrics::log_average_miss_rate({img}) == doctest::Approx(expect).epsilon(1e-9));
  }
  SUBCASE("detecting a missed GT with top score never raises MR") {
    ImageEval img;
    img.gts = {unit_at(0, 0), unit_at(20, 0)};
    img.detections = {{unit_at(0, 0), 0.9}};
    const double before = metrics::log_average_miss_rate({img});
    img.detections.push_back({unit_at(20, 0), 0.95});
    CHECK(metrics::log_average_miss_rate({img}) <= before);
  }
}

TEST_CASE("jaccard index") {
  SUBCASE("perfect set gives 1.0") {
    const ImageEval img = perfect_image(4);
    CHECK(metrics::jaccard_index(img.detections, img.gts) == doctest::Approx(1.0));
  }
  SUBCASE("no detections against GTs gives 0.0") {
    CHECK(metrics::jaccard_index({}, {unit_at(0, 0)}) == 0.0);
  }
  SUBCASE("both empty is defined as 1.0") {
    CHECK(metrics::jaccard_index({}, {}) == 1.0);
  }
  SUBCASE("8 detections, 10 GTs, 7 matches -> 7/11") {
    std::vector<BBox> gts;
    std::vector<ScoredBox> dets;
    for (int i = 0; i < 10; ++i) gts.push_back(unit_at(20.0 * i, 0.0));
    for (int i = 0; i < 7; ++i) dets.push_back({unit_at(20.0 * i, 0.0), 0.9});
    dets.push_back({unit_at(500, 500), 0.8});  // unmatched extra
    CHECK(metrics::jaccard_index(dets, gts) == doctest::Approx(7.0 / 11.0).epsilon(1e-12));
  }
  SUBCASE("adding a duplicate detection never increases JI") {
    const ImageEval img = perfect_image(3);
    const double base = metrics::jaccard_index(img.detections, img.gts);
    auto dets = img.detections;
    dets.push_back(dets.front());
    CHECK(metrics::jaccard_index(dets, img.gts) <= base);
  }
}

TEST_CASE("evaluate aggregates recall split and counts") {
  ImageEval img;
  // Two crowd GTs (IoU > 0.5 with each other) plus one sparse GT.
  img.gts = {BBox(0, 0, 10, 10), BBox(2, 0, 12, 10), BBox(50, 0, 60, 10)};
  img.gt_crowd = {true, true, false};
  // Detect the sparse GT and one crowd GT.
  img.detections = {{BBox(0, 0, 10, 10), 0.9}, {BBox(50, 0, 60, 10), 0.8}};
  const metrics::EvalReport report = metrics::evaluate({img});
  CHECK(report.recall_sparse == doctest::Approx(1.0));
  CHECK(report.recall_crowd == doctest::Approx(0.5));
  CHECK(report.true_positives == 2);
  CHECK(report.false_positives == 0);
  CHECK(report.gt_count == 3);
  CHECK(report.ji > 0.0);
  CHECK(report.ap50 > 0.0);
}
