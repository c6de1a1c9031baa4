#include <doctest.h>

#include <cmath>
#include <random>

#include "dga/assignment.hpp"

using namespace dga;

namespace {

uot::TransportPlan plan_from_rows(const Eigen::MatrixXd& pi) {
  uot::TransportPlan plan;
  plan.pi = pi;
  plan.converged = true;
  return plan;
}

}  // namespace

TEST_CASE("worked decode example: 0.5/0.3/0.1/0.05/0.05 at 0.7/0.8") {
  Eigen::MatrixXd pi(1, 5);
  pi << 0.5, 0.3, 0.1, 0.05, 0.05;
  const auto result = assign::decode_assignment(plan_from_rows(pi));
  using assign::Label;
  CHECK(result.labels == std::vector<Label>{Label::kPositive, Label::kIgnore,
                                            Label::kNegative, Label::kNegative,
                                            Label::kNegative});
  CHECK(result.matched_gt[0] == 0);
}

TEST_CASE("single anchor holding all mass is positive, everything else negative") {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(1, 4);
  pi(0, 2) = 0.9;
  const auto result = assign::decode_assignment(plan_from_rows(pi));
  CHECK(result.labels[2] == assign::Label::kPositive);
  for (int j : {0, 1, 3}) CHECK(result.labels[j] == assign::Label::kNegative);
}

TEST_CASE("column competition resolves to the larger plan entry") {
  Eigen::MatrixXd pi(2, 2);
  // Both GTs rank anchor 0 as their head positive.
  pi << 0.4, 0.01,
        0.3, 0.02;
  const auto result = assign::decode_assignment(plan_from_rows(pi));
  CHECK(result.labels[0] == assign::Label::kPositive);
  CHECK(result.matched_gt[0] == 0);  // pi(0,0)=0.4 beats pi(1,0)=0.3
}

TEST_CASE("decode threshold validation and invariants") {
  CHECK_THROWS_AS(assign::decode_assignment(plan_from_rows(Eigen::MatrixXd::Ones(1, 2)),
                                            {assign::Strategy::kDynKStar, 0.9, 0.7}),
                  std::invalid_argument);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const int m = 1 + t % 3, n = 2 + t % 7;
    Eigen::MatrixXd pi = Eigen::MatrixXd::NullaryExpr(
        m, n, [&] { return u(rng) < 0.3 ? 0.0 : u(rng); });
    const auto decoded = assign::decode_assignment(plan_from_rows(pi));
    const auto result = assign::compute_weights(plan_from_rows(pi), decoded);

    // Partition.
    CHECK(result.count(assign::Label::kPositive) + result.count(assign::Label::kNegative) +
              result.count(assign::Label::kIgnore) ==
          n);
    std::vector<double> gt_max(static_cast<size_t>(m), 0.0);
    for (int j = 0; j < n; ++j) {
      if (result.labels[static_cast<size_t>(j)] == assign::Label::kPositive) {
        const int g = result.matched_gt[static_cast<size_t>(j)];
        CHECK(g >= 0);
        CHECK(g < m);
        const double w = result.weights[static_cast<size_t>(j)];
        CHECK(w > 0.0);
        CHECK(w <= 1.0);
        gt_max[static_cast<size_t>(g)] = std::max(gt_max[static_cast<size_t>(g)], w);
      } else {
        CHECK(result.matched_gt[static_cast<size_t>(j)] == -1);
      }
    }
    // Per GT with positives, the top weight is exactly 1.
    for (double w : gt_max) {
      if (w > 0.0) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("head rule: the densest anchor of each GT is positive") {
  Eigen::MatrixXd pi(1, 3);
  pi << 0.95, 0.04, 0.01;  // head alone exceeds th_pos
  const auto result = assign::decode_assignment(plan_from_rows(pi));
  CHECK(result.labels[0] == assign::Label::kPositive);
}

TEST_CASE("equal thresholds leave no ignore band") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double th : {0.7, 0.8}) {
    Eigen::MatrixXd pi = Eigen::MatrixXd::NullaryExpr(2, 8, [&] { return u(rng); });
    assign::DecodeOptions opts;
    opts.th_pos = opts.th_neg = th;
    CHECK(assign::decode_assignment(plan_from_rows(pi), opts)
              .count(assign::Label::kIgnore) == 0);
  }
}

TEST_CASE("raising th_pos never shrinks the positive set") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd pi = Eigen::MatrixXd::NullaryExpr(1, 10, [&] { return u(rng); });
    assign::DecodeOptions lo{assign::Strategy::kDynKStar, 0.5, 1.0};
    assign::DecodeOptions hi{assign::Strategy::kDynKStar, 0.8, 1.0};
    CHECK(assign::decode_assignment(plan_from_rows(pi), hi).count(assign::Label::kPositive) >=
          assign::decode_assignment(plan_from_rows(pi), lo).count(assign::Label::kPositive));
  }
}

TEST_CASE("one-hot densities: all strategies agree") {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(2, 6);
  pi(0, 1) = 1.0;
  pi(1, 4) = 1.0;
  assign::DecodeOptions star;
  assign::DecodeOptions fixk;
  fixk.strategy = assign::Strategy::kFixK;
  fixk.fix_k = 5;
  assign::DecodeOptions dynk;
  dynk.strategy = assign::Strategy::kDynK;
  dynk.dyn_k_iou = Eigen::MatrixXd::Constant(2, 6, 0.4);
  const auto a = assign::decode_assignment(plan_from_rows(pi), star);
  const auto b = assign::decode_assignment(plan_from_rows(pi), fixk);
  const auto c = assign::decode_assignment(plan_from_rows(pi), dynk);
  CHECK(a.labels == b.labels);
  CHECK(a.labels == c.labels);
  CHECK(a.matched_gt == b.matched_gt);
  CHECK(a.matched_gt == c.matched_gt);
}

TEST_CASE("weight normalization examples") {
  Eigen::MatrixXd pi(1, 3);
  pi << 0.5, 0.25, 0.0;
  assign::DecodeOptions opts;
  opts.th_pos = opts.th_neg = 1.0;  // everything nonzero positive
  auto result = assign::compute_weights(
      plan_from_rows(pi), assign::decode_assignment(plan_from_rows(pi), opts));
  CHECK(result.weights[0] == doctest::Approx(1.0));
  CHECK(result.weights[1] == doctest::Approx(0.5));

  Eigen::MatrixXd pi2(1, 3);
  pi2 << 0.4, 0.4, 0.2;
  result = assign::compute_weights(
      plan_from_rows(pi2), assign::decode_assignment(plan_from_rows(pi2), opts));
  CHECK(result.weights[0] == doctest::Approx(1.0));
  CHECK(result.weights[1] == doctest::Approx(1.0));
  CHECK(result.weights[2] == doctest::Approx(0.5));
}

TEST_CASE("uot loss terms") {
  uot::TransportProblem p;
  p.cost = Eigen::MatrixXd::Zero(2, 2);
  p.a = Eigen::VectorXd::Ones(2);
  p.b = Eigen::VectorXd::Ones(2);
  p.epsilon = 0.1;

  SUBCASE("exact marginals, zero cost: D2 = 0 and plain transport = 0") {
    const auto plan = plan_from_rows(Eigen::MatrixXd::Constant(2, 2, 0.5));
    const auto loss = assign::uot_loss(plan, p, {}, /*plain_transport=*/true);
    CHECK(loss.transport == 0.0);
    CHECK(loss.d2_l2 == doctest::Approx(0.0));
    CHECK(loss.d1_focal == doctest::Approx(0.0));  // a_hat = 1 exactly
  }
  SUBCASE("D2 equals the hand-computed L2 norm") {
    Eigen::MatrixXd pi(2, 2);
    pi << 0.3, 0.1, 0.2, 0.4;
    const auto loss = assign::uot_loss(plan_from_rows(pi), p);
    const double expect = std::sqrt(std::pow(0.5 - 1.0, 2) + std::pow(0.5 - 1.0, 2));
    CHECK(loss.d2_l2 == doctest::Approx(expect).epsilon(1e-12));
    CHECK(loss.total ==
          doctest::Approx(loss.transport + loss.d1_focal + loss.d2_l2));
  }
  SUBCASE("shape mismatch throws") {
    CHECK_THROWS_AS(assign::uot_loss(plan_from_rows(Eigen::MatrixXd::Ones(1, 2)), p),
                    std::invalid_argument);
  }
}

TEST_CASE("detection loss") {
  const std::vector<BBox> gts = {BBox(0, 0, 10, 10)};

  SUBCASE("perfect positives contribute no localization loss") {
    assign::AssignmentResult a;
    a.labels = {assign::Label::kPositive, assign::Label::kNegative};
    a.matched_gt = {0, -1};
    a.weights = {1.0, 0.0};
    const std::vector<double> scores = {1.0 - 1e-9, 1e-9};
    const std::vector<BBox> preds = {gts[0], BBox(50, 50, 60, 60)};
    const auto loss = assign::detection_loss(a, scores, preds, gts, 0.0);
    CHECK(loss.loc == doctest::Approx(0.0));
    CHECK(loss.cls == doctest::Approx(0.0).epsilon(1e-6));
    CHECK_FALSE(loss.no_positives);
  }

  SUBCASE("positive term is invariant to weight scaling") {
    // sum w_j FL_j / sum w_j is unchanged when every w doubles.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    double num = 0.0, den = 0.0, num2 = 0.0, den2 = 0.0;
    for (int j = 0; j < 5; ++j) {
      const double w = u(rng), s = u(rng);
      const double fl = -0.25 * std::pow(1.0 - s, 2.0) * std::log(s);
      num += w * fl;
      den += w;
      num2 += 2.0 * w * fl;
      den2 += 2.0 * w;
    }
    CHECK(num / den == doctest::Approx(num2 / den2).epsilon(1e-12));
  }

  SUBCASE("two-anchor hand case") {
    assign::AssignmentResult a;
    a.labels = {assign::Label::kPositive, assign::Label::kNegative};
    a.matched_gt = {0, -1};
    a.weights = {1.0, 0.0};
    const std::vector<double> scores = {0.8, 0.3};
    const std::vector<BBox> preds = {BBox(0, 0, 10, 5), BBox(50, 50, 60, 60)};
    assign::DetectionLossOptions opts;
    const auto loss = assign::detection_loss(a, scores, preds, gts, 2.0, opts);

    const double fl_pos = -0.25 * std::pow(0.2, 2.0) * std::log(0.8);
    const double fl_neg = -0.75 * std::pow(0.3, 2.0) * std::log(0.7);
    const double norm = 1.0 + 1.0;  // one positive weight + one negative
    CHECK(loss.cls == doctest::Approx((fl_pos + fl_neg) / norm).epsilon(1e-12));
    const double giou_loss = 1.0 - giou(preds[0], gts[0]);
    CHECK(loss.loc == doctest::Approx(giou_loss / norm).epsilon(1e-12));
    CHECK(loss.total ==
          doctest::Approx(loss.cls + opts.gamma1 * loss.loc + opts.gamma2 * 2.0));
  }

  SUBCASE("no positives flags the scene and loc is zero") {
    assign::AssignmentResult a;
    a.labels = {assign::Label::kNegative, assign::Label::kNegative};
    a.matched_gt = {-1, -1};
    a.weights = {0.0, 0.0};
    const auto loss = assign::detection_loss(a, {0.2, 0.4},
                                             {BBox(0, 0, 1, 1), BBox(1, 1, 2, 2)}, gts, 0.0);
    CHECK(loss.no_positives);
    CHECK(loss.loc == 0.0);
    CHECK(loss.cls > 0.0);
  }
}
