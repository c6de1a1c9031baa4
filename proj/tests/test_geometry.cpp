#include <doctest.h>

#include <random>

#include "dga/geometry.hpp"

using namespace dga;

TEST_CASE("bbox construction rejects degenerate boxes") {
  CHECK_THROWS_AS(BBox(0, 0, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(BBox(0, 0, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(BBox(2, 0, 1, 1), std::invalid_argument);
  const double nan = std::nan("");
  CHECK_THROWS_AS(BBox(0, 0, nan, 1), std::invalid_argument);
}

TEST_CASE("iou basics") {
  const BBox b(1, 2, 5, 9);
  CHECK(iou(b, b) == doctest::Approx(1.0));
  CHECK(iou(BBox(0, 0, 1, 1), BBox(5, 5, 6, 6)) == 0.0);
  // inter = 1x2 = 2, union = 4 + 4 - 2 = 6
  CHECK(iou(BBox(0, 0, 2, 2), BBox(1, 0, 3, 2)) == doctest::Approx(4.0 / 12.0));
}

TEST_CASE("giou basics") {
  const BBox b(1, 2, 5, 9);
  CHECK(giou(b, b) == doctest::Approx(1.0));
  // touching unit squares: union fills the 2x1 enclosing box, iou = 0
  CHECK(giou(BBox(0, 0, 1, 1), BBox(1, 0, 2, 1)) == doctest::Approx(0.0));
  // far separation drives giou negative
  CHECK(giou(BBox(0, 0, 1, 1), BBox(100, 100, 101, 101)) < 0.0);
  CHECK(giou(BBox(0, 0, 1, 1), BBox(1000, 1000, 1001, 1001)) <
        giou(BBox(0, 0, 1, 1), BBox(100, 100, 101, 101)));
}

TEST_CASE("pairwise_iou matches elementwise loop and rejects empty input") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::vector<BBox> boxes;
  for (int i = 0; i < 5; ++i) {
    const double x = u(rng), y = u(rng);
    boxes.emplace_back(x, y, x + 1.0 + u(rng), y + 1.0 + u(rng));
  }
  const Eigen::MatrixXd m = pairwise_iou(boxes, boxes);
  for (int i = 0; i < 5; ++i) {
    CHECK(m(i, i) == doctest::Approx(1.0));
    for (int j = 0; j < 5; ++j) {
      CHECK(m(i, j) == doctest::Approx(iou(boxes[i], boxes[j])));
    }
  }
  CHECK_THROWS_AS(pairwise_iou(std::vector<BBox>{}, boxes), std::invalid_argument);
}

TEST_CASE("iou and giou properties on random boxes") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  std::uniform_real_distribution<double> shift(-30.0, 30.0);
  for (int t = 0; t < 500; ++t) {
    const double ax = u(rng), ay = u(rng), bx = u(rng), by = u(rng);
    const BBox a(ax, ay, ax + 0.5 + u(rng), ay + 0.5 + u(rng));
    const BBox b(bx, by, bx + 0.5 + u(rng), by + 0.5 + u(rng));
    const double i1 = iou(a, b), g1 = giou(a, b);
    CHECK(i1 == doctest::Approx(iou(b, a)));
    CHECK(g1 == doctest::Approx(giou(b, a)));
    CHECK(i1 >= 0.0);
    CHECK(i1 <= 1.0);
    CHECK(g1 > -1.0);
    CHECK(g1 <= i1 + 1e-12);
    const double dx = shift(rng), dy = shift(rng);
    const BBox a2(a.x1 + dx, a.y1 + dy, a.x2 + dx, a.y2 + dy);
    const BBox b2(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy);
    CHECK(iou(a2, b2) == doctest::Approx(i1));
    CHECK(giou(a2, b2) == doctest::Approx(g1));
  }
}
