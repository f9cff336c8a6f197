#include "doctest.h"
#include "ppt/metrics.hpp"
#include "ppt/rng.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

using namespace ppt;

TEST_CASE("confusion counts land where they should") {
  auto cm = confusion({0, 1, 1}, {0, 0, 1}, 2);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(1, 0) == 0);
  CHECK(cm.at(1, 1) == 1);
  CHECK(cm.total() == 3);
}

TEST_CASE("perfect prediction is diagonal with miou 1") {
  auto cm = confusion({0, 1, 2, 1}, {0, 1, 2, 1}, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(cm.at(i, j) == 0);
    }
  CHECK(miou(cm).miou == doctest::Approx(1.0));
}

TEST_CASE("single systematic confusion fills one off-diagonal cell") {
  auto cm = confusion({1, 1, 1}, {0, 0, 0}, 2);
  CHECK(cm.at(0, 1) == 3);
  CHECK(cm.total() == 3);
}

TEST_CASE("hand miou case") {
  ConfusionMatrix cm(2);
  cm.at(0, 0) = 1;
  cm.at(0, 1) = 1;
  cm.at(1, 1) = 1;
  auto r = miou(cm);
  CHECK(r.per_class[0] == doctest::Approx(0.5));
  CHECK(r.per_class[1] == doctest::Approx(0.5));
  CHECK(r.miou == doctest::Approx(0.5));
}

TEST_CASE("classes absent from truth and prediction are excluded") {
  ConfusionMatrix cm(3);
  cm.at(0, 0) = 4;
  cm.at(1, 1) = 4;  // class 2 never appears
  auto r = miou(cm);
  CHECK(r.valid[2] == 0);
  CHECK(r.miou == doctest::Approx(1.0));

  ConfusionMatrix empty(3);
  CHECK_THROWS_AS(miou(empty), std::invalid_argument);
}

TEST_CASE("confusion rejects bad input") {
  CHECK_THROWS_AS(confusion({0, 1}, {0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(confusion({0, 5}, {0, 1}, 2), std::out_of_range);
}

TEST_CASE("miou is invariant to point order and merging splits") {
  Rng rng(8);
  std::vector<int> pred, truth;
  for (int i = 0; i < 500; ++i) {
    pred.push_back(static_cast<int>(rng.uniform_index(4)));
    truth.push_back(static_cast<int>(rng.uniform_index(4)));
  }
  auto base = miou(confusion(pred, truth, 4));

  std::vector<size_t> order(pred.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<int> pred2, truth2;
  for (size_t i : order) {
    pred2.push_back(pred[i]);
    truth2.push_back(truth[i]);
  }
  CHECK(miou(confusion(pred2, truth2, 4)).miou == base.miou);

  auto half1 = confusion(std::vector<int>(pred.begin(), pred.begin() + 250),
                         std::vector<int>(truth.begin(), truth.begin() + 250), 4);
  auto half2 = confusion(std::vector<int>(pred.begin() + 250, pred.end()),
                         std::vector<int>(truth.begin() + 250, truth.end()), 4);
  half1.merge(half2);
  CHECK(miou(half1).miou == base.miou);
}
