#include "doctest.h"
#include "ppt/tensor.hpp"

#include <limits>
#include <stdexcept>

using ppt::Tensor;

TEST_CASE("shape and data length must agree") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.shape_str() == "[2x3]");
}

TEST_CASE("row-major 2d accessors") {
  Tensor t = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(t.at(0, 2) == 3.0);
  CHECK(t.at(1, 0) == 4.0);
  t.at(1, 1) = 9.0;
  CHECK(t[4] == 9.0);
}

TEST_CASE("identity and full constructors") {
  Tensor i = Tensor::identity(3);
  CHECK(i.at(1, 1) == 1.0);
  CHECK(i.at(0, 1) == 0.0);
  Tensor f = Tensor::full({2, 2}, 0.5);
  for (int64_t k = 0; k < f.size(); ++k) CHECK(f[k] == 0.5);
}

TEST_CASE("all_finite flags NaN and Inf") {
  Tensor t = Tensor::row({1.0, 2.0});
  CHECK(t.all_finite());
  t[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
}
