#include "doctest.h"
#include "ppt/autodiff.hpp"
#include "ppt/rng.hpp"

#include <cmath>
#include <stdexcept>

using namespace ppt;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("matmul identity is bitwise exact") {
  Tape t;
  Var i2 = t.constant(Tensor::identity(2));
  Var a = t.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  Var c = matmul(i2, a);
  for (int64_t k = 0; k < 4; ++k) CHECK(c.value()[k] == a.value()[k]);
}

TEST_CASE("matmul hand case 1x2 times 2x1") {
  Tape t;
  Var a = t.constant(Tensor::matrix({{1, 2}}));
  Var b = t.constant(Tensor::matrix({{3}, {4}}));
  Var c = matmul(a, b);
  CHECK(c.value().shape() == std::vector<int>{1, 1});
  CHECK(c.value()[0] == doctest::Approx(11.0));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape t;
  Var a = t.constant(Tensor({2, 3}));
  Var b = t.constant(Tensor({2, 2}));
  try {
    matmul(a, b);
    FAIL("expected a dimension error");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[2x2]") != std::string::npos);
  }
}

TEST_CASE("matmul gradient matches hand result and oracle") {
  // d sum(A.B) / dA for A=[[1,1]], B=[[2],[5]] is [[2,5]]
  Tape t;
  Var a = t.input(Tensor::matrix({{1, 1}}), true);
  Var b = t.constant(Tensor::matrix({{2}, {5}}));
  Var s = sum_all(matmul(a, b));
  t.backward(s);
  CHECK(a.grad()[0] == doctest::Approx(2.0));
  CHECK(a.grad()[1] == doctest::Approx(5.0));

  const Tensor bt = Tensor::matrix({{2}, {5}});
  double err = check_gradients(
      [&bt](Tape& tp, Var x) { return sum_all(matmul(x, tp.constant(bt))); },
      Tensor::matrix({{1, 1}}));
  CHECK(err < 1e-5);
}

TEST_CASE("elementwise forward cases") {
  Tape t;
  Var r = relu(t.constant(Tensor::row({-1, 0, 2})));
  CHECK(r.value()[0] == 0.0);
  CHECK(r.value()[1] == 0.0);
  CHECK(r.value()[2] == 2.0);

  Var s = add(t.constant(Tensor::row({1, 2})), t.constant(Tensor::row({3, 4})));
  CHECK(s.value()[0] == 4.0);
  CHECK(s.value()[1] == 6.0);
}

TEST_CASE("grad of sum(exp(x)) at zero is one") {
  Tape t;
  Var x = t.input(Tensor::row({0.0}), true);
  Var y = sum_all(ppt::exp(x));
  t.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(1.0));
  double err = check_gradients([](Tape&, Var v) { return sum_all(ppt::exp(v)); }, Tensor::row({0.0}));
  CHECK(err < 1e-5);
}

TEST_CASE("log and sqrt reject negative input") {
  Tape t;
  CHECK_THROWS_AS(ppt::log(t.constant(Tensor::row({-1.0}))), std::domain_error);
  CHECK_THROWS_AS(ppt::sqrt(t.constant(Tensor::row({-0.5}))), std::domain_error);
  CHECK_THROWS_AS(ppt::log(t.constant(Tensor::row({0.0}))), std::domain_error);
}

TEST_CASE("exp stays finite for huge inputs") {
  Tape t;
  Var y = ppt::exp(t.constant(Tensor::row({1e9})));
  CHECK(y.value().all_finite());
}

TEST_CASE("reduce hand cases") {
  Tape t;
  Var m = reduce(ReduceOp::mean, t.constant(Tensor::row({1, 3})), 1);
  CHECK(m.value()[0] == doctest::Approx(2.0));
  Var v = reduce(ReduceOp::var, t.constant(Tensor::row({1, 3})), 1);
  CHECK(v.value()[0] == doctest::Approx(1.0));  // biased, N=2
  Var z = sum_all(t.constant(Tensor({3, 4})));
  CHECK(z.value()[0] == 0.0);
}

TEST_CASE("reduce rejects bad axis") {
  Tape t;
  Var x = t.constant(Tensor({2, 3}));
  CHECK_THROWS_AS(reduce(ReduceOp::sum, x, 2), std::invalid_argument);
  Var e = t.constant(Tensor({2, 0}));
  CHECK_THROWS_AS(reduce(ReduceOp::sum, e, 1), std::invalid_argument);
}

TEST_CASE("log_softmax symmetry and shift invariance") {
  Tape t;
  Var y = log_softmax(t.constant(Tensor::matrix({{0, 0}})));
  CHECK(y.value()[0] == doctest::Approx(-std::log(2.0)));
  CHECK(y.value()[1] == doctest::Approx(-std::log(2.0)));

  Rng rng(11);
  Tensor x = random_tensor({3, 5}, rng, -2, 2);
  Tensor xs = x;
  for (int j = 0; j < 5; ++j) xs.at(1, j) += 7.0;
  Tape t2;
  Var a = log_softmax(t2.constant(x));
  Var b = log_softmax(t2.constant(xs));
  for (int j = 0; j < 5; ++j) CHECK(std::abs(a.value().at(1, j) - b.value().at(1, j)) <= 1e-12);
}

TEST_CASE("log_softmax rows exponentiate to one") {
  Rng rng(5);
  Tape t;
  Var y = log_softmax(t.constant(random_tensor({4, 7}, rng, -30, 30)));
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int j = 0; j < 7; ++j) s += std::exp(y.value().at(i, j));
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("log_softmax gradient vs finite differences") {
  Rng rng(17);
  Tensor x = random_tensor({3, 4}, rng, -1, 1);
  // weighted sum makes the row gradients non-trivial
  Tensor w = random_tensor({3, 4}, rng, -1, 1);
  double err = check_gradients(
      [&w](Tape& tp, Var v) { return sum_all(mul(log_softmax(v), tp.constant(w))); }, x);
  CHECK(err < 1e-6);
}

TEST_CASE("masked_fill forward and identity") {
  Tape t;
  Tensor mask({3}, {0, 1, 0});
  Var y = masked_fill(t.constant(Tensor({3}, {1, 2, 3})), mask, -1e9);
  CHECK(y.value()[0] == 1.0);
  CHECK(y.value()[1] == -1e9);
  CHECK(y.value()[2] == 3.0);

  Tensor none({3}, {0, 0, 0});
  Var z = masked_fill(t.constant(Tensor({3}, {1, 2, 3})), none, -1e9);
  for (int64_t i = 0; i < 3; ++i) CHECK(z.value()[i] == static_cast<double>(i + 1));
}

TEST_CASE("masked_fill blocks gradient at masked positions") {
  Tensor mask({3}, {0, 1, 0});
  Tape t;
  Var x = t.input(Tensor({3}, {1, 2, 3}), true);
  Var y = sum_all(mul(masked_fill(x, mask, -5.0), x));
  t.backward(y);
  // position 1 contributes -5*x so d/dx = -5; the masked path itself is blocked
  CHECK(x.grad()[1] == doctest::Approx(-5.0));
  double err = check_gradients(
      [&mask](Tape&, Var v) { return sum_all(masked_fill(v, mask, -5.0)); }, Tensor({3}, {1, 2, 3}));
  CHECK(err < 1e-5);
  // d masked_fill / dx at a masked position is exactly zero
  Tape t2;
  Var x2 = t2.input(Tensor({3}, {1, 2, 3}), true);
  t2.backward(sum_all(masked_fill(x2, mask, -5.0)));
  CHECK(x2.grad()[1] == 0.0);
}

TEST_CASE("check_gradients hand cases") {
  // f = sum(x^2) at x=3: gradient 6 on both routes
  Tensor x = Tensor::row({3.0});
  double err = check_gradients([](Tape&, Var v) { return sum_all(mul(v, v)); }, x);
  CHECK(err < 1e-8);
  // constant f: both gradients zero
  double cerr = check_gradients([](Tape& tp, Var v) {
    (void)v;
    return tp.constant(Tensor::scalar(4.0));
  }, x);
  CHECK(cerr == 0.0);
}

TEST_CASE("check_gradients rejects non-scalar f") {
  CHECK_THROWS_AS(check_gradients([](Tape&, Var v) { return v; }, Tensor::row({1, 2})),
                  std::invalid_argument);
}

TEST_CASE("broadcast binary ops and their gradients") {
  Rng rng(23);
  Tensor a = random_tensor({4, 3}, rng);
  Tensor b = random_tensor({1, 3}, rng, 0.5, 1.5);
  Tensor c = random_tensor({4, 1}, rng, 0.5, 1.5);

  double e1 = check_gradients(
      [&b](Tape& tp, Var v) { return sum_all(mul(add(v, tp.constant(b)), v)); }, a);
  CHECK(e1 < 1e-5);
  double e2 = check_gradients(
      [&c](Tape& tp, Var v) { return sum_all(div(v, tp.constant(c))); }, a);
  CHECK(e2 < 1e-5);
  // gradient wrt the broadcast operand reduces over the expanded axis
  double e3 = check_gradients(
      [&a](Tape& tp, Var v) { return sum_all(mul(tp.constant(a), v)); }, b);
  CHECK(e3 < 1e-5);
}

TEST_CASE("every differentiable op passes the oracle on random tensors") {
  Rng rng(31);
  for (int round = 0; round < 3; ++round) {
    Tensor x = random_tensor({3, 4}, rng, 0.3, 1.7);  // positive, away from relu/max kinks
    Tensor w = random_tensor({4, 2}, rng);
    auto composite = [&w](Tape& tp, Var v) {
      Var h = matmul(v, tp.constant(w));            // 3x2
      h = relu(add_scalar(h, 0.05));
      Var lg = ppt::log(add_scalar(mul(v, v), 1.0));  // 3x4, positive arg
      Var sq = ppt::sqrt(add_scalar(lg, 0.5));
      Var m = reduce(ReduceOp::mean, sq, 0);        // 1x4
      Var vr = reduce(ReduceOp::var, v, 1);         // 3x1
      Var mx = reduce(ReduceOp::max, v, 1);         // 3x1
      Var ls = log_softmax(h);                      // 3x2
      Var t1 = sum_all(ls);
      Var t2 = sum_all(div(vr, add_scalar(mx, 2.0)));
      Var t3 = sum_all(m);
      Var t4 = sum_all(ppt::exp(scale(transpose(h), 0.1)));
      Var t5 = sum_all(reshape(sub(v, v), {4, 3}));
      return add(add(t1, t2), add(t3, add(t4, t5)));
    };
    double err = check_gradients(composite, x);
    CHECK(err < 1e-5);
  }
}

TEST_CASE("backward twice without reset is an error") {
  Tape t;
  Var x = t.input(Tensor::row({2.0}), true);
  Var y = sum_all(mul(x, x));
  t.backward(y);
  CHECK_THROWS_AS(t.backward(y), std::logic_error);
  t.reset();
  t.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(4.0));
}

TEST_CASE("backward root must be scalar") {
  Tape t;
  Var x = t.input(Tensor::row({1, 2}), true);
  CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
}

TEST_CASE("disconnected parameter keeps an all-zero gradient") {
  Tape t;
  Var used = t.input(Tensor::row({1.0, 2.0}), true);
  Var unused = t.input(Tensor::row({5.0, 6.0}), true);
  t.backward(sum_all(mul(used, used)));
  CHECK(unused.grad()[0] == 0.0);
  CHECK(unused.grad()[1] == 0.0);
  CHECK(used.grad()[0] == doctest::Approx(2.0));
}
