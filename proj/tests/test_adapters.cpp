#include "doctest.h"
#include "ppt/adapters.hpp"
#include "ppt/rng.hpp"

#include <cmath>

using namespace ppt;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

struct PdnormFixture {
  Tensor gamma_w, gamma_b, beta_w, beta_b;
  Tensor running_mean, running_var;
  double momentum = 0.9;
  double eps = 1e-5;

  PdnormFixture(int d, int ch)
      : gamma_w({d, ch}), gamma_b({1, ch}), beta_w({d, ch}), beta_b({1, ch}),
        running_mean({1, ch}), running_var(Tensor::full({1, ch}, 1.0)) {}

  Var forward(Tape& t, Var x, Var prompt, Mode mode, bool update) {
    PdnormProjection proj{t.input(gamma_w, false), t.input(gamma_b, false),
                          t.input(beta_w, false), t.input(beta_b, false)};
    return pdnorm_forward(t, x, prompt, proj, running_mean, running_var, momentum, eps, mode,
                          update);
  }
};

}  // namespace

TEST_CASE("pdnorm with zero projections is plain normalization") {
  Rng rng(3);
  Tensor x = random_tensor({8, 4}, rng);
  PdnormFixture f(6, 4);
  for (int round = 0; round < 5; ++round) {
    Tensor prompt = random_tensor({1, 6}, rng, -3.0, 3.0);
    Tape t;
    Var out = f.forward(t, t.constant(x), t.constant(prompt), Mode::train, false);
    // reference: (x - mean) / sqrt(var + eps)
    Tape t2;
    Var xv = t2.constant(x);
    Var mu = reduce(ReduceOp::mean, xv, 0);
    Var va = reduce(ReduceOp::var, xv, 0);
    Var ref = div(sub(xv, mu), ppt::sqrt(add_scalar(va, f.eps)));
    for (int64_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(out.value()[i] - ref.value()[i]) <= 1e-12);
    }
  }
}

TEST_CASE("pdnorm hand evaluation with the 1+gamma convention") {
  // x column [1,3]: batch mean 2, biased var 1, eps 0; gamma(c)=2, beta(c)=0.5
  PdnormFixture f(1, 1);
  f.eps = 0.0;
  f.gamma_w.at(0, 0) = 1.0;  // prompt [2] -> gamma = 2
  f.beta_b.at(0, 0) = 0.5;
  Tape t;
  Var out = f.forward(t, t.constant(Tensor({2, 1}, {1, 3})), t.constant(Tensor({1, 1}, {2.0})),
                      Mode::train, false);
  CHECK(out.value()[0] == doctest::Approx(-2.5));
  CHECK(out.value()[1] == doctest::Approx(3.5));
}

TEST_CASE("pdnorm running stats update only when asked") {
  Rng rng(9);
  PdnormFixture f(4, 3);
  Tensor x = random_tensor({16, 3}, rng);
  Tensor prompt = random_tensor({1, 4}, rng);
  const Tensor before_m = f.running_mean, before_v = f.running_var;
  {
    Tape t;
    f.forward(t, t.constant(x), t.constant(prompt), Mode::train, false);
  }
  CHECK(f.running_mean.data() == before_m.data());
  {
    Tape t;
    f.forward(t, t.constant(x), t.constant(prompt), Mode::train, true);
  }
  CHECK(f.running_mean.data() != before_m.data());
  // r <- 0.9 r + 0.1 batch
  double mean0 = 0.0;
  for (int i = 0; i < 16; ++i) mean0 += x.at(i, 0) / 16.0;
  CHECK(f.running_mean.at(0, 0) == doctest::Approx(0.9 * before_m.at(0, 0) + 0.1 * mean0));
}

TEST_CASE("pdnorm eval mode uses the bank and mutates nothing") {
  Rng rng(12);
  PdnormFixture f(4, 3);
  f.running_mean = Tensor({1, 3}, {0.5, -0.5, 2.0});
  f.running_var = Tensor({1, 3}, {4.0, 1.0, 0.25});
  Tensor x = random_tensor({5, 3}, rng);
  Tensor prompt = random_tensor({1, 4}, rng);
  const Tensor bank_m = f.running_mean, bank_v = f.running_var;
  Tensor first;
  for (int round = 0; round < 3; ++round) {
    Tape t;
    Var out = f.forward(t, t.constant(x), t.constant(prompt), Mode::eval, true);
    if (round == 0) {
      first = out.value();
      const double expect = (x.at(0, 0) - 0.5) / std::sqrt(4.0 + f.eps);
      CHECK(out.value().at(0, 0) == doctest::Approx(expect));
    } else {
      CHECK(out.value().data() == first.data());
    }
  }
  CHECK(f.running_mean.data() == bank_m.data());
  CHECK(f.running_var.data() == bank_v.data());
}

TEST_CASE("pdnorm train output is standardized when projections are zero") {
  Rng rng(21);
  PdnormFixture f(4, 5);
  Tensor x = random_tensor({64, 5}, rng, -4.0, 3.0);
  Tape t;
  Var out = f.forward(t, t.constant(x), t.constant(random_tensor({1, 4}, rng)), Mode::train, false);
  for (int c = 0; c < 5; ++c) {
    double m = 0.0, v = 0.0;
    for (int i = 0; i < 64; ++i) m += out.value().at(i, c) / 64.0;
    for (int i = 0; i < 64; ++i) {
      const double d = out.value().at(i, c) - m;
      v += d * d / 64.0;
    }
    CHECK(std::abs(m) <= 1e-10);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-3));  // off by var/(var+eps)
  }
}

TEST_CASE("pdnorm single point in train mode stays finite") {
  PdnormFixture f(2, 3);
  Tape t;
  Var out = f.forward(t, t.constant(Tensor({1, 3}, {1.0, 2.0, 3.0})),
                      t.constant(Tensor({1, 2})), Mode::train, true);
  CHECK(out.value().all_finite());
  for (int64_t i = 0; i < 3; ++i) CHECK(out.value()[i] == 0.0);  // var 0, centered
}

TEST_CASE("pdnorm gradients pass the oracle") {
  Rng rng(33);
  Tensor x = random_tensor({6, 3}, rng);
  Tensor gw = random_tensor({4, 3}, rng, -0.5, 0.5);
  Tensor gb = random_tensor({1, 3}, rng, -0.5, 0.5);
  Tensor bw = random_tensor({4, 3}, rng, -0.5, 0.5);
  Tensor bb = random_tensor({1, 3}, rng, -0.5, 0.5);
  Tensor prompt = random_tensor({1, 4}, rng);

  // wrt x
  double ex = check_gradients(
      [&](Tape& t, Var v) {
        Tensor rm({1, 3}), rv = Tensor::full({1, 3}, 1.0);
        PdnormProjection proj{t.constant(gw), t.constant(gb), t.constant(bw), t.constant(bb)};
        return sum_all(mul(pdnorm_forward(t, v, t.constant(prompt), proj, rm, rv, 0.9, 1e-5,
                                          Mode::train, false),
                           v));
      },
      x);
  CHECK(ex < 1e-5);
  // wrt prompt
  double ep = check_gradients(
      [&](Tape& t, Var v) {
        Tensor rm({1, 3}), rv = Tensor::full({1, 3}, 1.0);
        PdnormProjection proj{t.constant(gw), t.constant(gb), t.constant(bw), t.constant(bb)};
        return sum_all(pdnorm_forward(t, t.constant(x), v, proj, rm, rv, 0.9, 1e-5, Mode::train,
                                      false));
      },
      prompt);
  CHECK(ep < 1e-5);
}

TEST_CASE("direct injection at init leaves x unchanged") {
  Rng rng(40);
  Tensor x = random_tensor({5, 3}, rng);
  Tape t;
  Var out = direct_inject(t, t.constant(x), t.constant(random_tensor({1, 8}, rng)),
                          t.constant(Tensor({8, 3})));
  for (int64_t i = 0; i < x.size(); ++i) CHECK(out.value()[i] == x[i]);
}

TEST_CASE("direct injection adds the projected prompt to every row") {
  Tape t;
  // proj(prompt) = [1, -1]
  Tensor w({1, 2}, {1.0, -1.0});
  Var out = direct_inject(t, t.constant(Tensor({1, 2})), t.constant(Tensor({1, 1}, {1.0})),
                          t.constant(w));
  CHECK(out.value()[0] == 1.0);
  CHECK(out.value()[1] == -1.0);
}

TEST_CASE("direct injection prompt gradient passes the oracle") {
  Rng rng(44);
  Tensor x = random_tensor({4, 3}, rng);
  Tensor w = random_tensor({6, 3}, rng);
  double err = check_gradients(
      [&](Tape& t, Var v) {
        return sum_all(mul(direct_inject(t, t.constant(x), v, t.constant(w)), t.constant(x)));
      },
      random_tensor({1, 6}, rng));
  CHECK(err < 1e-5);
}

TEST_CASE("cross attention at init leaves x unchanged") {
  Rng rng(50);
  const int ch = 4, d = 8, k = 4;
  Tensor x = random_tensor({6, ch}, rng);
  Tape t;
  Var out = cross_attention(t, t.constant(x), t.constant(random_tensor({1, d}, rng)), k,
                            t.constant(random_tensor({ch, ch}, rng)),
                            t.constant(random_tensor({d / k, ch}, rng)),
                            t.constant(random_tensor({d / k, ch}, rng)),
                            t.constant(Tensor({ch, ch})));  // zero output projection
  for (int64_t i = 0; i < x.size(); ++i) CHECK(out.value()[i] == x[i]);
}

TEST_CASE("cross attention with one slice attends with weight one") {
  Rng rng(55);
  const int ch = 3, d = 4;
  Tensor x = random_tensor({5, ch}, rng);
  Tensor prompt = random_tensor({1, d}, rng);
  Tensor wv = random_tensor({d, ch}, rng);
  Tape t;
  // with k=1 the attended value is exactly prompt.Wv for every point
  Var out = cross_attention(t, t.constant(x), t.constant(prompt), 1,
                            t.constant(random_tensor({ch, ch}, rng)),
                            t.constant(random_tensor({d, ch}, rng)), t.constant(wv),
                            t.constant(Tensor::identity(ch)));
  Tape t2;
  Var expect = add(t2.constant(x), matmul(t2.constant(prompt), t2.constant(wv)));
  for (int64_t i = 0; i < x.size(); ++i) {
    CHECK(out.value()[i] == doctest::Approx(expect.value()[i]).epsilon(1e-12));
  }
}

TEST_CASE("cross attention rejects indivisible prompt dims") {
  Rng rng(58);
  Tape t;
  Tensor x = random_tensor({2, 3}, rng);
  CHECK_THROWS_AS(cross_attention(t, t.constant(x), t.constant(random_tensor({1, 7}, rng)), 2,
                                  t.constant(Tensor({3, 3})), t.constant(Tensor({3, 3})),
                                  t.constant(Tensor({3, 3})), t.constant(Tensor({3, 3}))),
                  std::invalid_argument);
}

TEST_CASE("cross attention prompt gradient passes the oracle") {
  Rng rng(60);
  const int ch = 3, d = 8, k = 2;
  Tensor x = random_tensor({4, ch}, rng);
  Tensor wq = random_tensor({ch, ch}, rng);
  Tensor wk = random_tensor({d / k, ch}, rng);
  Tensor wv = random_tensor({d / k, ch}, rng);
  Tensor wo = random_tensor({ch, ch}, rng, -0.3, 0.3);
  double err = check_gradients(
      [&](Tape& t, Var v) {
        Var y = cross_attention(t, t.constant(x), v, k, t.constant(wq), t.constant(wk),
                                t.constant(wv), t.constant(wo));
        return sum_all(mul(y, t.constant(x)));
      },
      random_tensor({1, d}, rng));
  CHECK(err < 1e-5);
}
