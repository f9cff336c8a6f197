#include "ppt/adapters.hpp"

#include <cmath>
#include <stdexcept>

namespace ppt {

namespace {

// Normalized activations under the requested statistics source; updates the
// running bank from the batch values when asked to.
Var normalize(Tape& tape, Var x, Tensor& running_mean, Tensor& running_var, double momentum,
              double eps, Mode mode, bool update_stats, NormStyle style) {
  if (style == NormStyle::point_stats) {
    Var mu = reduce(ReduceOp::mean, x, 1);                    // N x 1
    Var va = reduce(ReduceOp::var, x, 1);                     // N x 1
    return div(sub(x, mu), ppt::sqrt(add_scalar(va, eps)));
  }
  if (mode == Mode::train) {
    Var mu = reduce(ReduceOp::mean, x, 0);                    // 1 x C
    Var va = reduce(ReduceOp::var, x, 0);                     // 1 x C, biased
    if (update_stats) {
      const Tensor& m = mu.value();
      const Tensor& v = va.value();
      for (int64_t i = 0; i < running_mean.size(); ++i) {
        running_mean[i] = momentum * running_mean[i] + (1.0 - momentum) * m[i];
        running_var[i] = momentum * running_var[i] + (1.0 - momentum) * v[i];
      }
    }
    return div(sub(x, mu), ppt::sqrt(add_scalar(va, eps)));
  }
  Var mu = tape.constant(running_mean);
  Var va = tape.constant(running_var);
  return div(sub(x, mu), ppt::sqrt(add_scalar(va, eps)));
}

}  // namespace

Var pdnorm_forward(Tape& tape, Var x, Var prompt, const PdnormProjection& proj,
                   Tensor& running_mean, Tensor& running_var, double momentum, double eps,
                   Mode mode, bool update_stats, NormStyle style) {
  Var xn = normalize(tape, x, running_mean, running_var, momentum, eps, mode, update_stats, style);
  Var gamma = add(matmul(prompt, proj.gamma_w), proj.gamma_b);  // 1 x C
  Var beta = add(matmul(prompt, proj.beta_w), proj.beta_b);     // 1 x C
  // 1 + gamma(c): zero-initialized projections make this layer exactly plain
  // normalization on the first forward.
  return add(mul(xn, add_scalar(gamma, 1.0)), beta);
}

Var batchnorm_forward(Tape& tape, Var x, Var gamma, Var beta, Tensor& running_mean,
                      Tensor& running_var, double momentum, double eps, Mode mode,
                      bool update_stats, NormStyle style) {
  Var xn = normalize(tape, x, running_mean, running_var, momentum, eps, mode, update_stats, style);
  return add(mul(xn, gamma), beta);
}

Var direct_inject(Tape& tape, Var x, Var prompt, Var proj_w) {
  (void)tape;
  return add(x, matmul(prompt, proj_w));  // broadcast over rows
}

Var cross_attention(Tape& tape, Var x, Var prompt, int slices, Var query_w, Var key_w,
                    Var value_w, Var out_w) {
  const int d = prompt.value().dim(1);
  if (slices < 1 || d % slices != 0) {
    throw std::invalid_argument("cross_attention: prompt dim " + std::to_string(d) +
                                " not divisible by " + std::to_string(slices) + " slices");
  }
  const int qdim = query_w.value().dim(1);
  Var slots = reshape(prompt, {slices, d / slices});
  Var q = matmul(x, query_w);             // N x qdim
  Var k = matmul(slots, key_w);           // slices x qdim
  Var v = matmul(slots, value_w);         // slices x channels
  Var scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(qdim)));
  Var attn = softmax(scores);             // N x slices
  Var attended = matmul(attn, v);         // N x channels
  (void)tape;
  return add(x, matmul(attended, out_w));
}

}  // namespace ppt
