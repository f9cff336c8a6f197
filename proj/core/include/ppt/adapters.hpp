#pragma once

#include "ppt/autodiff.hpp"
#include "ppt/tensor.hpp"

namespace ppt {

enum class Mode { train, eval };

/// Which axis normalization statistics are taken over: batch_stats keeps
/// per-channel statistics across the batch (with running banks for eval),
/// point_stats normalizes each point over its channels.
enum class NormStyle { batch_stats, point_stats };

/// Prompt-to-scale/shift projections of a prompt-driven normalization
/// layer. All four tensors are zero at initialization so the layer starts
/// as plain normalization.
struct PdnormProjection {
  Var gamma_w;  // d x channels
  Var gamma_b;  // 1 x channels
  Var beta_w;   // d x channels
  Var beta_b;   // 1 x channels
};

/// Normalizes x with batch statistics (train) or the supplied running bank
/// (eval), then applies the prompt-conditioned affine
/// out = xn * (1 + gamma(c)) + beta(c). In train mode with update_stats the
/// running bank of the batch's domain is updated as
/// r <- momentum * r + (1 - momentum) * batch.
Var pdnorm_forward(Tape& tape, Var x, Var prompt, const PdnormProjection& proj,
                   Tensor& running_mean, Tensor& running_var, double momentum, double eps,
                   Mode mode, bool update_stats, NormStyle style = NormStyle::batch_stats);

/// Plain batch normalization with a single shared running bank and a
/// learnable per-channel affine.
Var batchnorm_forward(Tape& tape, Var x, Var gamma, Var beta, Tensor& running_mean,
                      Tensor& running_var, double momentum, double eps, Mode mode,
                      bool update_stats, NormStyle style = NormStyle::batch_stats);

/// Adds a zero-initialized linear projection of the prompt to every row.
Var direct_inject(Tape& tape, Var x, Var prompt, Var proj_w);

/// Splits the prompt into `slices` key/value slots and lets every point
/// attend over them; the attended value is output-projected (zero at init)
/// and added residually.
Var cross_attention(Tape& tape, Var x, Var prompt, int slices, Var query_w, Var key_w,
                    Var value_w, Var out_w);

}  // namespace ppt
