#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ppt/autodiff.hpp"
#include "ppt/data.hpp"
#include "ppt/tensor.hpp"

namespace ppt {

enum class HeadKind { decoupled, unionized, language_guided };
enum class AlignmentCriterion { infonce_ce, l2 };
enum class EmbeddingProvider { deterministic_hash, file };

/// Substitutes the category name into a template containing "[class]".
std::string template_expand(const std::string& name, const std::string& templ);

/// Frozen unit-norm category embeddings, one per unified category. Never
/// trained; the deterministic provider derives each vector from the
/// templated category string alone, so shared names share embeddings.
class TextEmbeddingTable {
public:
  static TextEmbeddingTable deterministic(const std::vector<std::string>& categories, int dim,
                                          const std::string& templ);
  /// Text lines "category<TAB>v1 v2 ... vt". Errors on duplicate lines or
  /// on categories missing from the file. Vectors are L2-normalized.
  static TextEmbeddingTable from_file(const std::filesystem::path& path,
                                      const std::vector<std::string>& categories);

  const Tensor& matrix() const { return matrix_; }          // U x dim, unit rows
  const Tensor& matrix_transposed() const { return matrix_t_; }  // dim x U
  int dim() const { return matrix_.dim(1); }
  int count() const { return matrix_.dim(0); }

private:
  TextEmbeddingTable() = default;
  void finish();
  Tensor matrix_;
  Tensor matrix_t_;
};

/// emb.W + b. Plain linear-head logits for decoupled/unionized alignment.
Var linear_head_logits(Tape& tape, Var emb, Var w, Var b);

/// logit_scale * cosine(proj(emb), text_u) for every unified category. The
/// projection output is L2-normalized (eps-guarded) before the similarity.
Var cosine_logits(Tape& tape, Var emb, Var proj_w, Var proj_b, const TextEmbeddingTable& table,
                  double logit_scale);

/// Replaces logits of categories outside the domain's space with -1e9.
/// `active_mask` is a 0/1 vector over logit columns.
Var mask_inactive_columns(Tape& tape, Var logits, const std::vector<uint8_t>& active_mask);

/// Mean cross-entropy of log-softmax rows against target column indices.
Var cross_entropy_mean(Tape& tape, Var logits, const std::vector<int>& target_cols);

/// Mean squared distance between the normalized projected embedding and the
/// target category embedding. No negatives are involved.
Var l2_alignment_loss(Tape& tape, Var emb, Var proj_w, Var proj_b, const TextEmbeddingTable& table,
                      const std::vector<int>& target_unified);

/// Argmax over the listed columns; returns positions within `active_cols`
/// (i.e. domain-local labels when active_cols is the domain's unified list).
std::vector<int> argmax_over_columns(const Tensor& logits, const std::vector<int>& active_cols);

}  // namespace ppt
