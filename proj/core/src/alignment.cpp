#include "ppt/alignment.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ppt/error.hpp"
#include "ppt/rng.hpp"

namespace ppt {

std::string template_expand(const std::string& name, const std::string& templ) {
  const std::string placeholder = "[class]";
  const auto pos = templ.find(placeholder);
  if (pos == std::string::npos) {
    throw std::invalid_argument("template is missing the [class] placeholder: \"" + templ + "\"");
  }
  std::string out = templ;
  out.replace(pos, placeholder.size(), name);
  return out;
}

void TextEmbeddingTable::finish() {
  const int u = matrix_.dim(0), t = matrix_.dim(1);
  matrix_t_ = Tensor({t, u});
  for (int i = 0; i < u; ++i)
    for (int j = 0; j < t; ++j) matrix_t_.at(j, i) = matrix_.at(i, j);
}

TextEmbeddingTable TextEmbeddingTable::deterministic(const std::vector<std::string>& categories,
                                                     int dim, const std::string& templ) {
  if (dim < 1) throw std::invalid_argument("embedding dim must be positive");
  TextEmbeddingTable table;
  table.matrix_ = Tensor({static_cast<int>(categories.size()), dim});
  for (size_t i = 0; i < categories.size(); ++i) {
    const std::string text = template_expand(categories[i], templ);
    Rng rng(fnv1a64(text));
    double norm2 = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double v = rng.normal();
      table.matrix_.at(static_cast<int>(i), j) = v;
      norm2 += v * v;
    }
    double norm = std::sqrt(norm2);
    if (norm == 0.0) {  // astronomically unlikely; keep the row valid anyway
      table.matrix_.at(static_cast<int>(i), 0) = 1.0;
      norm = 1.0;
    }
    for (int j = 0; j < dim; ++j) table.matrix_.at(static_cast<int>(i), j) /= norm;
  }
  table.finish();
  return table;
}

TextEmbeddingTable TextEmbeddingTable::from_file(const std::filesystem::path& path,
                                                 const std::vector<std::string>& categories) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open embedding file: " + path.string());
  std::string line;
  int dim = -1;
  std::set<std::string> seen;
  std::vector<std::vector<double>> rows(categories.size());
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("embedding file line " + std::to_string(lineno) + " has no TAB separator");
    }
    const std::string name = line.substr(0, tab);
    if (!seen.insert(name).second) throw DataError("duplicate embedding for category: " + name);
    std::vector<double> values;
    std::istringstream rest(line.substr(tab + 1));
    double v;
    while (rest >> v) values.push_back(v);
    if (values.empty()) throw DataError("no values for category: " + name);
    if (dim < 0) dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != dim) {
      throw DataError("inconsistent embedding dimension for category: " + name);
    }
    for (size_t i = 0; i < categories.size(); ++i) {
      if (categories[i] == name) rows[i] = values;
    }
  }
  for (size_t i = 0; i < categories.size(); ++i) {
    if (rows[i].empty()) throw DataError("embedding file is missing category: " + categories[i]);
  }
  TextEmbeddingTable table;
  table.matrix_ = Tensor({static_cast<int>(categories.size()), dim});
  for (size_t i = 0; i < categories.size(); ++i) {
    double norm2 = 0.0;
    for (double v : rows[i]) norm2 += v * v;
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) throw DataError("zero embedding vector for category: " + categories[i]);
    for (int j = 0; j < dim; ++j) table.matrix_.at(static_cast<int>(i), j) = rows[i][static_cast<size_t>(j)] / norm;
  }
  table.finish();
  return table;
}

Var linear_head_logits(Tape& tape, Var emb, Var w, Var b) {
  (void)tape;
  return add(matmul(emb, w), b);
}

static Var normalized_projection(Tape& tape, Var emb, Var proj_w, Var proj_b) {
  (void)tape;
  Var p = add(matmul(emb, proj_w), proj_b);                     // N x t
  Var norm = ppt::sqrt(add_scalar(reduce(ReduceOp::sum, mul(p, p), 1), 1e-24));
  return div(p, norm);
}

Var cosine_logits(Tape& tape, Var emb, Var proj_w, Var proj_b, const TextEmbeddingTable& table,
                  double logit_scale) {
  if (logit_scale <= 0.0) throw std::invalid_argument("logit_scale must be positive");
  Var pn = normalized_projection(tape, emb, proj_w, proj_b);
  Var cos = matmul(pn, tape.constant(table.matrix_transposed()));  // N x U
  return scale(cos, logit_scale);
}

Var mask_inactive_columns(Tape& tape, Var logits, const std::vector<uint8_t>& active_mask) {
  const int k = logits.value().dim(1);
  if (static_cast<int>(active_mask.size()) != k) {
    throw std::invalid_argument("mask size " + std::to_string(active_mask.size()) +
                                " does not match logit columns " + std::to_string(k));
  }
  Tensor inactive({1, k});
  for (int j = 0; j < k; ++j) inactive.at(0, j) = active_mask[static_cast<size_t>(j)] ? 0.0 : 1.0;
  (void)tape;
  return masked_fill(logits, inactive, -1e9);
}

Var cross_entropy_mean(Tape& tape, Var logits, const std::vector<int>& target_cols) {
  const int n = logits.value().dim(0);
  const int k = logits.value().dim(1);
  if (static_cast<int>(target_cols.size()) != n) {
    throw std::invalid_argument("cross_entropy_mean: " + std::to_string(target_cols.size()) +
                                " targets for " + std::to_string(n) + " rows");
  }
  Tensor onehot({n, k});
  for (int i = 0; i < n; ++i) {
    const int t = target_cols[static_cast<size_t>(i)];
    if (t < 0 || t >= k) {
      throw std::out_of_range("cross_entropy_mean: target " + std::to_string(t) + " outside [0, " +
                              std::to_string(k) + ")");
    }
    onehot.at(i, t) = 1.0;
  }
  Var picked = reduce(ReduceOp::sum, mul(log_softmax(logits), tape.constant(onehot)), 1);  // N x 1
  return scale(mean_all(picked), -1.0);
}

Var l2_alignment_loss(Tape& tape, Var emb, Var proj_w, Var proj_b, const TextEmbeddingTable& table,
                      const std::vector<int>& target_unified) {
  const int n = emb.value().dim(0);
  if (static_cast<int>(target_unified.size()) != n) {
    throw std::invalid_argument("l2_alignment_loss: target count mismatch");
  }
  Var pn = normalized_projection(tape, emb, proj_w, proj_b);
  Tensor anchors({n, table.dim()});
  for (int i = 0; i < n; ++i) {
    const int u = target_unified[static_cast<size_t>(i)];
    if (u < 0 || u >= table.count()) throw std::out_of_range("l2_alignment_loss: bad target index");
    for (int j = 0; j < table.dim(); ++j) anchors.at(i, j) = table.matrix().at(u, j);
  }
  Var diff = sub(pn, tape.constant(anchors));
  return mean_all(reduce(ReduceOp::sum, mul(diff, diff), 1));
}

std::vector<int> argmax_over_columns(const Tensor& logits, const std::vector<int>& active_cols) {
  if (active_cols.empty()) throw std::invalid_argument("argmax_over_columns: no active columns");
  const int n = logits.dim(0);
  std::vector<int> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double bv = logits.at(i, active_cols[0]);
    for (size_t j = 1; j < active_cols.size(); ++j) {
      const double v = logits.at(i, active_cols[j]);
      if (v > bv) {
        bv = v;
        best = static_cast<int>(j);
      }
    }
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

}  // namespace ppt
