#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ppt/alignment.hpp"
#include "ppt/backbone.hpp"
#include "ppt/data.hpp"
#include "ppt/params.hpp"

namespace ppt {

/// Prompt-bank and adapter hyperparameters. Domain prompts are shared
/// across all backbone stages; only the per-stage projections differ.
struct AdapterSettings {
  int prompt_dim = 256;
  int attention_slices = 4;
  double pdnorm_momentum = 0.9;
  double pdnorm_eps = 1e-5;
  bool zero_init = true;        // ablation switch; off = random projections
  NormStyle norm_style = NormStyle::batch_stats;
  bool train_prompts = true;    // false detaches the prompt bank entirely
};

struct AlignmentSettings {
  HeadKind head = HeadKind::language_guided;
  AlignmentCriterion criterion = AlignmentCriterion::infonce_ce;
  int text_dim = 64;
  double logit_scale = 100.0;
  std::string templ = "[class]";
  EmbeddingProvider provider = EmbeddingProvider::deterministic_hash;
  std::string embedding_file;
};

struct DomainInfo {
  std::string name;
  CategorySpace categories;
};

/// The full trainable system: staged backbone with adapter injection
/// points, per-domain prompts, per-domain or unified alignment head, and
/// every parameter in one flat registry (checkpointable as PPTC).
class Model {
public:
  struct Config {
    BackboneConfig backbone;
    AdapterSettings adapter;
    AlignmentSettings alignment;
    uint64_t init_seed = 1;

    void validate() const;
  };

  Model(Config cfg, std::vector<DomainInfo> domains);

  const Config& config() const { return cfg_; }
  int domain_count() const { return static_cast<int>(domains_.size()); }
  const DomainInfo& domain(int i) const { return domains_[static_cast<size_t>(i)]; }
  int domain_index(const std::string& name) const;  // throws on unknown domain
  const UnifiedLabelSpace& unified() const { return unified_; }
  const TextEmbeddingTable* text_table() const { return text_table_.get(); }

  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }

  /// Leafs every registry entry onto the tape. with_grads enables gradient
  /// accumulation for trainable entries (prompts stay detached when the
  /// adapter settings say so).
  struct Bound {
    std::vector<Var> vars;
    Var of(int index) const { return vars[static_cast<size_t>(index)]; }
  };
  Bound bind(Tape& tape, bool with_grads);

  /// Per-point embeddings for a single-domain batch. Train mode consumes
  /// batch statistics; update_stats additionally refreshes the running
  /// banks of the batch's domain (and only that domain's).
  Var embeddings(Tape& tape, const Bound& bound, const Sample& batch, int domain, Mode mode,
                 bool update_stats);

  struct Logits {
    Var values;                 // N x K
    std::vector<int> active;    // K-column index per domain-local label
    bool unified_indexing = false;
  };
  Logits logits(Tape& tape, const Bound& bound, Var emb, int domain);

  /// Alignment loss for domain-local labels.
  Var loss(Tape& tape, const Bound& bound, Var emb, const std::vector<int>& labels, int domain);

  /// embeddings -> logits -> loss in one go; resolves the domain by name.
  Var loss_on_batch(Tape& tape, const Bound& bound, const Sample& batch, Mode mode,
                    bool update_stats);

  /// Domain-local argmax predictions, eval mode, no state mutation.
  std::vector<int> predict(const Sample& batch);

  void save_checkpoint(const std::filesystem::path& path) const { params_.save(path); }
  void load_checkpoint(const std::filesystem::path& path) { params_.load(path); }

private:
  struct StageParams {
    int linear_w = -1, linear_b = -1;
    int bn_gamma = -1, bn_beta = -1;
    int bn_running_mean = -1, bn_running_var = -1;         // plain bank
    int pd_gamma_w = -1, pd_gamma_b = -1, pd_beta_w = -1, pd_beta_b = -1;
    std::vector<int> pd_running_mean, pd_running_var;      // per domain
    int inject_w = -1;
    int attn_q = -1, attn_k = -1, attn_v = -1, attn_o = -1;
    int context_w = -1, context_b = -1;
    bool uses_pdnorm = false;
    bool has_adapter = false;
  };

  void register_parameters();
  Tensor init_tensor(const std::string& name, std::vector<int> shape, double fan_in, bool zero);
  bool stage_uses_pdnorm(int stage) const;

  Config cfg_;
  std::vector<DomainInfo> domains_;
  UnifiedLabelSpace unified_;
  std::unique_ptr<TextEmbeddingTable> text_table_;
  ParamRegistry params_;
  std::vector<StageParams> stages_;
  std::vector<int> prompt_idx_;          // per domain
  std::vector<int> head_w_, head_b_;     // decoupled, per domain
  int union_w_ = -1, union_b_ = -1;
  int lang_w_ = -1, lang_b_ = -1;
  int embed_w_ = -1, embed_b_ = -1;
};

std::vector<DomainInfo> domain_infos(const std::vector<DomainData>& domains);

}  // namespace ppt
