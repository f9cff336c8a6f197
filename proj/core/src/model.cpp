#include "ppt/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "ppt/error.hpp"
#include "ppt/rng.hpp"

namespace ppt {

bool BackboneConfig::stage_has_adapter(int stage) const {
  return std::find(adapter_stages.begin(), adapter_stages.end(), stage) != adapter_stages.end();
}

void BackboneConfig::validate() const {
  if (stage_dims.empty()) throw ConfigError("backbone needs at least one stage");
  for (int d : stage_dims) {
    if (d < 1) throw ConfigError("stage width must be positive");
  }
  if (embed_dim < 1) throw ConfigError("embed_dim must be positive");
  for (int s : adapter_stages) {
    if (s < 0 || s >= stage_count()) {
      throw ConfigError("adapter stage " + std::to_string(s) + " outside [0, " +
                        std::to_string(stage_count()) + ")");
    }
  }
  const bool pd_norm = norm_kind == NormKind::pdnorm;
  const bool pd_adapter = adapter_kind == AdapterKind::pdnorm;
  if (pd_norm != pd_adapter) {
    throw ConfigError("prompt-driven normalization is selected through both norm_kind and "
                      "adapter_kind; set them together");
  }
}

void Model::Config::validate() const {
  backbone.validate();
  if (adapter.prompt_dim < 1) throw ConfigError("prompt_dim must be positive");
  if (backbone.adapter_kind == AdapterKind::cross_attention &&
      adapter.prompt_dim % adapter.attention_slices != 0) {
    throw ConfigError("prompt_dim " + std::to_string(adapter.prompt_dim) +
                      " must be divisible by attention_slices " +
                      std::to_string(adapter.attention_slices));
  }
  if (adapter.pdnorm_eps <= 0.0) throw ConfigError("pdnorm_eps must be positive");
  if (adapter.pdnorm_momentum < 0.0 || adapter.pdnorm_momentum >= 1.0) {
    throw ConfigError("pdnorm_momentum must be in [0, 1)");
  }
  if (alignment.criterion == AlignmentCriterion::l2 && alignment.head != HeadKind::language_guided) {
    throw ConfigError("the l2 criterion is only defined for the language-guided head");
  }
  if (alignment.head == HeadKind::language_guided) {
    if (alignment.text_dim < 1) throw ConfigError("text_dim must be positive");
    if (alignment.logit_scale <= 0.0) throw ConfigError("logit_scale must be positive");
  }
}

std::vector<DomainInfo> domain_infos(const std::vector<DomainData>& domains) {
  std::vector<DomainInfo> out;
  for (const auto& d : domains) out.push_back({d.train.domain_name, d.train.categories});
  return out;
}

Model::Model(Config cfg, std::vector<DomainInfo> domains)
    : cfg_(std::move(cfg)), domains_(std::move(domains)) {
  cfg_.validate();
  if (domains_.empty()) throw ConfigError("model needs at least one domain");
  std::set<std::string> names;
  std::vector<CategorySpace> spaces;
  for (const auto& d : domains_) {
    if (!names.insert(d.name).second) throw ConfigError("duplicate domain name: " + d.name);
    spaces.push_back(d.categories);
  }
  unified_ = build_unified_label_space(spaces);
  if (cfg_.alignment.head == HeadKind::language_guided) {
    if (cfg_.alignment.provider == EmbeddingProvider::file) {
      text_table_ = std::make_unique<TextEmbeddingTable>(
          TextEmbeddingTable::from_file(cfg_.alignment.embedding_file, unified_.names));
    } else {
      text_table_ = std::make_unique<TextEmbeddingTable>(TextEmbeddingTable::deterministic(
          unified_.names, cfg_.alignment.text_dim, cfg_.alignment.templ));
    }
  }
  register_parameters();
}

int Model::domain_index(const std::string& name) const {
  for (size_t i = 0; i < domains_.size(); ++i) {
    if (domains_[i].name == name) return static_cast<int>(i);
  }
  throw std::out_of_range("unknown domain: " + name);
}

bool Model::stage_uses_pdnorm(int stage) const {
  return cfg_.backbone.adapter_kind == AdapterKind::pdnorm && cfg_.backbone.stage_has_adapter(stage);
}

// Parameter initialization is seeded by the parameter name, so two models
// that share a parameter (same name) initialize it identically regardless
// of which other parameters exist. Zero-initialized adapter projections
// make every adapter an exact no-op on the first forward.
Tensor Model::init_tensor(const std::string& name, std::vector<int> shape, double fan_in,
                          bool zero) {
  Tensor t(std::move(shape));
  if (zero) return t;
  Rng rng(mix_seed(cfg_.init_seed, fnv1a64(name)));
  const double sigma = fan_in > 0.0 ? std::sqrt(2.0 / fan_in) : 1.0;
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, sigma);
  return t;
}

void Model::register_parameters() {
  const auto& bb = cfg_.backbone;
  const int d = cfg_.adapter.prompt_dim;
  const bool zero_adapters = cfg_.adapter.zero_init;

  auto add_param = [this](const std::string& name, ParamGroup group, Tensor value,
                          const std::string& domain = "") {
    return params_.add(name, group, std::move(value), domain);
  };

  int in_dim = 6;  // positions | pseudo-color
  stages_.resize(static_cast<size_t>(bb.stage_count()));
  for (int s = 0; s < bb.stage_count(); ++s) {
    StageParams& sp = stages_[static_cast<size_t>(s)];
    const int out_dim = bb.stage_dims[static_cast<size_t>(s)];
    const std::string base = "backbone.stage" + std::to_string(s);
    sp.uses_pdnorm = stage_uses_pdnorm(s);
    sp.has_adapter = bb.stage_has_adapter(s);

    if (bb.adapter_kind == AdapterKind::direct_injection && sp.has_adapter) {
      sp.inject_w = add_param("adapter.stage" + std::to_string(s) + ".inject.weight",
                              ParamGroup::prompt, init_tensor("adapter.stage" + std::to_string(s) + ".inject.weight", {d, in_dim}, d, zero_adapters));
    }
    if (bb.adapter_kind == AdapterKind::cross_attention && sp.has_adapter) {
      const std::string abase = "adapter.stage" + std::to_string(s) + ".attn.";
      const int slice_dim = d / cfg_.adapter.attention_slices;
      sp.attn_q = add_param(abase + "query_w", ParamGroup::prompt,
                            init_tensor(abase + "query_w", {in_dim, in_dim}, in_dim, false));
      sp.attn_k = add_param(abase + "key_w", ParamGroup::prompt,
                            init_tensor(abase + "key_w", {slice_dim, in_dim}, slice_dim, false));
      sp.attn_v = add_param(abase + "value_w", ParamGroup::prompt,
                            init_tensor(abase + "value_w", {slice_dim, in_dim}, slice_dim, false));
      sp.attn_o = add_param(abase + "out_w", ParamGroup::prompt,
                            init_tensor(abase + "out_w", {in_dim, in_dim}, in_dim, zero_adapters));
    }

    sp.linear_w = add_param(base + ".linear.weight", ParamGroup::backbone,
                            init_tensor(base + ".linear.weight", {in_dim, out_dim}, in_dim, false));
    sp.linear_b = add_param(base + ".linear.bias", ParamGroup::backbone, Tensor({1, out_dim}));

    if (sp.uses_pdnorm) {
      const std::string pbase = "adapter.stage" + std::to_string(s) + ".pdnorm.";
      sp.pd_gamma_w = add_param(pbase + "gamma_w", ParamGroup::prompt,
                                init_tensor(pbase + "gamma_w", {d, out_dim}, d, zero_adapters));
      sp.pd_gamma_b = add_param(pbase + "gamma_b", ParamGroup::prompt,
                                init_tensor(pbase + "gamma_b", {1, out_dim}, d, zero_adapters));
      sp.pd_beta_w = add_param(pbase + "beta_w", ParamGroup::prompt,
                               init_tensor(pbase + "beta_w", {d, out_dim}, d, zero_adapters));
      sp.pd_beta_b = add_param(pbase + "beta_b", ParamGroup::prompt,
                               init_tensor(pbase + "beta_b", {1, out_dim}, d, zero_adapters));
      for (const auto& dom : domains_) {
        sp.pd_running_mean.push_back(add_param(pbase + "running_mean." + dom.name,
                                               ParamGroup::buffer, Tensor({1, out_dim}), dom.name));
        sp.pd_running_var.push_back(add_param(pbase + "running_var." + dom.name,
                                              ParamGroup::buffer, Tensor::full({1, out_dim}, 1.0),
                                              dom.name));
      }
    } else {
      sp.bn_gamma = add_param(base + ".bn.gamma", ParamGroup::backbone, Tensor::full({1, out_dim}, 1.0));
      sp.bn_beta = add_param(base + ".bn.beta", ParamGroup::backbone, Tensor({1, out_dim}));
      sp.bn_running_mean = add_param(base + ".bn.running_mean", ParamGroup::buffer, Tensor({1, out_dim}));
      sp.bn_running_var = add_param(base + ".bn.running_var", ParamGroup::buffer,
                                    Tensor::full({1, out_dim}, 1.0));
    }

    sp.context_w = add_param(base + ".context.weight", ParamGroup::backbone,
                             init_tensor(base + ".context.weight", {out_dim, out_dim}, out_dim, false));
    sp.context_b = add_param(base + ".context.bias", ParamGroup::backbone, Tensor({1, out_dim}));
    in_dim = out_dim;
  }

  embed_w_ = add_param("backbone.embed.weight", ParamGroup::backbone,
                       init_tensor("backbone.embed.weight", {in_dim, bb.embed_dim}, in_dim, false));
  embed_b_ = add_param("backbone.embed.bias", ParamGroup::backbone, Tensor({1, bb.embed_dim}));

  for (const auto& dom : domains_) {
    const std::string pname = "prompt." + dom.name;
    Tensor p({1, d});
    Rng rng(mix_seed(cfg_.init_seed, fnv1a64(pname)));
    for (int64_t i = 0; i < p.size(); ++i) p[i] = rng.normal(0.0, 0.02);
    prompt_idx_.push_back(add_param(pname, ParamGroup::prompt, std::move(p), dom.name));
  }

  const int embed_dim = bb.embed_dim;
  switch (cfg_.alignment.head) {
    case HeadKind::decoupled:
      for (const auto& dom : domains_) {
        const std::string hbase = "head.decoupled." + dom.name;
        const int k = dom.categories.size();
        head_w_.push_back(add_param(hbase + ".weight", ParamGroup::backbone,
                                    init_tensor(hbase + ".weight", {embed_dim, k}, embed_dim, false),
                                    dom.name));
        head_b_.push_back(add_param(hbase + ".bias", ParamGroup::backbone, Tensor({1, k}), dom.name));
      }
      break;
    case HeadKind::unionized:
      union_w_ = add_param("head.union.weight", ParamGroup::backbone,
                           init_tensor("head.union.weight", {embed_dim, unified_.size()}, embed_dim, false));
      union_b_ = add_param("head.union.bias", ParamGroup::backbone, Tensor({1, unified_.size()}));
      break;
    case HeadKind::language_guided:
      lang_w_ = add_param("head.lang.proj_weight", ParamGroup::backbone,
                          init_tensor("head.lang.proj_weight", {embed_dim, cfg_.alignment.text_dim},
                                      embed_dim, false));
      lang_b_ = add_param("head.lang.proj_bias", ParamGroup::backbone, Tensor({1, cfg_.alignment.text_dim}));
      break;
  }
}

Model::Bound Model::bind(Tape& tape, bool with_grads) {
  Bound b;
  b.vars.reserve(static_cast<size_t>(params_.count()));
  for (int i = 0; i < params_.count(); ++i) {
    const auto& e = params_.entry(i);
    const bool prompt_detached = !cfg_.adapter.train_prompts && e.group == ParamGroup::prompt;
    const bool rg = with_grads && params_.trainable(i) && !prompt_detached;
    b.vars.push_back(tape.input(e.value, rg));
  }
  return b;
}

Var Model::embeddings(Tape& tape, const Bound& bound, const Sample& batch, int domain, Mode mode,
                      bool update_stats) {
  if (domain < 0 || domain >= domain_count()) {
    throw std::out_of_range("domain index " + std::to_string(domain) + " out of range");
  }
  const int n = batch.positions.dim(0);
  Tensor input({n, 6});
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      input.at(i, c) = batch.positions.at(i, c);
      input.at(i, 3 + c) = batch.features.at(i, c);
    }
  }
  Var h = tape.constant(std::move(input));
  const Var prompt = bound.of(prompt_idx_[static_cast<size_t>(domain)]);
  const auto& bb = cfg_.backbone;
  const auto& ad = cfg_.adapter;

  for (int s = 0; s < bb.stage_count(); ++s) {
    const StageParams& sp = stages_[static_cast<size_t>(s)];
    if (sp.has_adapter && bb.adapter_kind == AdapterKind::direct_injection) {
      h = direct_inject(tape, h, prompt, bound.of(sp.inject_w));
    } else if (sp.has_adapter && bb.adapter_kind == AdapterKind::cross_attention) {
      h = cross_attention(tape, h, prompt, ad.attention_slices, bound.of(sp.attn_q),
                          bound.of(sp.attn_k), bound.of(sp.attn_v), bound.of(sp.attn_o));
    }
    h = add(matmul(h, bound.of(sp.linear_w)), bound.of(sp.linear_b));
    if (sp.uses_pdnorm) {
      PdnormProjection proj{bound.of(sp.pd_gamma_w), bound.of(sp.pd_gamma_b),
                            bound.of(sp.pd_beta_w), bound.of(sp.pd_beta_b)};
      h = pdnorm_forward(tape, h, prompt, proj,
                         params_.value(sp.pd_running_mean[static_cast<size_t>(domain)]),
                         params_.value(sp.pd_running_var[static_cast<size_t>(domain)]),
                         ad.pdnorm_momentum, ad.pdnorm_eps, mode, update_stats, ad.norm_style);
    } else {
      h = batchnorm_forward(tape, h, bound.of(sp.bn_gamma), bound.of(sp.bn_beta),
                            params_.value(sp.bn_running_mean), params_.value(sp.bn_running_var),
                            ad.pdnorm_momentum, ad.pdnorm_eps, mode, update_stats, ad.norm_style);
    }
    h = relu(h);
    Var ctx = reduce(ReduceOp::mean, h, 0);  // 1 x C batch context
    h = add(h, add(matmul(ctx, bound.of(sp.context_w)), bound.of(sp.context_b)));
  }
  return add(matmul(h, bound.of(embed_w_)), bound.of(embed_b_));
}

Model::Logits Model::logits(Tape& tape, const Bound& bound, Var emb, int domain) {
  if (domain < 0 || domain >= domain_count()) {
    throw std::out_of_range("domain index " + std::to_string(domain) + " out of range");
  }
  Logits out;
  switch (cfg_.alignment.head) {
    case HeadKind::decoupled: {
      out.values = linear_head_logits(tape, emb, bound.of(head_w_[static_cast<size_t>(domain)]),
                                      bound.of(head_b_[static_cast<size_t>(domain)]));
      const int k = domains_[static_cast<size_t>(domain)].categories.size();
      out.active.resize(static_cast<size_t>(k));
      for (int i = 0; i < k; ++i) out.active[static_cast<size_t>(i)] = i;
      out.unified_indexing = false;
      return out;
    }
    case HeadKind::unionized: {
      Var raw = linear_head_logits(tape, emb, bound.of(union_w_), bound.of(union_b_));
      out.values = mask_inactive_columns(tape, raw, unified_.domain_mask[static_cast<size_t>(domain)]);
      break;
    }
    case HeadKind::language_guided: {
      Var raw = cosine_logits(tape, emb, bound.of(lang_w_), bound.of(lang_b_), *text_table_,
                              cfg_.alignment.logit_scale);
      out.values = mask_inactive_columns(tape, raw, unified_.domain_mask[static_cast<size_t>(domain)]);
      break;
    }
  }
  out.active = unified_.local_to_unified[static_cast<size_t>(domain)];
  out.unified_indexing = true;
  return out;
}

Var Model::loss(Tape& tape, const Bound& bound, Var emb, const std::vector<int>& labels,
                int domain) {
  const auto& space = domains_[static_cast<size_t>(domain)].categories;
  for (int l : labels) {
    if (l < 0 || l >= space.size()) {
      throw std::out_of_range("label " + std::to_string(l) + " outside domain space of size " +
                              std::to_string(space.size()));
    }
  }
  if (cfg_.alignment.criterion == AlignmentCriterion::l2) {
    std::vector<int> targets(labels.size());
    const auto& map = unified_.local_to_unified[static_cast<size_t>(domain)];
    for (size_t i = 0; i < labels.size(); ++i) targets[i] = map[static_cast<size_t>(labels[i])];
    return l2_alignment_loss(tape, emb, bound.of(lang_w_), bound.of(lang_b_), *text_table_, targets);
  }
  Logits lo = logits(tape, bound, emb, domain);
  std::vector<int> targets(labels.size());
  if (lo.unified_indexing) {
    const auto& map = unified_.local_to_unified[static_cast<size_t>(domain)];
    for (size_t i = 0; i < labels.size(); ++i) targets[i] = map[static_cast<size_t>(labels[i])];
  } else {
    targets.assign(labels.begin(), labels.end());
  }
  return cross_entropy_mean(tape, lo.values, targets);
}

Var Model::loss_on_batch(Tape& tape, const Bound& bound, const Sample& batch, Mode mode,
                         bool update_stats) {
  const int domain = batch.domain.index >= 0 ? batch.domain.index : domain_index(batch.domain.name);
  Var emb = embeddings(tape, bound, batch, domain, mode, update_stats);
  return loss(tape, bound, emb, batch.labels, domain);
}

std::vector<int> Model::predict(const Sample& batch) {
  const int domain = batch.domain.index >= 0 ? batch.domain.index : domain_index(batch.domain.name);
  Tape tape;
  Bound bound = bind(tape, false);
  Var emb = embeddings(tape, bound, batch, domain, Mode::eval, false);
  Logits lo = logits(tape, bound, emb, domain);
  return argmax_over_columns(lo.values.value(), lo.active);
}

}  // namespace ppt
