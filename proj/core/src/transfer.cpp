#include "ppt/transfer.hpp"

#include <stdexcept>

#include "ppt/error.hpp"

namespace ppt {

Model::Config naive_variant(Model::Config base) {
  base.backbone.adapter_kind = AdapterKind::none;
  base.backbone.norm_kind = NormKind::plain_batch_norm;
  base.alignment.head = HeadKind::unionized;
  base.alignment.criterion = AlignmentCriterion::infonce_ce;
  return base;
}

Model::Config ppt_variant(Model::Config base) {
  base.backbone.adapter_kind = AdapterKind::pdnorm;
  base.backbone.norm_kind = NormKind::pdnorm;
  base.backbone.adapter_stages.clear();
  for (int s = 0; s < base.backbone.stage_count(); ++s) base.backbone.adapter_stages.push_back(s);
  base.alignment.head = HeadKind::language_guided;
  base.alignment.criterion = AlignmentCriterion::infonce_ce;
  base.adapter.zero_init = true;
  return base;
}

const TransferCell* TransferResult::find(const std::string& eval_domain, const std::string& combo,
                                         const std::string& variant) const {
  for (const auto& c : cells) {
    if (c.eval_domain == eval_domain && c.combo == combo && c.variant == variant) return &c;
  }
  return nullptr;
}

double TransferResult::get(const std::string& eval_domain, const std::string& combo,
                           const std::string& variant) const {
  const TransferCell* c = find(eval_domain, combo, variant);
  if (!c) {
    throw std::out_of_range("transfer matrix cell missing: " + eval_domain + " / " + combo + " / " +
                            variant);
  }
  return c->miou;
}

std::string TransferResult::all_combo() const {
  std::string label;
  for (const auto& d : domains) {
    if (!label.empty()) label += "+";
    label += d;
  }
  return label;
}

int TransferVerdict::naive_degraded_count() const {
  int n = 0;
  for (double d : naive_joint_minus_single) {
    if (d < 0.0) ++n;
  }
  return n;
}

bool TransferVerdict::ppt_geq_naive_everywhere() const {
  for (double d : ppt_minus_naive_joint) {
    if (d < 0.0) return false;
  }
  return true;
}

int TransferVerdict::ppt_geq_single_count() const {
  int n = 0;
  for (double d : ppt_minus_single) {
    if (d >= 0.0) ++n;
  }
  return n;
}

TransferVerdict analyze_transfer(const TransferResult& result) {
  TransferVerdict v;
  v.domains = result.domains;
  const std::string all = result.all_combo();
  for (const auto& d : result.domains) {
    const double single = result.get(d, d, "naive");
    const double joint = result.get(d, all, "naive");
    v.naive_joint_minus_single.push_back(joint - single);
    if (const TransferCell* p = result.find(d, all, "ppt")) {
      v.ppt_minus_naive_joint.push_back(p->miou - joint);
      v.ppt_minus_single.push_back(p->miou - single);
    }
  }
  return v;
}

TransferResult run_transfer_matrix(const std::vector<DomainData>& domains,
                                   const Model::Config& base_model, const TrainConfig& base_train,
                                   const std::set<std::string>& variants,
                                   const std::function<void(const std::string&)>& progress) {
  if (domains.size() < 2) throw ConfigError("the transfer matrix needs at least two domains");
  for (const auto& v : variants) {
    if (v != "naive" && v != "ppt") throw ConfigError("unknown transfer variant: " + v);
  }

  TransferResult result;
  for (const auto& d : domains) result.domains.push_back(d.train.domain_name);

  // training-set combinations: singles, pairs, and the full set
  std::vector<std::vector<int>> combos;
  const int n = static_cast<int>(domains.size());
  for (int i = 0; i < n; ++i) combos.push_back({i});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) combos.push_back({i, j});
  if (n > 2) {
    std::vector<int> all(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
    combos.push_back(std::move(all));
  }

  auto combo_label = [&](const std::vector<int>& combo) {
    std::string label;
    for (int i : combo) {
      if (!label.empty()) label += "+";
      label += result.domains[static_cast<size_t>(i)];
    }
    return label;
  };

  auto run_one = [&](const std::vector<int>& combo, const Model::Config& cfg,
                     const std::string& variant) {
    std::vector<DomainData> subset;
    for (int i : combo) subset.push_back(domains[static_cast<size_t>(i)]);
    const std::string label = combo_label(combo);
    if (progress) progress(variant + " / " + label);
    Model model(cfg, domain_infos(subset));
    TrainResult tr = joint_train(model, subset, base_train);
    for (const auto& d : subset) {
      double final_miou = 0.0;
      for (const auto& e : tr.events) {
        if (e.domain == d.train.domain_name && e.iter == base_train.total_iters) {
          final_miou = e.miou;
        }
      }
      result.cells.push_back({d.train.domain_name, label, variant, final_miou});
    }
  };

  if (variants.count("naive")) {
    const Model::Config cfg = naive_variant(base_model);
    for (const auto& combo : combos) run_one(combo, cfg, "naive");
  }
  if (variants.count("ppt")) {
    std::vector<int> all(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
    run_one(all, ppt_variant(base_model), "ppt");
  }
  return result;
}

}  // namespace ppt
