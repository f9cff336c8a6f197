#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "ppt/trainer.hpp"

namespace ppt {

/// Plain joint-training baseline: no adapter, plain batch norm, one
/// unionized head with domain-masked loss.
Model::Config naive_variant(Model::Config base);

/// Full prompt-training setup: prompt-driven normalization through every
/// stage plus language-guided alignment under InfoNCE.
Model::Config ppt_variant(Model::Config base);

struct TransferCell {
  std::string eval_domain;
  std::string combo;    // "+"-joined training domain names
  std::string variant;  // "naive" or "ppt"
  double miou = 0.0;
};

/// Rows = evaluation domain, columns = training-data combination
/// (single, each pair, all, all under ppt).
struct TransferResult {
  std::vector<std::string> domains;
  std::vector<TransferCell> cells;

  const TransferCell* find(const std::string& eval_domain, const std::string& combo,
                           const std::string& variant) const;
  double get(const std::string& eval_domain, const std::string& combo,
             const std::string& variant) const;  // throws when the cell is missing
  std::string all_combo() const;
};

struct TransferVerdict {
  std::vector<std::string> domains;
  std::vector<double> naive_joint_minus_single;
  std::vector<double> ppt_minus_naive_joint;
  std::vector<double> ppt_minus_single;

  int naive_degraded_count() const;  // domains where joint(all) < single
  bool ppt_geq_naive_everywhere() const;
  int ppt_geq_single_count() const;
};

TransferVerdict analyze_transfer(const TransferResult& result);

/// Trains every combination from scratch with fixed seeds and evaluates
/// each member domain's validation split. The "ppt" variant adds the
/// all-domains column trained with the ppt configuration.
TransferResult run_transfer_matrix(
    const std::vector<DomainData>& domains, const Model::Config& base_model,
    const TrainConfig& base_train, const std::set<std::string>& variants = {"naive", "ppt"},
    const std::function<void(const std::string&)>& progress = nullptr);

}  // namespace ppt
