#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ppt/data.hpp"
#include "ppt/model.hpp"
#include "ppt/trainer.hpp"

namespace ppt {

/// One experiment: domain generation configs, model configuration and the
/// training schedule. A single JSON document, overridable by dotted-path
/// assignments ("train.base_lr=0.05"). The top-level seed drives parameter
/// initialization, batching and scheduling alike.
struct ExperimentConfig {
  uint64_t seed = 7;
  std::string out_dir = "runs/default";
  std::string data_dir = "data";
  std::vector<SyntheticDomainConfig> domains;
  Model::Config model;
  TrainConfig train;

  /// Built-in defaults: the three domain presets, sampling ratios 4:2:1,
  /// prompt-driven normalization with language-guided alignment.
  static ExperimentConfig defaults();

  static ExperimentConfig from_json_text(const std::string& text,
                                         const std::vector<std::string>& overrides = {},
                                         std::optional<uint64_t> seed_flag = std::nullopt);
  static ExperimentConfig from_file(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {},
                                    std::optional<uint64_t> seed_flag = std::nullopt);

  /// Fully-resolved config document; parses back identically.
  std::string to_json_text() const;

  std::vector<std::string> domain_names() const;
  void validate() const;
};

}  // namespace ppt
