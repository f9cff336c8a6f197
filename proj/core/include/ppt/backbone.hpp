#pragma once

#include <vector>

#include "ppt/adapters.hpp"

namespace ppt {

enum class NormKind { plain_batch_norm, pdnorm };
enum class AdapterKind { none, direct_injection, cross_attention, pdnorm };

/// Staged point-wise encoder: per stage linear -> normalization -> relu ->
/// global-context residual (every point gets the batch-mean feature passed
/// through a linear map added back). Adapters hook into the stages listed
/// in adapter_stages; prompt-driven normalization replaces the stage's
/// normalization layer there.
struct BackboneConfig {
  std::vector<int> stage_dims{32, 64, 128, 64};
  NormKind norm_kind = NormKind::plain_batch_norm;
  AdapterKind adapter_kind = AdapterKind::none;
  std::vector<int> adapter_stages{0, 1, 2, 3};
  int embed_dim = 64;

  int stage_count() const { return static_cast<int>(stage_dims.size()); }
  bool stage_has_adapter(int stage) const;
  void validate() const;
};

}  // namespace ppt
