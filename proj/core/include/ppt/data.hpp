#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ppt/tensor.hpp"

namespace ppt {

/// Dense per-registry index plus human-readable name of a dataset domain.
struct DomainId {
  int index = -1;
  std::string name;
};

/// Ordered list of category names. Unique, non-empty.
struct CategorySpace {
  std::vector<std::string> names;

  int size() const { return static_cast<int>(names.size()); }
  int index_of(const std::string& name) const;  // -1 if absent
  void validate() const;
};

/// Union of several category spaces with per-domain index maps and masks.
/// Shared names (exact, case-sensitive match) map to the same unified index.
struct UnifiedLabelSpace {
  std::vector<std::string> names;                   // first-seen order
  std::vector<std::vector<int>> local_to_unified;   // [domain][local] -> unified
  std::vector<std::vector<uint8_t>> domain_mask;    // [domain][unified] -> 0/1

  int size() const { return static_cast<int>(names.size()); }
  int domains() const { return static_cast<int>(local_to_unified.size()); }
};

UnifiedLabelSpace build_unified_label_space(const std::vector<CategorySpace>& spaces);

/// One labelled point-cloud scene. Positions and features are quantized to
/// f32 precision at generation time so in-memory data matches the on-disk
/// PPTD representation exactly.
struct Scene {
  Tensor positions;              // N x 3
  Tensor features;               // N x 3, pseudo-color in [0,1]
  std::vector<uint16_t> labels;  // N, domain-local category indices

  int point_count() const { return positions.rank() == 2 ? positions.dim(0) : 0; }
};

/// One split of a domain's data, immutable after generation/load.
struct Dataset {
  std::string domain_name;
  CategorySpace categories;
  std::vector<Scene> scenes;

  int scene_count() const { return static_cast<int>(scenes.size()); }
  int64_t total_points() const;
};

/// Train + validation splits of a generated domain.
struct DomainData {
  Dataset train;
  Dataset val;
};

enum class LayoutStyle { rooms, corridors, open };

/// Knobs controlling the synthetic domain generator. The presets below fix
/// these so that the three domains differ in scale, density, noise, color
/// statistics and color-to-category assignment.
struct SyntheticDomainConfig {
  std::string name;
  int scenes = 10;
  int points_per_scene = 1000;
  CategorySpace category_space;
  double density_factor = 1.0;
  double noise_sigma = 0.0;      // position jitter (scene units)
  double color_shift[3] = {0.0, 0.0, 0.0};
  double global_scale = 1.0;
  LayoutStyle layout_style = LayoutStyle::rooms;
  uint64_t seed = 1;

  void validate() const;
};

/// Deterministic in cfg.seed; 80/20 train/val split by scene index.
DomainData generate_domain(const SyntheticDomainConfig& cfg);

/// The three fixed domain presets used across experiments: a large clean
/// synthetic-style domain and two smaller noisy scan-style domains with
/// partially overlapping label spaces.
SyntheticDomainConfig preset_synth_a();
SyntheticDomainConfig preset_real_b();
SyntheticDomainConfig preset_real_c();
std::vector<SyntheticDomainConfig> default_presets();
SyntheticDomainConfig preset_by_name(const std::string& name);

/// PPTD binary format, little-endian. One file per split.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Domain-tagged batch: concatenated per-scene subsamples, single domain.
struct Sample {
  DomainId domain;
  Tensor positions;        // N x 3
  Tensor features;         // N x 3
  std::vector<int> labels; // N, domain-local
};

/// Draws at most max_points per selected scene (without replacement),
/// deterministic in seed. Picked indices are kept in ascending order.
Sample make_batch(const Dataset& ds, const std::vector<int>& scene_indices, int max_points,
                  uint64_t seed);

}  // namespace ppt
