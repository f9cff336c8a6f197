#include "ppt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ppt/error.hpp"

using nlohmann::json;

namespace ppt {

namespace {

template <typename T>
T enum_from_string(const std::string& value, std::initializer_list<std::pair<const char*, T>> table,
                   const char* what) {
  std::string options;
  for (const auto& [name, v] : table) {
    if (value == name) return v;
    if (!options.empty()) options += ", ";
    options += name;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + value + "' (expected one of: " + options + ")");
}

template <typename T>
std::string enum_to_string(T value, std::initializer_list<std::pair<const char*, T>> table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr auto kLayoutTable = {std::pair{"rooms", LayoutStyle::rooms},
                               std::pair{"corridors", LayoutStyle::corridors},
                               std::pair{"open", LayoutStyle::open}};
constexpr auto kNormKindTable = {std::pair{"plain_batch_norm", NormKind::plain_batch_norm},
                                 std::pair{"pdnorm", NormKind::pdnorm}};
constexpr auto kAdapterTable = {std::pair{"none", AdapterKind::none},
                                std::pair{"direct_injection", AdapterKind::direct_injection},
                                std::pair{"cross_attention", AdapterKind::cross_attention},
                                std::pair{"pdnorm", AdapterKind::pdnorm}};
constexpr auto kNormStyleTable = {std::pair{"batch_stats", NormStyle::batch_stats},
                                  std::pair{"point_stats", NormStyle::point_stats}};
constexpr auto kHeadTable = {std::pair{"decoupled", HeadKind::decoupled},
                             std::pair{"unionized", HeadKind::unionized},
                             std::pair{"language_guided", HeadKind::language_guided}};
constexpr auto kCriterionTable = {std::pair{"infonce_ce", AlignmentCriterion::infonce_ce},
                                  std::pair{"l2", AlignmentCriterion::l2}};
constexpr auto kProviderTable = {std::pair{"deterministic_hash", EmbeddingProvider::deterministic_hash},
                                 std::pair{"file", EmbeddingProvider::file}};

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) {
      if (key == k) ok = true;
    }
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

SyntheticDomainConfig domain_from_json(const json& j) {
  SyntheticDomainConfig cfg;
  if (j.is_string()) return preset_by_name(j.get<std::string>());
  if (!j.is_object()) throw ConfigError("domain entries must be preset names or objects");
  reject_unknown_keys(j, {"preset", "name", "scenes", "points_per_scene", "categories",
                          "density_factor", "noise_sigma", "color_shift", "global_scale",
                          "layout_style", "seed"},
                      "domain entry");
  if (j.contains("preset")) {
    cfg = preset_by_name(j.at("preset").get<std::string>());
  }
  if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
  if (j.contains("scenes")) cfg.scenes = j.at("scenes").get<int>();
  if (j.contains("points_per_scene")) cfg.points_per_scene = j.at("points_per_scene").get<int>();
  if (j.contains("categories")) {
    cfg.category_space.names = j.at("categories").get<std::vector<std::string>>();
  }
  if (j.contains("density_factor")) cfg.density_factor = j.at("density_factor").get<double>();
  if (j.contains("noise_sigma")) cfg.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("color_shift")) {
    auto v = j.at("color_shift").get<std::vector<double>>();
    if (v.size() != 3) throw ConfigError("color_shift must have 3 components");
    for (int c = 0; c < 3; ++c) cfg.color_shift[c] = v[static_cast<size_t>(c)];
  }
  if (j.contains("global_scale")) cfg.global_scale = j.at("global_scale").get<double>();
  if (j.contains("layout_style")) {
    cfg.layout_style = enum_from_string(j.at("layout_style").get<std::string>(), kLayoutTable,
                                        "layout_style");
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  return cfg;
}

json domain_to_json(const SyntheticDomainConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["scenes"] = cfg.scenes;
  j["points_per_scene"] = cfg.points_per_scene;
  j["categories"] = cfg.category_space.names;
  j["density_factor"] = cfg.density_factor;
  j["noise_sigma"] = cfg.noise_sigma;
  j["color_shift"] = {cfg.color_shift[0], cfg.color_shift[1], cfg.color_shift[2]};
  j["global_scale"] = cfg.global_scale;
  j["layout_style"] = enum_to_string(cfg.layout_style, kLayoutTable);
  j["seed"] = cfg.seed;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  reject_unknown_keys(j, {"seed", "out_dir", "data_dir", "domains", "backbone", "adapter",
                          "alignment", "train"},
                      "experiment config");
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("data_dir")) cfg.data_dir = j.at("data_dir").get<std::string>();
  if (j.contains("domains")) {
    cfg.domains.clear();
    for (const auto& d : j.at("domains")) cfg.domains.push_back(domain_from_json(d));
  }
  if (j.contains("backbone")) {
    const json& b = j.at("backbone");
    reject_unknown_keys(b, {"stage_dims", "norm_kind", "adapter_kind", "adapter_stages", "embed_dim"},
                        "backbone");
    auto& bb = cfg.model.backbone;
    if (b.contains("stage_dims")) bb.stage_dims = b.at("stage_dims").get<std::vector<int>>();
    if (b.contains("norm_kind")) {
      bb.norm_kind = enum_from_string(b.at("norm_kind").get<std::string>(), kNormKindTable, "norm_kind");
    }
    if (b.contains("adapter_kind")) {
      bb.adapter_kind = enum_from_string(b.at("adapter_kind").get<std::string>(), kAdapterTable,
                                         "adapter_kind");
    }
    if (b.contains("adapter_stages")) bb.adapter_stages = b.at("adapter_stages").get<std::vector<int>>();
    if (b.contains("embed_dim")) bb.embed_dim = b.at("embed_dim").get<int>();
  }
  if (j.contains("adapter")) {
    const json& a = j.at("adapter");
    reject_unknown_keys(a, {"prompt_dim", "attention_slices", "pdnorm_momentum", "pdnorm_eps",
                            "zero_init", "norm_style", "train_prompts"},
                        "adapter");
    auto& ad = cfg.model.adapter;
    if (a.contains("prompt_dim")) ad.prompt_dim = a.at("prompt_dim").get<int>();
    if (a.contains("attention_slices")) ad.attention_slices = a.at("attention_slices").get<int>();
    if (a.contains("pdnorm_momentum")) ad.pdnorm_momentum = a.at("pdnorm_momentum").get<double>();
    if (a.contains("pdnorm_eps")) ad.pdnorm_eps = a.at("pdnorm_eps").get<double>();
    if (a.contains("zero_init")) ad.zero_init = a.at("zero_init").get<bool>();
    if (a.contains("norm_style")) {
      ad.norm_style = enum_from_string(a.at("norm_style").get<std::string>(), kNormStyleTable,
                                       "norm_style");
    }
    if (a.contains("train_prompts")) ad.train_prompts = a.at("train_prompts").get<bool>();
  }
  if (j.contains("alignment")) {
    const json& al = j.at("alignment");
    reject_unknown_keys(al, {"head", "criterion", "text_dim", "logit_scale", "template", "provider",
                             "embedding_file"},
                        "alignment");
    auto& ag = cfg.model.alignment;
    if (al.contains("head")) {
      ag.head = enum_from_string(al.at("head").get<std::string>(), kHeadTable, "alignment head");
    }
    if (al.contains("criterion")) {
      ag.criterion = enum_from_string(al.at("criterion").get<std::string>(), kCriterionTable,
                                      "alignment criterion");
    }
    if (al.contains("text_dim")) ag.text_dim = al.at("text_dim").get<int>();
    if (al.contains("logit_scale")) ag.logit_scale = al.at("logit_scale").get<double>();
    if (al.contains("template")) ag.templ = al.at("template").get<std::string>();
    if (al.contains("provider")) {
      ag.provider = enum_from_string(al.at("provider").get<std::string>(), kProviderTable,
                                     "embedding provider");
    }
    if (al.contains("embedding_file")) ag.embedding_file = al.at("embedding_file").get<std::string>();
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown_keys(t, {"total_iters", "batch_scenes", "max_points_per_scene", "sampling_ratios",
                            "base_lr", "prompt_lr_scale", "momentum", "weight_decay", "eval_every",
                            "cosine_lr"},
                        "train");
    auto& tr = cfg.train;
    if (t.contains("total_iters")) tr.total_iters = t.at("total_iters").get<int>();
    if (t.contains("batch_scenes")) tr.batch_scenes = t.at("batch_scenes").get<int>();
    if (t.contains("max_points_per_scene")) {
      tr.max_points_per_scene = t.at("max_points_per_scene").get<int>();
    }
    if (t.contains("sampling_ratios")) {
      tr.sampling_ratios = t.at("sampling_ratios").get<std::map<std::string, int>>();
    }
    if (t.contains("base_lr")) tr.base_lr = t.at("base_lr").get<double>();
    if (t.contains("prompt_lr_scale")) tr.prompt_lr_scale = t.at("prompt_lr_scale").get<double>();
    if (t.contains("momentum")) tr.momentum = t.at("momentum").get<double>();
    if (t.contains("weight_decay")) tr.weight_decay = t.at("weight_decay").get<double>();
    if (t.contains("eval_every")) tr.eval_every = t.at("eval_every").get<int>();
    if (t.contains("cosine_lr")) tr.cosine_lr = t.at("cosine_lr").get<bool>();
  }
  cfg.model.init_seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["data_dir"] = cfg.data_dir;
  j["domains"] = json::array();
  for (const auto& d : cfg.domains) j["domains"].push_back(domain_to_json(d));
  json b;
  b["stage_dims"] = cfg.model.backbone.stage_dims;
  b["norm_kind"] = enum_to_string(cfg.model.backbone.norm_kind, kNormKindTable);
  b["adapter_kind"] = enum_to_string(cfg.model.backbone.adapter_kind, kAdapterTable);
  b["adapter_stages"] = cfg.model.backbone.adapter_stages;
  b["embed_dim"] = cfg.model.backbone.embed_dim;
  j["backbone"] = b;
  json a;
  a["prompt_dim"] = cfg.model.adapter.prompt_dim;
  a["attention_slices"] = cfg.model.adapter.attention_slices;
  a["pdnorm_momentum"] = cfg.model.adapter.pdnorm_momentum;
  a["pdnorm_eps"] = cfg.model.adapter.pdnorm_eps;
  a["zero_init"] = cfg.model.adapter.zero_init;
  a["norm_style"] = enum_to_string(cfg.model.adapter.norm_style, kNormStyleTable);
  a["train_prompts"] = cfg.model.adapter.train_prompts;
  j["adapter"] = a;
  json al;
  al["head"] = enum_to_string(cfg.model.alignment.head, kHeadTable);
  al["criterion"] = enum_to_string(cfg.model.alignment.criterion, kCriterionTable);
  al["text_dim"] = cfg.model.alignment.text_dim;
  al["logit_scale"] = cfg.model.alignment.logit_scale;
  al["template"] = cfg.model.alignment.templ;
  al["provider"] = enum_to_string(cfg.model.alignment.provider, kProviderTable);
  al["embedding_file"] = cfg.model.alignment.embedding_file;
  j["alignment"] = al;
  json t;
  t["total_iters"] = cfg.train.total_iters;
  t["batch_scenes"] = cfg.train.batch_scenes;
  t["max_points_per_scene"] = cfg.train.max_points_per_scene;
  t["sampling_ratios"] = cfg.train.sampling_ratios;
  t["base_lr"] = cfg.train.base_lr;
  t["prompt_lr_scale"] = cfg.train.prompt_lr_scale;
  t["momentum"] = cfg.train.momentum;
  t["weight_decay"] = cfg.train.weight_decay;
  t["eval_every"] = cfg.train.eval_every;
  t["cosine_lr"] = cfg.train.cosine_lr;
  j["train"] = t;
  return j;
}

std::string pointer_from_dotted(const std::string& dotted) {
  std::string ptr;
  for (char c : dotted) ptr += c == '.' ? '/' : c;
  return "/" + ptr;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.domains = default_presets();
  cfg.train.sampling_ratios = {{"synth-A", 4}, {"real-B", 2}, {"real-C", 1}};
  cfg.model.backbone = BackboneConfig{};
  cfg.model.backbone.adapter_kind = AdapterKind::pdnorm;
  cfg.model.backbone.norm_kind = NormKind::pdnorm;
  cfg.model.alignment.head = HeadKind::language_guided;
  cfg.model.init_seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  return cfg;
}

std::vector<std::string> ExperimentConfig::domain_names() const {
  std::vector<std::string> names;
  for (const auto& d : domains) names.push_back(d.name);
  return names;
}

void ExperimentConfig::validate() const {
  if (domains.empty()) throw ConfigError("experiment needs at least one domain");
  std::set<std::string> names;
  for (const auto& d : domains) {
    d.validate();
    if (!names.insert(d.name).second) throw ConfigError("duplicate domain name: " + d.name);
  }
  for (const auto& [name, w] : train.sampling_ratios) {
    (void)w;
    if (!names.count(name)) {
      throw ConfigError("sampling ratio for '" + name + "' does not match any configured domain");
    }
  }
  model.validate();
  train.validate();
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::vector<std::string>& overrides,
                                                  std::optional<uint64_t> seed_flag) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override must look like path.to.key=value, got '" + ov + "'");
    }
    const std::string path = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;  // plain strings need no quotes
    try {
      j[json::json_pointer(pointer_from_dotted(path))] = value;
    } catch (const json::exception& e) {
      throw ConfigError("cannot apply override '" + ov + "': " + e.what());
    }
  }
  if (seed_flag) j["seed"] = *seed_flag;
  return config_from_json(j);
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path,
                                             const std::vector<std::string>& overrides,
                                             std::optional<uint64_t> seed_flag) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  try {
    return from_json_text(buf.str(), overrides, seed_flag);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string ExperimentConfig::to_json_text() const {
  return config_to_json(*this).dump(2) + "\n";
}

}  // namespace ppt
