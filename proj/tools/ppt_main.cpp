// ppt: multi-dataset point-cloud segmentation training with domain prompts.
//
// Subcommands: gen-data, train, finetune, eval, ablate, report.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ppt/config.hpp"
#include "ppt/error.hpp"
#include "ppt/trainer.hpp"
#include "ppt/transfer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppt;

namespace {

// Relative paths resolve against $PPT_OUT_ROOT when it is set.
fs::path resolve_path(const std::string& p) {
  fs::path path(p);
  if (path.is_absolute()) return path;
  if (const char* root = std::getenv("PPT_OUT_ROOT")) return fs::path(root) / path;
  return path;
}

fs::path dataset_path(const ExperimentConfig& cfg, const std::string& domain, const char* split) {
  return resolve_path(cfg.data_dir) / (domain + "." + split + ".pptd");
}

std::vector<DomainData> load_domains(const ExperimentConfig& cfg) {
  std::vector<DomainData> out;
  for (const auto& d : cfg.domains) {
    DomainData dd;
    const fs::path train_path = dataset_path(cfg, d.name, "train");
    const fs::path val_path = dataset_path(cfg, d.name, "val");
    if (!fs::exists(train_path) || !fs::exists(val_path)) {
      throw DataError("dataset files for domain '" + d.name + "' not found under " +
                      resolve_path(cfg.data_dir).string() + " (run `ppt gen-data` first)");
    }
    dd.train = load_dataset(train_path);
    dd.val = load_dataset(val_path);
    if (dd.train.domain_name != d.name) {
      throw DataError("domain name mismatch: config says '" + d.name + "', file says '" +
                      dd.train.domain_name + "'");
    }
    out.push_back(std::move(dd));
  }
  return out;
}

json event_to_json(const MetricEvent& e, const CategorySpace& categories) {
  json per_class = json::object();
  for (size_t c = 0; c < e.per_class_iou.size(); ++c) {
    if (c < e.class_valid.size() && e.class_valid[c]) {
      per_class[categories.names[c]] = e.per_class_iou[c];
    }
  }
  return json{{"iter", e.iter},         {"domain", e.domain}, {"split", e.split},
              {"miou", e.miou},         {"per_class_iou", per_class},
              {"loss", e.loss}};
}

void write_metrics(const fs::path& path, const std::vector<MetricEvent>& events,
                   const std::vector<DomainData>& domains) {
  std::ofstream f(path, std::ios::binary);  // binary keeps line endings stable
  if (!f) throw DataError("cannot write metrics file: " + path.string());
  for (const auto& e : events) {
    const CategorySpace* space = nullptr;
    for (const auto& d : domains) {
      if (d.train.domain_name == e.domain) space = &d.train.categories;
    }
    if (!space) throw std::logic_error("metric event for unknown domain " + e.domain);
    f << event_to_json(e, *space).dump() << "\n";
  }
}

void print_final_mious(const TrainResult& result, int total_iters) {
  for (const auto& e : result.events) {
    if (e.iter == total_iters) {
      std::cout << "  " << e.domain << " val mIoU " << std::fixed << std::setprecision(4) << e.miou
                << " (loss " << std::setprecision(4) << e.loss << ")\n";
    }
  }
}

struct RunArtifacts {
  fs::path dir;
  TrainResult result;
};

RunArtifacts run_training(const ExperimentConfig& cfg, const std::vector<DomainData>& domains,
                          const fs::path& out_dir, bool quiet = false) {
  fs::create_directories(out_dir);
  Model model(cfg.model, domain_infos(domains));
  TrainResult result = joint_train(model, domains, cfg.train);
  model.save_checkpoint(out_dir / "model.pptc");
  {
    std::ofstream f(out_dir / "config.json", std::ios::binary);
    f << cfg.to_json_text();
  }
  write_metrics(out_dir / "metrics.jsonl", result.events, domains);
  if (!quiet) {
    std::cout << "trained " << cfg.train.total_iters << " iters; artifacts in " << out_dir.string()
              << "\n";
    print_final_mious(result, cfg.train.total_iters);
  }
  return {out_dir, std::move(result)};
}

// ---- gen-data ---------------------------------------------------------------

int cmd_gen_data(const std::string& config_path, const std::vector<std::string>& overrides,
                 std::optional<uint64_t> seed, const std::string& out_override) {
  ExperimentConfig cfg = config_path.empty()
                             ? ExperimentConfig::defaults()
                             : ExperimentConfig::from_file(config_path, overrides, seed);
  if (config_path.empty() && (!overrides.empty() || seed)) {
    cfg = ExperimentConfig::from_json_text("{}", overrides, seed);
  }
  const fs::path out = out_override.empty() ? resolve_path(cfg.data_dir) : resolve_path(out_override);
  fs::create_directories(out);
  for (const auto& dc : cfg.domains) {
    DomainData data = generate_domain(dc);
    const fs::path train_path = out / (dc.name + ".train.pptd");
    const fs::path val_path = out / (dc.name + ".val.pptd");
    save_dataset(data.train, train_path);
    save_dataset(data.val, val_path);
    std::cout << dc.name << ": " << data.train.scene_count() << " train / "
              << data.val.scene_count() << " val scenes, " << data.train.total_points() << " / "
              << data.val.total_points() << " points -> " << train_path.string() << ", "
              << val_path.string() << "\n";
  }
  return 0;
}

// ---- train / finetune ----------------------------------------------------------

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              std::optional<uint64_t> seed) {
  ExperimentConfig cfg = ExperimentConfig::from_file(config_path, overrides, seed);
  const auto domains = load_domains(cfg);
  run_training(cfg, domains, resolve_path(cfg.out_dir));
  return 0;
}

int cmd_finetune(const std::string& config_path, const std::string& checkpoint,
                 const std::string& target, const std::vector<std::string>& overrides,
                 std::optional<uint64_t> seed) {
  ExperimentConfig cfg = ExperimentConfig::from_file(config_path, overrides, seed);
  const auto domains = load_domains(cfg);
  Model model(cfg.model, domain_infos(domains));
  model.load_checkpoint(resolve_path(checkpoint));
  model.domain_index(target);  // unknown targets fail before any training
  TrainResult result = fine_tune(model, domains, target, cfg.train);
  const fs::path out_dir = resolve_path(cfg.out_dir) / ("finetune-" + target);
  fs::create_directories(out_dir);
  model.save_checkpoint(out_dir / "model.pptc");
  {
    std::ofstream f(out_dir / "config.json", std::ios::binary);
    f << cfg.to_json_text();
  }
  write_metrics(out_dir / "metrics.jsonl", result.events, domains);
  std::cout << "fine-tuned on " << target << " for " << cfg.train.total_iters
            << " iters; artifacts in " << out_dir.string() << "\n";
  print_final_mious(result, cfg.train.total_iters);
  return 0;
}

// ---- eval ------------------------------------------------------------------------

int cmd_eval(const std::string& checkpoint, const std::vector<std::string>& data_files,
             std::string config_path) {
  const fs::path ckpt = resolve_path(checkpoint);
  if (config_path.empty()) {
    const fs::path sibling = ckpt.parent_path() / "config.json";
    if (!fs::exists(sibling)) {
      throw ConfigError("no --config given and " + sibling.string() + " does not exist");
    }
    config_path = sibling.string();
  }
  ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
  std::vector<DomainInfo> infos;
  for (const auto& d : cfg.domains) infos.push_back({d.name, d.category_space});
  Model model(cfg.model, infos);
  model.load_checkpoint(ckpt);
  for (const auto& file : data_files) {
    Dataset ds = load_dataset(resolve_path(file));
    const int idx = model.domain_index(ds.domain_name);
    EvalOutcome ev = evaluate(model, ds, idx);
    std::cout << ds.domain_name << " (" << file << "): mIoU " << std::fixed
              << std::setprecision(4) << ev.iou.miou << ", loss " << ev.mean_loss << "\n";
    for (size_t c = 0; c < ds.categories.names.size(); ++c) {
      if (ev.iou.valid[c]) {
        std::cout << "    " << std::left << std::setw(16) << ds.categories.names[c] << std::right
                  << std::setprecision(4) << ev.iou.per_class[c] << "\n";
      }
    }
  }
  return 0;
}

// ---- ablate ------------------------------------------------------------------------

struct AblateVariant {
  std::string label;
  std::vector<std::string> overrides;
};

std::vector<AblateVariant> axis_variants(const std::string& axis, const ExperimentConfig& base) {
  if (axis == "adapter") {
    return {{"none", {"backbone.adapter_kind=none", "backbone.norm_kind=plain_batch_norm"}},
            {"add", {"backbone.adapter_kind=direct_injection", "backbone.norm_kind=plain_batch_norm"}},
            {"ca", {"backbone.adapter_kind=cross_attention", "backbone.norm_kind=plain_batch_norm"}},
            {"pn", {"backbone.adapter_kind=pdnorm", "backbone.norm_kind=pdnorm"}}};
  }
  if (axis == "zero-init") {
    return {{"on", {"adapter.zero_init=true"}}, {"off", {"adapter.zero_init=false"}}};
  }
  if (axis == "lr-scale") {
    return {{"1", {"train.prompt_lr_scale=1.0"}},
            {"0.1", {"train.prompt_lr_scale=0.1"}},
            {"0.01", {"train.prompt_lr_scale=0.01"}}};
  }
  if (axis == "stages") {
    const int n = base.model.backbone.stage_count();
    std::vector<AblateVariant> out;
    for (int k = 1; k <= std::min(3, n); ++k) {
      json stages = json::array();
      for (int s = n - k; s < n; ++s) stages.push_back(s);
      out.push_back({"last" + std::to_string(k), {"backbone.adapter_stages=" + stages.dump()}});
    }
    json all = json::array();
    for (int s = 0; s < n; ++s) all.push_back(s);
    out.push_back({"all", {"backbone.adapter_stages=" + all.dump()}});
    return out;
  }
  if (axis == "prompt-dim") {
    return {{"64", {"adapter.prompt_dim=64"}},
            {"256", {"adapter.prompt_dim=256"}},
            {"1024", {"adapter.prompt_dim=1024"}}};
  }
  if (axis == "alignment") {
    return {{"decoupled", {"alignment.head=decoupled"}},
            {"unionized", {"alignment.head=unionized"}},
            {"lg", {"alignment.head=language_guided"}}};
  }
  if (axis == "criterion") {
    return {{"l2", {"alignment.criterion=l2", "alignment.head=language_guided"}},
            {"infonce", {"alignment.criterion=infonce_ce", "alignment.head=language_guided"}}};
  }
  if (axis == "template") {
    return {{"name", {"alignment.template=[class]"}},
            {"sentence", {R"(alignment.template=A point of [class].)"}}};
  }
  if (axis == "ratios") {
    std::vector<AblateVariant> out;
    for (const std::string spec : {"1:1:1", "2:2:1", "4:2:1"}) {
      json ratios = json::object();
      std::istringstream ss(spec);
      std::string tok;
      size_t i = 0;
      while (std::getline(ss, tok, ':') && i < base.domains.size()) {
        ratios[base.domains[i].name] = std::stoi(tok);
        ++i;
      }
      out.push_back({spec, {"train.sampling_ratios=" + ratios.dump()}});
    }
    return out;
  }
  throw ConfigError("unknown ablation axis '" + axis +
                    "' (expected one of: adapter, zero-init, lr-scale, stages, prompt-dim, "
                    "alignment, criterion, template, ratios, data)");
}

int cmd_ablate(const std::string& axis, const std::string& config_path,
               const std::vector<std::string>& overrides, std::optional<uint64_t> seed,
               const std::string& out_override, int jobs) {
  std::ifstream f(config_path);
  if (!f) throw ConfigError("cannot open config file: " + config_path);
  std::ostringstream buf;
  buf << f.rdbuf();
  const std::string base_text = buf.str();
  ExperimentConfig base = ExperimentConfig::from_json_text(base_text, overrides, seed);
  const fs::path out_root = out_override.empty() ? resolve_path(base.out_dir) / "ablate"
                                                 : resolve_path(out_override);

  if (axis == "data") {
    // the joint-training data axis is the transfer matrix
    const auto domains = load_domains(base);
    TransferResult tm = run_transfer_matrix(domains, base.model, base.train, {"naive", "ppt"},
                                            [](const std::string& label) {
                                              std::cout << "  training " << label << "\n";
                                            });
    TransferVerdict verdict = analyze_transfer(tm);
    json out;
    out["domains"] = tm.domains;
    out["cells"] = json::array();
    for (const auto& c : tm.cells) {
      out["cells"].push_back({{"eval_domain", c.eval_domain},
                              {"combo", c.combo},
                              {"variant", c.variant},
                              {"miou", c.miou}});
    }
    json jv;
    for (size_t i = 0; i < verdict.domains.size(); ++i) {
      jv[verdict.domains[i]] = {{"naive_joint_minus_single", verdict.naive_joint_minus_single[i]},
                                {"ppt_minus_naive_joint", verdict.ppt_minus_naive_joint[i]},
                                {"ppt_minus_single", verdict.ppt_minus_single[i]}};
    }
    out["verdict"] = jv;
    fs::create_directories(out_root / "data");
    {
      std::ofstream jf(out_root / "data" / "transfer.json", std::ios::binary);
      jf << out.dump(2) << "\n";
    }
    std::cout << "transfer matrix written to " << (out_root / "data" / "transfer.json").string()
              << "\n";
    return 0;
  }

  const auto variants = axis_variants(axis, base);
  const auto domains = load_domains(base);

  std::vector<std::string> failures(variants.size());
  std::atomic<size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < variants.size(); i = next.fetch_add(1)) {
      const auto& v = variants[i];
      try {
        std::vector<std::string> all = overrides;
        all.insert(all.end(), v.overrides.begin(), v.overrides.end());
        ExperimentConfig cfg = ExperimentConfig::from_json_text(base_text, all, seed);
        const fs::path dir = out_root / axis / v.label;
        {
          std::lock_guard<std::mutex> lock(io_mutex);
          std::cout << "ablate " << axis << " = " << v.label << "\n";
        }
        run_training(cfg, domains, dir, /*quiet=*/true);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(variants.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (size_t i = 0; i < variants.size(); ++i) {
    if (!failures[i].empty()) {
      throw ConfigError("ablation '" + variants[i].label + "' failed: " + failures[i]);
    }
  }
  std::cout << variants.size() << " runs under " << (out_root / axis).string()
            << "; render with `ppt report --dir " << out_root.string() << "`\n";
  return 0;
}

// ---- report ------------------------------------------------------------------------

struct RunSummary {
  std::string label;
  std::map<std::string, double> final_miou;  // domain -> miou of last iter
};

std::optional<RunSummary> summarize_metrics(const fs::path& metrics_file, const std::string& label) {
  std::ifstream f(metrics_file);
  if (!f) return std::nullopt;
  RunSummary s;
  s.label = label;
  std::map<std::string, std::pair<int, double>> last;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError("bad metrics line in " + metrics_file.string());
    const std::string domain = j.value("domain", "");
    const int iter = j.value("iter", 0);
    auto& slot = last[domain];
    if (iter >= slot.first) slot = {iter, j.value("miou", 0.0)};
  }
  for (const auto& [domain, iter_miou] : last) s.final_miou[domain] = iter_miou.second;
  return s;
}

void print_table(const std::string& title, const std::vector<std::string>& columns,
                 const std::vector<std::pair<std::string, std::vector<std::string>>>& rows) {
  std::cout << "\n" << title << "\n";
  size_t label_w = 8;
  for (const auto& [label, cells] : rows) label_w = std::max(label_w, label.size());
  std::vector<size_t> widths;
  for (const auto& c : columns) widths.push_back(std::max<size_t>(8, c.size()));
  std::cout << "  " << std::left << std::setw(static_cast<int>(label_w)) << "" << std::right;
  for (size_t j = 0; j < columns.size(); ++j) {
    std::cout << "  " << std::setw(static_cast<int>(widths[j])) << columns[j];
  }
  std::cout << "\n";
  for (const auto& [label, cells] : rows) {
    std::cout << "  " << std::left << std::setw(static_cast<int>(label_w)) << label << std::right;
    for (size_t j = 0; j < cells.size(); ++j) {
      std::cout << "  " << std::setw(static_cast<int>(widths[j])) << cells[j];
    }
    std::cout << "\n";
  }
}

std::string fmt_miou(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

void report_transfer(const fs::path& file) {
  std::ifstream f(file);
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded()) throw DataError("bad transfer matrix json: " + file.string());
  const auto domains = j.at("domains").get<std::vector<std::string>>();
  auto cell = [&](const std::string& eval, const std::string& combo,
                  const std::string& variant) -> std::string {
    for (const auto& c : j.at("cells")) {
      if (c.at("eval_domain") == eval && c.at("combo") == combo && c.at("variant") == variant) {
        return fmt_miou(c.at("miou").get<double>());
      }
    }
    return "-";
  };
  std::string all;
  for (const auto& d : domains) {
    if (!all.empty()) all += "+";
    all += d;
  }
  std::vector<std::string> columns = {"single"};
  for (const auto& d : domains) columns.push_back("+" + d);
  columns.push_back("all");
  columns.push_back("all(ppt)");
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  for (const auto& eval : domains) {
    std::vector<std::string> cells;
    cells.push_back(cell(eval, eval, "naive"));
    for (const auto& other : domains) {
      if (other == eval) {
        cells.push_back("-");
        continue;
      }
      std::string combo;  // pair label in registration order
      for (const auto& d : domains) {
        if (d == eval || d == other) {
          if (!combo.empty()) combo += "+";
          combo += d;
        }
      }
      cells.push_back(cell(eval, combo, "naive"));
    }
    cells.push_back(cell(eval, all, "naive"));
    cells.push_back(cell(eval, all, "ppt"));
    rows.emplace_back(eval, std::move(cells));
  }
  print_table("transfer matrix (" + file.string() + ")", columns, rows);
  if (j.contains("verdict")) {
    std::cout << "\n  negative transfer (naive joint vs single):\n";
    for (const auto& [domain, v] : j.at("verdict").items()) {
      std::cout << "    " << std::left << std::setw(10) << domain << std::right << " joint-single "
                << std::showpos << fmt_miou(v.at("naive_joint_minus_single").get<double>())
                << "  ppt-naive " << fmt_miou(v.at("ppt_minus_naive_joint").get<double>())
                << "  ppt-single " << fmt_miou(v.at("ppt_minus_single").get<double>())
                << std::noshowpos << "\n";
    }
  }
}

int cmd_report(const std::string& dir) {
  const fs::path root = resolve_path(dir);
  if (!fs::exists(root)) throw DataError("no runs found: " + root.string() + " does not exist");

  bool found = false;
  // transfer matrices
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "transfer.json") {
      report_transfer(entry.path());
      found = true;
    }
  }
  // group metrics files by parent-of-parent (axis directories and plain runs)
  std::map<std::string, std::vector<std::pair<std::string, fs::path>>> groups;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "metrics.jsonl") {
      const fs::path run_dir = entry.path().parent_path();
      groups[run_dir.parent_path().string()].emplace_back(run_dir.filename().string(), entry.path());
    }
  }
  for (auto& [group, runs] : groups) {
    std::sort(runs.begin(), runs.end());
    std::vector<RunSummary> summaries;
    std::set<std::string> domain_set;
    for (const auto& [label, path] : runs) {
      if (auto s = summarize_metrics(path, label)) {
        for (const auto& [d, m] : s->final_miou) domain_set.insert(d);
        summaries.push_back(std::move(*s));
      }
    }
    if (summaries.empty()) continue;
    found = true;
    std::vector<std::string> columns(domain_set.begin(), domain_set.end());
    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
    for (const auto& s : summaries) {
      std::vector<std::string> cells;
      for (const auto& d : columns) {
        auto it = s.final_miou.find(d);
        cells.push_back(it == s.final_miou.end() ? "-" : fmt_miou(it->second));
      }
      rows.emplace_back(s.label, std::move(cells));
    }
    print_table("final val mIoU (" + group + ")", columns, rows);
  }
  if (!found) throw DataError("no runs found under " + root.string());
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-dataset point-cloud segmentation with domain prompt training"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, target, out_dir, axis, report_dir;
  std::vector<std::string> overrides, data_files;
  std::optional<uint64_t> seed;
  int jobs = 1;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    cmd->add_option("--config", config_path, "experiment config JSON")->required(config_required);
    cmd->add_option("--set", overrides, "dotted-path config override, e.g. train.base_lr=0.05");
    cmd->add_option("--seed", seed, "seed override; fully determines all outputs");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic domain datasets");
  add_common(gen, false);
  gen->add_option("--out", out_dir, "output directory (default: config data_dir)");

  CLI::App* train = app.add_subcommand("train", "multi-dataset joint training");
  add_common(train, true);

  CLI::App* finetune = app.add_subcommand("finetune", "continue training on one target domain");
  add_common(finetune, true);
  finetune->add_option("--checkpoint", checkpoint, "joint-training checkpoint")->required();
  finetune->add_option("--target", target, "target domain name")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on dataset files");
  eval->add_option("--checkpoint", checkpoint, "model checkpoint (.pptc)")->required();
  eval->add_option("--data", data_files, "dataset files (.pptd)")->required();
  eval->add_option("--config", config_path, "config JSON (default: sibling of the checkpoint)");

  CLI::App* ablate = app.add_subcommand("ablate", "sweep one configuration axis");
  ablate->add_option("--axis", axis,
                     "adapter | zero-init | lr-scale | stages | prompt-dim | alignment | "
                     "criterion | template | ratios | data")
      ->required();
  add_common(ablate, true);
  ablate->add_option("--out", out_dir, "output root (default: <out_dir>/ablate)");
  ablate->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

  CLI::App* report = app.add_subcommand("report", "render transfer/ablation tables from a run dir");
  report->add_option("--dir", report_dir, "directory holding runs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, overrides, seed, out_dir);
    if (train->parsed()) return cmd_train(config_path, overrides, seed);
    if (finetune->parsed()) return cmd_finetune(config_path, checkpoint, target, overrides, seed);
    if (eval->parsed()) return cmd_eval(checkpoint, data_files, config_path);
    if (ablate->parsed()) return cmd_ablate(axis, config_path, overrides, seed, out_dir, jobs);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
