#include "ppt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ppt/error.hpp"
#include "ppt/rng.hpp"

namespace ppt {

namespace {
constexpr uint64_t kScheduleSalt = 0x5c4edull;
constexpr uint64_t kSceneSalt = 0xda7a5ull;
constexpr uint64_t kBatchSalt = 0xba7c4ull;
}  // namespace

void TrainConfig::validate() const {
  if (total_iters < 0) throw ConfigError("total_iters must be >= 0");
  if (batch_scenes < 1) throw ConfigError("batch_scenes must be >= 1");
  if (max_points_per_scene < 1) throw ConfigError("max_points_per_scene must be >= 1");
  if (base_lr <= 0.0) throw ConfigError("base_lr must be positive");
  if (prompt_lr_scale <= 0.0 || prompt_lr_scale > 1.0) {
    throw ConfigError("prompt_lr_scale must be in (0, 1]");
  }
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  for (const auto& [name, w] : sampling_ratios) {
    if (w < 1) throw ConfigError("sampling ratio for '" + name + "' must be a positive integer");
  }
}

void OptimizerState::init(const ParamRegistry& params) {
  velocity.clear();
  velocity.reserve(static_cast<size_t>(params.count()));
  for (int i = 0; i < params.count(); ++i) velocity.emplace_back(params.value(i).shape());
}

std::vector<int> build_schedule(const std::vector<int>& weights, int total_iters, uint64_t seed) {
  if (weights.empty()) throw std::invalid_argument("build_schedule: empty ratios");
  int64_t wsum = 0;
  for (int w : weights) {
    if (w < 1) throw std::invalid_argument("build_schedule: weights must be positive");
    wsum += w;
  }
  if (total_iters < wsum) {
    throw std::invalid_argument("build_schedule: total_iters " + std::to_string(total_iters) +
                                " below the ratio weight sum " + std::to_string(wsum));
  }
  // largest-remainder quotas, ties broken by lower domain index
  const int n = static_cast<int>(weights.size());
  std::vector<int> counts(static_cast<size_t>(n));
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int d = 0; d < n; ++d) {
    const double exact = static_cast<double>(total_iters) * weights[static_cast<size_t>(d)] /
                         static_cast<double>(wsum);
    counts[static_cast<size_t>(d)] = static_cast<int>(std::floor(exact));
    assigned += counts[static_cast<size_t>(d)];
    remainders.emplace_back(exact - std::floor(exact), d);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i < total_iters - assigned; ++i) {
    ++counts[static_cast<size_t>(remainders[static_cast<size_t>(i) % remainders.size()].second)];
  }

  std::vector<int> schedule;
  schedule.reserve(static_cast<size_t>(total_iters));
  for (int d = 0; d < n; ++d) {
    schedule.insert(schedule.end(), static_cast<size_t>(counts[static_cast<size_t>(d)]), d);
  }
  Rng rng(mix_seed(seed, kScheduleSalt));
  rng.shuffle(schedule);
  return schedule;
}

void sgd_step(ParamRegistry& params, const std::vector<Tensor>& grads, OptimizerState& state,
              const TrainConfig& cfg, double lr_factor,
              const std::function<bool(int)>& participates) {
  if (static_cast<int>(grads.size()) != params.count() ||
      static_cast<int>(state.velocity.size()) != params.count()) {
    throw std::logic_error("sgd_step: gradient/state size does not match the registry");
  }
  for (int i = 0; i < params.count(); ++i) {
    if (!params.trainable(i)) continue;
    if (participates && !participates(i)) continue;
    const auto& e = params.entry(i);
    if (grads[static_cast<size_t>(i)].empty()) {
      throw std::logic_error("sgd_step: missing gradient for parameter " + e.name);
    }
    const double lr = cfg.base_lr * (e.group == ParamGroup::prompt ? cfg.prompt_lr_scale : 1.0) *
                      lr_factor;
    Tensor& p = params.value(i);
    Tensor& v = state.velocity[static_cast<size_t>(i)];
    const Tensor& g = grads[static_cast<size_t>(i)];
    for (int64_t c = 0; c < p.size(); ++c) {
      double gc = g[c];
      if (cfg.weight_decay != 0.0) gc += cfg.weight_decay * p[c];
      v[c] = cfg.momentum * v[c] + gc;
      p[c] -= lr * v[c];
    }
  }
}

EvalOutcome evaluate(Model& model, const Dataset& val, int domain_index) {
  if (val.scenes.empty()) throw DataError("evaluate: empty validation split for " + val.domain_name);
  ConfusionMatrix cm(val.categories.size());
  double loss_sum = 0.0;
  int64_t point_sum = 0;
  for (int s = 0; s < val.scene_count(); ++s) {
    const int n = val.scenes[static_cast<size_t>(s)].point_count();
    Sample batch = make_batch(val, {s}, n, 0);
    batch.domain.index = domain_index;
    const std::vector<int> pred = model.predict(batch);
    cm.merge(confusion(pred, batch.labels, val.categories.size()));
    Tape tape;
    Model::Bound bound = model.bind(tape, false);
    const double scene_loss =
        model.loss_on_batch(tape, bound, batch, Mode::eval, false).value()[0];
    loss_sum += scene_loss * n;
    point_sum += n;
  }
  EvalOutcome out;
  out.iou = miou(cm);
  out.mean_loss = point_sum > 0 ? loss_sum / static_cast<double>(point_sum) : 0.0;
  return out;
}

namespace {

TrainResult train_loop(Model& model, const std::vector<const DomainData*>& domains,
                       const std::vector<int>& model_domain_of, const std::vector<int>& weights,
                       const TrainConfig& cfg, const std::function<bool(int)>& participates) {
  cfg.validate();
  TrainResult result;
  if (cfg.total_iters == 0) return result;

  result.schedule = build_schedule(weights, cfg.total_iters, cfg.seed);
  OptimizerState opt;
  opt.init(model.params());
  Rng scene_rng(mix_seed(cfg.seed, kSceneSalt));

  auto run_evals = [&](int iter) {
    for (size_t d = 0; d < domains.size(); ++d) {
      EvalOutcome ev = evaluate(model, domains[d]->val, model_domain_of[d]);
      MetricEvent e;
      e.iter = iter;
      e.domain = domains[d]->val.domain_name;
      e.split = "val";
      e.miou = ev.iou.miou;
      e.per_class_iou = ev.iou.per_class;
      e.class_valid = ev.iou.valid;
      e.loss = ev.mean_loss;
      result.events.push_back(std::move(e));
    }
  };

  for (int it = 0; it < cfg.total_iters; ++it) {
    const int sched_d = result.schedule[static_cast<size_t>(it)];
    const DomainData& dd = *domains[static_cast<size_t>(sched_d)];
    const int n_scenes = dd.train.scene_count();
    std::vector<int> scene_idx(static_cast<size_t>(cfg.batch_scenes));
    for (int b = 0; b < cfg.batch_scenes; ++b) {
      scene_idx[static_cast<size_t>(b)] = static_cast<int>(scene_rng.uniform_index(
          static_cast<uint64_t>(n_scenes)));
    }
    Sample batch = make_batch(dd.train, scene_idx, cfg.max_points_per_scene,
                              mix_seed(cfg.seed, kBatchSalt + static_cast<uint64_t>(it)));
    batch.domain.index = model_domain_of[static_cast<size_t>(sched_d)];

    Tape tape;
    Model::Bound bound = model.bind(tape, true);
    Var loss = model.loss_on_batch(tape, bound, batch, Mode::train, true);
    const double loss_value = loss.value()[0];
    if (!std::isfinite(loss_value)) {
      throw NumericError("non-finite training loss at iteration " + std::to_string(it) +
                         " on domain " + batch.domain.name);
    }
    tape.backward(loss);
    std::vector<Tensor> grads(static_cast<size_t>(model.params().count()));
    for (int i = 0; i < model.params().count(); ++i) {
      if (tape.requires_grad(bound.of(i))) grads[static_cast<size_t>(i)] = tape.grad(bound.of(i));
    }
    const double lr_factor =
        cfg.cosine_lr ? 0.5 * (1.0 + std::cos(M_PI * it / std::max(1, cfg.total_iters))) : 1.0;
    // detached prompts have no gradient; they never participate
    auto part = [&](int i) {
      if (grads[static_cast<size_t>(i)].empty()) return false;
      return !participates || participates(i);
    };
    sgd_step(model.params(), grads, opt, cfg, lr_factor, part);
    result.loss_trace.push_back(loss_value);

    if (cfg.eval_every > 0 && (it + 1) % cfg.eval_every == 0 && it + 1 != cfg.total_iters) {
      run_evals(it + 1);
    }
  }
  run_evals(cfg.total_iters);
  return result;
}

std::vector<int> ratio_weights(const Model& model, const std::vector<const DomainData*>& domains,
                               const TrainConfig& cfg) {
  (void)model;
  std::vector<int> weights;
  for (const auto* d : domains) {
    auto it = cfg.sampling_ratios.find(d->train.domain_name);
    weights.push_back(it == cfg.sampling_ratios.end() ? 1 : it->second);
  }
  return weights;
}

}  // namespace

TrainResult joint_train(Model& model, const std::vector<DomainData>& domains,
                        const TrainConfig& cfg) {
  if (domains.empty()) throw ConfigError("joint_train: no domains");
  std::vector<const DomainData*> ptrs;
  std::vector<int> model_domain_of;
  for (const auto& d : domains) {
    ptrs.push_back(&d);
    model_domain_of.push_back(model.domain_index(d.train.domain_name));
  }
  return train_loop(model, ptrs, model_domain_of, ratio_weights(model, ptrs, cfg), cfg, nullptr);
}

TrainResult fine_tune(Model& model, const std::vector<DomainData>& domains,
                      const std::string& target_domain, const TrainConfig& cfg) {
  const DomainData* target = nullptr;
  for (const auto& d : domains) {
    if (d.train.domain_name == target_domain) target = &d;
  }
  if (!target) throw ConfigError("fine_tune: target domain '" + target_domain + "' not in the data");
  const int model_domain = model.domain_index(target_domain);  // throws when absent

  auto participates = [&model, target_domain](int i) {
    const auto& e = model.params().entry(i);
    return e.domain.empty() || e.domain == target_domain;
  };
  return train_loop(model, {target}, {model_domain}, {1}, cfg, participates);
}

}  // namespace ppt
