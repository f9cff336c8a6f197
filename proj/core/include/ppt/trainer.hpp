#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ppt/metrics.hpp"
#include "ppt/model.hpp"

namespace ppt {

struct TrainConfig {
  int total_iters = 300;
  int batch_scenes = 4;
  int max_points_per_scene = 256;
  /// Draw weights per domain name; missing domains default to weight 1.
  std::map<std::string, int> sampling_ratios;
  double base_lr = 0.1;
  double prompt_lr_scale = 0.1;  // prompt-group learning rate multiplier
  double momentum = 0.9;
  double weight_decay = 0.0;
  uint64_t seed = 1;
  int eval_every = 100;          // 0 disables intermediate evals; a final eval always runs
  bool cosine_lr = false;        // constant lr by default

  void validate() const;
};

/// Per-parameter momentum buffers.
struct OptimizerState {
  std::vector<Tensor> velocity;
  void init(const ParamRegistry& params);
};

/// Deterministic interleaving whose per-domain counts follow the
/// largest-remainder quota of the weights: count_d = round-share of
/// total * w_d / sum(w), summing exactly to total_iters.
std::vector<int> build_schedule(const std::vector<int>& weights, int total_iters, uint64_t seed);

/// v <- momentum * v + g (+ weight_decay * p); p <- p - lr_group * v, where
/// lr_group = base_lr * prompt_lr_scale for prompt-group parameters.
/// `participates` can exclude parameters (fine-tuning other domains' state);
/// a missing gradient for a participating trainable parameter is an error.
void sgd_step(ParamRegistry& params, const std::vector<Tensor>& grads, OptimizerState& state,
              const TrainConfig& cfg, double lr_factor = 1.0,
              const std::function<bool(int)>& participates = nullptr);

/// One metrics-log record.
struct MetricEvent {
  int iter = 0;
  std::string domain;
  std::string split;
  double miou = 0.0;
  std::vector<double> per_class_iou;
  std::vector<uint8_t> class_valid;
  double loss = 0.0;
};

struct TrainResult {
  std::vector<MetricEvent> events;
  std::vector<double> loss_trace;  // training loss per iteration
  std::vector<int> schedule;       // domain index per iteration
};

/// Validation mIoU and mean loss of one domain, eval mode, full scenes.
struct EvalOutcome {
  IouResult iou;
  double mean_loss = 0.0;
};
EvalOutcome evaluate(Model& model, const Dataset& val, int domain_index);

/// Multi-dataset joint training: every iteration draws a single-domain
/// batch via the schedule, runs forward with that domain's prompt, and
/// steps. Deterministic in cfg.seed.
TrainResult joint_train(Model& model, const std::vector<DomainData>& domains,
                        const TrainConfig& cfg);

/// Continues training every shared parameter plus the target domain's
/// prompt/stats/head on the target domain only. Other domains' prompts and
/// running statistics stay bitwise untouched.
TrainResult fine_tune(Model& model, const std::vector<DomainData>& domains,
                      const std::string& target_domain, const TrainConfig& cfg);

}  // namespace ppt
