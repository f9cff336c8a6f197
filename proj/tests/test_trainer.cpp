#include "doctest.h"
#include "ppt/error.hpp"
#include "ppt/trainer.hpp"
#include "ppt/transfer.hpp"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>
#include <map>

using namespace ppt;
using ppt_test::tiny_domains;
using ppt_test::tiny_model_config;

namespace {

TrainConfig tiny_train_config(int iters) {
  TrainConfig cfg;
  cfg.total_iters = iters;
  cfg.batch_scenes = 2;
  cfg.max_points_per_scene = 48;
  cfg.base_lr = 0.05;
  cfg.eval_every = 0;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("schedule quotas follow the largest remainder rule") {
  auto sched = build_schedule({4, 2, 1}, 700, 3);
  std::map<int, int> counts;
  for (int d : sched) ++counts[d];
  CHECK(counts[0] == 400);
  CHECK(counts[1] == 200);
  CHECK(counts[2] == 100);
  CHECK(sched.size() == 700);
}

TEST_CASE("schedule edge cases") {
  auto single = build_schedule({3}, 10, 1);
  for (int d : single) CHECK(d == 0);

  auto even = build_schedule({1, 1}, 10, 1);
  std::map<int, int> counts;
  for (int d : even) ++counts[d];
  CHECK(counts[0] == 5);
  CHECK(counts[1] == 5);

  CHECK_THROWS_AS(build_schedule({}, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule({4, 2, 1}, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule({0, 1}, 10, 1), std::invalid_argument);

  // deterministic in the seed, and actually interleaved
  CHECK(build_schedule({4, 2, 1}, 70, 9) == build_schedule({4, 2, 1}, 70, 9));
  auto s = build_schedule({1, 1}, 40, 9);
  bool interleaved = false;
  for (size_t i = 20; i < s.size(); ++i) {
    if (s[i] == 0) interleaved = true;  // not all of domain 0 packed in front
  }
  CHECK(interleaved);
}

TEST_CASE("plain sgd step arithmetic") {
  ParamRegistry reg;
  const int p = reg.add("backbone.p", ParamGroup::backbone, Tensor::scalar(5.0));
  OptimizerState opt;
  opt.init(reg);
  TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.base_lr = 1.0;
  std::vector<Tensor> grads{Tensor::scalar(2.0)};
  sgd_step(reg, grads, opt, cfg);
  CHECK(reg.value(p)[0] == doctest::Approx(3.0));
}

TEST_CASE("prompt group steps at exactly the configured scale") {
  ParamRegistry reg;
  // parameters start at zero so the applied update is readable exactly
  const int pb = reg.add("backbone.p", ParamGroup::backbone, Tensor::scalar(0.0));
  const int pp = reg.add("prompt.p", ParamGroup::prompt, Tensor::scalar(0.0));
  OptimizerState opt;
  opt.init(reg);
  TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.base_lr = 1.0;
  cfg.prompt_lr_scale = 0.1;
  const double g = 0.7319;
  std::vector<Tensor> grads{Tensor::scalar(g), Tensor::scalar(g)};
  sgd_step(reg, grads, opt, cfg);
  const double backbone_update = -reg.value(pb)[0];
  const double prompt_update = -reg.value(pp)[0];
  CHECK(prompt_update == 0.1 * backbone_update);  // bitwise with base_lr 1
}

TEST_CASE("zero gradient leaves the parameter bitwise unchanged") {
  ParamRegistry reg;
  const int p = reg.add("backbone.p", ParamGroup::backbone, Tensor::row({0.1, -0.2}));
  const Tensor before = reg.value(p);
  OptimizerState opt;
  opt.init(reg);
  TrainConfig cfg;
  std::vector<Tensor> grads{Tensor({1, 2})};
  sgd_step(reg, grads, opt, cfg);
  sgd_step(reg, grads, opt, cfg);
  CHECK(reg.value(p).data() == before.data());
}

TEST_CASE("missing gradients are an error") {
  ParamRegistry reg;
  reg.add("backbone.p", ParamGroup::backbone, Tensor::scalar(1.0));
  OptimizerState opt;
  opt.init(reg);
  TrainConfig cfg;
  std::vector<Tensor> grads{Tensor()};
  CHECK_THROWS_AS(sgd_step(reg, grads, opt, cfg), std::logic_error);
}

TEST_CASE("zero iterations change nothing and log nothing") {
  auto domains = tiny_domains();
  Model model(tiny_model_config(), domain_infos(domains));
  std::vector<Tensor> before;
  for (int i = 0; i < model.params().count(); ++i) before.push_back(model.params().value(i));
  TrainResult r = joint_train(model, domains, tiny_train_config(0));
  CHECK(r.events.empty());
  CHECK(r.loss_trace.empty());
  for (int i = 0; i < model.params().count(); ++i) {
    CHECK(model.params().value(i).data() == before[static_cast<size_t>(i)].data());
  }
}

TEST_CASE("training is bitwise reproducible in the seed") {
  auto domains = tiny_domains();
  auto cfg = tiny_model_config();
  cfg.backbone.adapter_kind = AdapterKind::pdnorm;
  cfg.backbone.norm_kind = NormKind::pdnorm;
  Model a(cfg, domain_infos(domains));
  Model b(cfg, domain_infos(domains));
  TrainResult ra = joint_train(a, domains, tiny_train_config(12));
  TrainResult rb = joint_train(b, domains, tiny_train_config(12));
  CHECK(ra.loss_trace == rb.loss_trace);
  CHECK(ra.schedule == rb.schedule);
  for (int i = 0; i < a.params().count(); ++i) {
    CHECK(a.params().value(i).data() == b.params().value(i).data());
  }
}

TEST_CASE("a tiny two-category domain is learnable") {
  SyntheticDomainConfig dc;
  dc.name = "twocat";
  dc.scenes = 3;
  dc.points_per_scene = 200;
  dc.category_space.names = {"floor", "chair"};
  dc.seed = 5;
  std::vector<DomainData> domains{generate_domain(dc)};

  auto mc = tiny_model_config();
  Model model(mc, domain_infos(domains));
  auto tc = tiny_train_config(200);
  tc.base_lr = 0.1;
  TrainResult r = joint_train(model, domains, tc);
  REQUIRE(!r.loss_trace.empty());
  // strictly below the uniform two-category loss by the end
  const double tail = r.loss_trace.back();
  CHECK(tail < std::log(2.0));
  CHECK(r.events.back().miou > 0.4);
}

TEST_CASE("non-finite loss raises a numeric error") {
  auto domains = tiny_domains();
  auto cfg = tiny_model_config();
  cfg.alignment.head = HeadKind::unionized;  // unbounded logits
  Model model(cfg, domain_infos(domains));
  auto tc = tiny_train_config(60);
  tc.base_lr = 1e9;
  CHECK_THROWS_AS(joint_train(model, domains, tc), NumericError);
}

TEST_CASE("with no adapter and unscaled prompts the run matches detached prompts") {
  auto domains = tiny_domains();
  auto cfg = tiny_model_config();  // adapter none
  auto tc = tiny_train_config(8);
  tc.prompt_lr_scale = 1.0;

  Model trained(cfg, domain_infos(domains));
  joint_train(trained, domains, tc);

  auto detached_cfg = cfg;
  detached_cfg.adapter.train_prompts = false;
  Model detached(detached_cfg, domain_infos(domains));
  joint_train(detached, domains, tc);

  for (int i = 0; i < trained.params().count(); ++i) {
    INFO("param ", trained.params().entry(i).name);
    CHECK(trained.params().value(i).data() == detached.params().value(i).data());
  }
}

TEST_CASE("fine-tune with zero iterations is the identity") {
  auto domains = tiny_domains();
  auto cfg = tiny_model_config();
  cfg.backbone.adapter_kind = AdapterKind::pdnorm;
  cfg.backbone.norm_kind = NormKind::pdnorm;
  Model model(cfg, domain_infos(domains));
  joint_train(model, domains, tiny_train_config(10));
  std::vector<Tensor> before;
  for (int i = 0; i < model.params().count(); ++i) before.push_back(model.params().value(i));
  fine_tune(model, domains, "mini-A", tiny_train_config(0));
  for (int i = 0; i < model.params().count(); ++i) {
    CHECK(model.params().value(i).data() == before[static_cast<size_t>(i)].data());
  }
}

TEST_CASE("fine-tune leaves other domains' prompts and banks untouched") {
  auto domains = tiny_domains();
  auto cfg = tiny_model_config();
  cfg.backbone.adapter_kind = AdapterKind::pdnorm;
  cfg.backbone.norm_kind = NormKind::pdnorm;
  cfg.alignment.head = HeadKind::decoupled;  // per-domain heads must stay put too
  Model model(cfg, domain_infos(domains));
  joint_train(model, domains, tiny_train_config(10));

  std::vector<std::pair<int, Tensor>> other;
  for (int i = 0; i < model.params().count(); ++i) {
    const auto& e = model.params().entry(i);
    if (e.domain == "mini-B") other.emplace_back(i, e.value);
  }
  REQUIRE(!other.empty());
  auto tc = tiny_train_config(6);
  tc.weight_decay = 0.01;  // decay must not leak onto non-participating params either
  fine_tune(model, domains, "mini-A", tc);
  for (const auto& [i, value] : other) {
    INFO("param ", model.params().entry(i).name);
    CHECK(model.params().value(i).data() == value.data());
  }

  CHECK_THROWS_AS(fine_tune(model, domains, "missing", tiny_train_config(1)), ConfigError);
}

TEST_CASE("transfer matrix single cells match a direct run") {
  auto domains = tiny_domains();
  auto mc = tiny_model_config();
  auto tc = tiny_train_config(6);
  tc.eval_every = 0;
  TransferResult tm = run_transfer_matrix(domains, mc, tc, {"naive"});

  // degenerate grid: the single-domain column is a plain joint_train
  Model direct(naive_variant(mc), domain_infos({domains[0]}));
  TrainResult r = joint_train(direct, {domains[0]}, tc);
  const double direct_miou = r.events.back().miou;
  CHECK(tm.get("mini-A", "mini-A", "naive") == direct_miou);

  // complete over the requested grid
  CHECK(tm.find("mini-A", "mini-A+mini-B", "naive") != nullptr);
  CHECK(tm.find("mini-B", "mini-A+mini-B", "naive") != nullptr);
  CHECK(tm.find("mini-B", "mini-B", "naive") != nullptr);
}

TEST_CASE("transfer matrix with ppt column and verdict") {
  auto domains = tiny_domains();
  auto mc = tiny_model_config();
  auto tc = tiny_train_config(6);
  TransferResult tm = run_transfer_matrix(domains, mc, tc);
  CHECK(tm.find("mini-A", "mini-A+mini-B", "ppt") != nullptr);
  TransferVerdict v = analyze_transfer(tm);
  CHECK(v.domains.size() == 2);
  CHECK(v.ppt_minus_single.size() == 2);
}
