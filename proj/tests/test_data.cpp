#include "doctest.h"
#include "ppt/data.hpp"
#include "ppt/error.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

using namespace ppt;
namespace fs = std::filesystem;

namespace {

SyntheticDomainConfig tiny_config() {
  SyntheticDomainConfig cfg;
  cfg.name = "tiny";
  cfg.scenes = 4;
  cfg.points_per_scene = 300;
  cfg.category_space.names = {"floor", "wall", "chair", "table"};
  cfg.noise_sigma = 0.0;
  cfg.global_scale = 1.0;
  cfg.seed = 42;
  return cfg;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.domain_name != b.domain_name || a.categories.names != b.categories.names) return false;
  if (a.scenes.size() != b.scenes.size()) return false;
  for (size_t s = 0; s < a.scenes.size(); ++s) {
    if (a.scenes[s].labels != b.scenes[s].labels) return false;
    if (a.scenes[s].positions.data() != b.scenes[s].positions.data()) return false;
    if (a.scenes[s].features.data() != b.scenes[s].features.data()) return false;
  }
  return true;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("ppt_test_" + name);
}

}  // namespace

TEST_CASE("generation is bitwise deterministic in the config") {
  auto a = generate_domain(tiny_config());
  auto b = generate_domain(tiny_config());
  CHECK(datasets_equal(a.train, b.train));
  CHECK(datasets_equal(a.val, b.val));
}

TEST_CASE("zero noise and unit scale keep the floor flat") {
  auto data = generate_domain(tiny_config());
  const int floor_label = data.train.categories.index_of("floor");
  REQUIRE(floor_label >= 0);
  for (const auto& sc : data.train.scenes) {
    for (int i = 0; i < sc.point_count(); ++i) {
      if (sc.labels[static_cast<size_t>(i)] == floor_label) CHECK(sc.positions.at(i, 2) == 0.0);
    }
  }
}

TEST_CASE("label histogram covers every category") {
  for (const auto& preset : default_presets()) {
    auto cfg = preset;
    cfg.scenes = 3;  // keep the test quick
    auto data = generate_domain(cfg);
    std::vector<int64_t> hist(static_cast<size_t>(cfg.category_space.size()), 0);
    for (const auto& sc : data.train.scenes) {
      for (uint16_t l : sc.labels) ++hist[l];
    }
    for (size_t c = 0; c < hist.size(); ++c) {
      INFO("category ", cfg.category_space.names[c]);
      CHECK(hist[c] > 0);
    }
  }
}

TEST_CASE("generator rejects degenerate configs") {
  auto cfg = tiny_config();
  cfg.category_space.names = {"only"};
  CHECK_THROWS_AS(generate_domain(cfg), ConfigError);
  cfg = tiny_config();
  cfg.scenes = 1;
  CHECK_THROWS_AS(generate_domain(cfg), ConfigError);
  cfg = tiny_config();
  cfg.density_factor = 0.0;
  CHECK_THROWS_AS(generate_domain(cfg), ConfigError);
}

TEST_CASE("unified label space hand case") {
  CategorySpace s1{{"wall", "floor", "chair"}};
  CategorySpace s2{{"wall", "table"}};
  auto u = build_unified_label_space({s1, s2});
  CHECK(u.names == std::vector<std::string>{"wall", "floor", "chair", "table"});
  CHECK(u.domain_mask[1] == std::vector<uint8_t>{1, 0, 0, 1});
  CHECK(u.local_to_unified[1] == std::vector<int>{0, 3});
}

TEST_CASE("unified label space identity and disjoint cases") {
  CategorySpace s{{"a", "b", "c"}};
  auto u = build_unified_label_space({s});
  CHECK(u.size() == 3);
  CHECK(u.local_to_unified[0] == std::vector<int>{0, 1, 2});

  CategorySpace d1{{"a", "b"}};
  CategorySpace d2{{"c", "d", "e"}};
  auto ud = build_unified_label_space({d1, d2});
  CHECK(ud.size() == 5);
}

TEST_CASE("unified label space invariants over the presets") {
  std::vector<CategorySpace> spaces;
  for (const auto& p : default_presets()) spaces.push_back(p.category_space);
  auto u = build_unified_label_space(spaces);
  // shared name maps to one index regardless of domain
  for (int d1 = 0; d1 < u.domains(); ++d1) {
    for (int d2 = 0; d2 < u.domains(); ++d2) {
      for (size_t l1 = 0; l1 < spaces[static_cast<size_t>(d1)].names.size(); ++l1) {
        const auto& n = spaces[static_cast<size_t>(d1)].names[l1];
        const int l2 = spaces[static_cast<size_t>(d2)].index_of(n);
        if (l2 >= 0) {
          CHECK(u.local_to_unified[static_cast<size_t>(d1)][l1] ==
                u.local_to_unified[static_cast<size_t>(d2)][static_cast<size_t>(l2)]);
        }
      }
    }
  }
  // mask[d][map[d][l]] is always true
  for (int d = 0; d < u.domains(); ++d) {
    for (int idx : u.local_to_unified[static_cast<size_t>(d)]) {
      CHECK(u.domain_mask[static_cast<size_t>(d)][static_cast<size_t>(idx)] == 1);
    }
  }
}

TEST_CASE("dataset save/load round trip is exact") {
  auto data = generate_domain(tiny_config());
  const auto path = temp_file("roundtrip.pptd");
  save_dataset(data.train, path);
  Dataset loaded = load_dataset(path);
  CHECK(datasets_equal(data.train, loaded));
  // saving the loaded dataset reproduces the same bytes
  const auto path2 = temp_file("roundtrip2.pptd");
  save_dataset(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("corrupted magic is a parse error") {
  auto data = generate_domain(tiny_config());
  const auto path = temp_file("badmagic.pptd");
  save_dataset(data.val, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("NOPE", 4);
  }
  CHECK_THROWS_AS(load_dataset(path), DataError);
  fs::remove(path);
}

TEST_CASE("truncated file is a parse error") {
  auto data = generate_domain(tiny_config());
  const auto path = temp_file("trunc.pptd");
  save_dataset(data.val, path);
  fs::resize_file(path, fs::file_size(path) / 2);
  CHECK_THROWS_AS(load_dataset(path), DataError);
  fs::remove(path);
}

TEST_CASE("out of range label is a validation error") {
  Dataset ds;
  ds.domain_name = "x";
  ds.categories.names = {"a", "b"};
  Scene sc;
  sc.positions = Tensor({1, 3});
  sc.features = Tensor({1, 3});
  sc.labels = {7};  // out of range on purpose
  ds.scenes.push_back(sc);
  const auto path = temp_file("badlabel.pptd");
  save_dataset(ds, path);
  CHECK_THROWS_AS(load_dataset(path), DataError);
  fs::remove(path);
}

TEST_CASE("make_batch basics") {
  auto data = generate_domain(tiny_config());
  const Scene& s0 = data.train.scenes[0];

  SUBCASE("max_points at least scene size returns the full scene") {
    Sample b = make_batch(data.train, {0}, s0.point_count() + 10, 1);
    CHECK(b.positions.dim(0) == s0.point_count());
    CHECK(b.domain.name == data.train.domain_name);
  }
  SUBCASE("empty selection is an error") {
    CHECK_THROWS_AS(make_batch(data.train, {}, 8, 1), std::invalid_argument);
  }
  SUBCASE("subsampling is deterministic in the seed") {
    Sample a = make_batch(data.train, {0, 1}, 16, 7);
    Sample b = make_batch(data.train, {0, 1}, 16, 7);
    CHECK(a.positions.data() == b.positions.data());
    CHECK(a.labels == b.labels);
  }
}

TEST_CASE("two batch seeds differ but keep the label distribution") {
  auto cfg = tiny_config();
  cfg.points_per_scene = 10000;
  cfg.scenes = 2;
  auto data = generate_domain(cfg);
  Sample a = make_batch(data.train, {0}, 2000, 1);
  Sample b = make_batch(data.train, {0}, 2000, 2);
  CHECK(a.positions.data() != b.positions.data());

  auto freq = [&](const Sample& s) {
    std::map<int, double> f;
    for (int l : s.labels) f[l] += 1.0 / static_cast<double>(s.labels.size());
    return f;
  };
  auto fa = freq(a), fb = freq(b);
  for (auto& [label, p] : fa) {
    CHECK(std::abs(p - fb[label]) <= 0.10);  // within 10 percentage points
  }
}
