#include "ppt/data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "ppt/error.hpp"
#include "ppt/rng.hpp"

static_assert(std::endian::native == std::endian::little, "PPTD I/O assumes a little-endian host");

namespace ppt {

// ---- category spaces ---------------------------------------------------------

int CategorySpace::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void CategorySpace::validate() const {
  if (names.empty()) throw std::invalid_argument("category space must not be empty");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw std::invalid_argument("empty category name");
    if (!seen.insert(n).second) throw std::invalid_argument("duplicate category name: " + n);
  }
}

UnifiedLabelSpace build_unified_label_space(const std::vector<CategorySpace>& spaces) {
  if (spaces.empty()) throw std::invalid_argument("build_unified_label_space: need at least one space");
  UnifiedLabelSpace u;
  for (const auto& s : spaces) s.validate();
  for (const auto& s : spaces) {
    std::vector<int> map(s.names.size(), -1);
    for (size_t l = 0; l < s.names.size(); ++l) {
      int idx = -1;
      for (size_t k = 0; k < u.names.size(); ++k) {
        if (u.names[k] == s.names[l]) {
          idx = static_cast<int>(k);
          break;
        }
      }
      if (idx < 0) {
        u.names.push_back(s.names[l]);
        idx = static_cast<int>(u.names.size()) - 1;
      }
      map[l] = idx;
    }
    u.local_to_unified.push_back(std::move(map));
  }
  for (const auto& map : u.local_to_unified) {
    std::vector<uint8_t> mask(u.names.size(), 0);
    for (int idx : map) mask[static_cast<size_t>(idx)] = 1;
    u.domain_mask.push_back(std::move(mask));
  }
  return u;
}

int64_t Dataset::total_points() const {
  int64_t n = 0;
  for (const auto& s : scenes) n += s.point_count();
  return n;
}

// ---- synthetic generator ------------------------------------------------------

namespace {

constexpr uint64_t kPaletteSalt = 0x70a1e77eull;
constexpr uint64_t kGeometrySalt = 0x6e0a117ull;
constexpr uint64_t kSceneSalt = 0x5ce4e5ull;

enum class Role { floor_plane, ceiling_plane, walls, beam, column, wall_mounted, blob };

Role role_for(const std::string& name) {
  if (name == "floor") return Role::floor_plane;
  if (name == "ceiling") return Role::ceiling_plane;
  if (name == "wall") return Role::walls;
  if (name == "beam") return Role::beam;
  if (name == "column") return Role::column;
  static const char* mounted[] = {"door",  "window", "picture",       "board",
                                  "mirror", "television", "curtain", "shower curtain"};
  for (const char* m : mounted) {
    if (name == m) return Role::wall_mounted;
  }
  return Role::blob;
}

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  return {r + m, g + m, b + m};
}

// Well-separated fixed palette; domains permute the assignment of colors to
// categories, which is what makes naive feature sharing conflict across
// domains while per-domain statistics stay comparable.
std::vector<std::array<double, 3>> palette() {
  std::vector<std::array<double, 3>> p;
  for (int i = 0; i < 32; ++i) {
    const double hue = std::fmod(0.05 + i * 0.61803398875, 1.0);
    const double sat = (i % 2 == 0) ? 0.70 : 0.45;
    const double val = (i % 3 == 0) ? 0.80 : 0.55;
    p.push_back(hsv_to_rgb(hue, sat, val));
  }
  return p;
}

struct BlobGeom {
  double sx, sy, height;
};

struct MountGeom {
  double width, height, z_frac;
};

BlobGeom blob_geometry(const std::string& name) {
  Rng g(mix_seed(fnv1a64(name), kGeometrySalt));
  return {g.uniform(0.25, 0.85), g.uniform(0.25, 0.85), g.uniform(0.3, 1.35)};
}

MountGeom mount_geometry(const std::string& name) {
  Rng g(mix_seed(fnv1a64(name), kGeometrySalt + 1));
  return {g.uniform(0.6, 1.8), g.uniform(0.5, 1.5), g.uniform(0.05, 0.45)};
}

struct PointSink {
  std::vector<double> pos;
  std::vector<double> col;
  std::vector<uint16_t> labels;

  void add(double x, double y, double z, const std::array<double, 3>& base, uint16_t label,
           Rng& rng, const SyntheticDomainConfig& cfg) {
    pos.push_back(x);
    pos.push_back(y);
    pos.push_back(z);
    for (int c = 0; c < 3; ++c) {
      double v = base[static_cast<size_t>(c)] + rng.normal(0.0, 0.02) + cfg.color_shift[c];
      col.push_back(std::clamp(v, 0.0, 1.0));
    }
    labels.push_back(label);
  }
};

Scene synthesize_scene(const SyntheticDomainConfig& cfg, int scene_index,
                       const std::vector<std::array<double, 3>>& cat_colors) {
  Rng rng(mix_seed(cfg.seed, kSceneSalt + static_cast<uint64_t>(scene_index)));

  double w = 0, d = 0, h = 0;
  switch (cfg.layout_style) {
    case LayoutStyle::rooms:
      w = rng.uniform(4.0, 7.0);
      d = rng.uniform(4.0, 7.0);
      h = rng.uniform(2.6, 3.2);
      break;
    case LayoutStyle::corridors:
      w = rng.uniform(1.8, 2.8);
      d = rng.uniform(8.0, 14.0);
      h = rng.uniform(2.6, 3.0);
      break;
    case LayoutStyle::open:
      w = rng.uniform(8.0, 14.0);
      d = rng.uniform(8.0, 14.0);
      h = rng.uniform(3.0, 4.5);
      break;
  }

  const auto& names = cfg.category_space.names;
  const int total = std::max(60, static_cast<int>(std::lround(cfg.points_per_scene * cfg.density_factor)));

  // Point budget: structural surfaces share 45% by area, everything else
  // splits the rest evenly.
  double floor_area = 0, ceil_area = 0, wall_area = 0;
  int n_other = 0;
  for (const auto& n : names) {
    switch (role_for(n)) {
      case Role::floor_plane: floor_area = w * d; break;
      case Role::ceiling_plane: ceil_area = w * d; break;
      case Role::walls: wall_area = 2.0 * (w + d) * h; break;
      default: ++n_other; break;
    }
  }
  const double struct_area = floor_area + ceil_area + wall_area;
  const int struct_budget = struct_area > 0 ? static_cast<int>(std::lround(total * 0.45)) : 0;
  const int other_budget = n_other > 0 ? std::max(2, (total - struct_budget) / std::max(1, n_other)) : 0;

  PointSink sink;
  for (size_t ci = 0; ci < names.size(); ++ci) {
    const std::string& name = names[ci];
    const auto label = static_cast<uint16_t>(ci);
    const auto& color = cat_colors[ci];
    const Role role = role_for(name);

    auto plane_points = [&](double area_share, double z) {
      const int n = std::max(2, static_cast<int>(std::lround(struct_budget * area_share)));
      for (int i = 0; i < n; ++i) sink.add(rng.uniform(0.0, w), rng.uniform(0.0, d), z, color, label, rng, cfg);
    };

    switch (role) {
      case Role::floor_plane:
        plane_points(floor_area / struct_area, 0.0);
        break;
      case Role::ceiling_plane:
        plane_points(ceil_area / struct_area, h);
        break;
      case Role::walls: {
        const int n = std::max(4, static_cast<int>(std::lround(struct_budget * wall_area / struct_area)));
        for (int i = 0; i < n; ++i) {
          const double t = rng.uniform(0.0, 2.0 * (w + d));
          const double z = rng.uniform(0.0, h);
          double x, y;
          if (t < w) { x = t; y = 0.0; }
          else if (t < w + d) { x = w; y = t - w; }
          else if (t < 2 * w + d) { x = t - w - d; y = d; }
          else { x = 0.0; y = t - 2 * w - d; }
          sink.add(x, y, z, color, label, rng, cfg);
        }
        break;
      }
      case Role::beam: {
        const double y0 = rng.uniform(0.5, std::max(0.6, d - 0.5));
        for (int i = 0; i < other_budget; ++i) {
          sink.add(rng.uniform(0.0, w), y0 + rng.uniform(-0.1, 0.1), h - rng.uniform(0.05, 0.25),
                   color, label, rng, cfg);
        }
        break;
      }
      case Role::column: {
        const double cx = rng.uniform(0.4, std::max(0.5, w - 0.4));
        const double cy = rng.uniform(0.4, std::max(0.5, d - 0.4));
        for (int i = 0; i < other_budget; ++i) {
          sink.add(cx + rng.uniform(-0.12, 0.12), cy + rng.uniform(-0.12, 0.12), rng.uniform(0.0, h),
                   color, label, rng, cfg);
        }
        break;
      }
      case Role::wall_mounted: {
        const MountGeom g = mount_geometry(name);
        const int wall = static_cast<int>(rng.uniform_index(4));
        const double along_max = (wall < 2 ? w : d) - g.width - 0.2;
        const double a0 = rng.uniform(0.1, std::max(0.2, along_max));
        const double z0 = std::min(g.z_frac * h, h - g.height - 0.05);
        for (int i = 0; i < other_budget; ++i) {
          const double a = a0 + rng.uniform(0.0, g.width);
          const double z = std::max(0.0, z0) + rng.uniform(0.0, g.height);
          double x, y;
          const double off = 0.03;
          switch (wall) {
            case 0: x = a; y = off; break;
            case 1: x = a; y = d - off; break;
            case 2: x = off; y = a; break;
            default: x = w - off; y = a; break;
          }
          sink.add(x, y, z, color, label, rng, cfg);
        }
        break;
      }
      case Role::blob: {
        const BlobGeom g = blob_geometry(name);
        const double sx = std::min(g.sx, std::max(0.2, w - 0.8));
        const double sy = std::min(g.sy, std::max(0.2, d - 0.8));
        const double cx = rng.uniform(0.4 + sx / 2, std::max(0.5 + sx / 2, w - 0.4 - sx / 2));
        const double cy = rng.uniform(0.4 + sy / 2, std::max(0.5 + sy / 2, d - 0.4 - sy / 2));
        for (int i = 0; i < other_budget; ++i) {
          sink.add(cx + rng.uniform(-sx / 2, sx / 2), cy + rng.uniform(-sy / 2, sy / 2),
                   rng.uniform(0.0, g.height), color, label, rng, cfg);
        }
        break;
      }
    }
  }

  // Domain shift: position jitter then global scaling; quantize to f32 so
  // in-memory and on-disk data are identical.
  const int n = static_cast<int>(sink.labels.size());
  Tensor positions({n, 3});
  Tensor features({n, 3});
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      double p = sink.pos[static_cast<size_t>(i) * 3 + static_cast<size_t>(c)];
      if (cfg.noise_sigma > 0.0) p += rng.normal(0.0, cfg.noise_sigma);
      p *= cfg.global_scale;
      positions.at(i, c) = static_cast<double>(static_cast<float>(p));
      features.at(i, c) = static_cast<double>(static_cast<float>(sink.col[static_cast<size_t>(i) * 3 + static_cast<size_t>(c)]));
    }
  }
  Scene scene;
  scene.positions = std::move(positions);
  scene.features = std::move(features);
  scene.labels = std::move(sink.labels);
  return scene;
}

}  // namespace

void SyntheticDomainConfig::validate() const {
  if (name.empty()) throw ConfigError("domain config needs a name");
  if (scenes < 2) throw ConfigError("domain '" + name + "': scenes must be >= 2 for a train/val split");
  if (points_per_scene < 1) throw ConfigError("domain '" + name + "': points_per_scene must be positive");
  if (density_factor <= 0.0) throw ConfigError("domain '" + name + "': density_factor must be > 0");
  if (noise_sigma < 0.0) throw ConfigError("domain '" + name + "': noise_sigma must be >= 0");
  if (category_space.size() < 2) throw ConfigError("domain '" + name + "': segmentation needs >= 2 categories");
  try {
    category_space.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("domain '" + name + "': " + e.what());
  }
}

DomainData generate_domain(const SyntheticDomainConfig& cfg) {
  cfg.validate();

  // Color assignment permuted per domain seed.
  const auto pal = palette();
  std::vector<int> perm(pal.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  Rng prng(mix_seed(cfg.seed, kPaletteSalt));
  prng.shuffle(perm);
  std::vector<std::array<double, 3>> cat_colors;
  for (int i = 0; i < cfg.category_space.size(); ++i) {
    cat_colors.push_back(pal[static_cast<size_t>(perm[static_cast<size_t>(i) % perm.size()])]);
  }

  std::vector<Scene> scenes;
  scenes.reserve(static_cast<size_t>(cfg.scenes));
  for (int s = 0; s < cfg.scenes; ++s) scenes.push_back(synthesize_scene(cfg, s, cat_colors));

  const int train_n = std::max(1, static_cast<int>(std::floor(cfg.scenes * 0.8)));
  DomainData out;
  out.train.domain_name = cfg.name;
  out.train.categories = cfg.category_space;
  out.val.domain_name = cfg.name;
  out.val.categories = cfg.category_space;
  for (int s = 0; s < cfg.scenes; ++s) {
    (s < train_n ? out.train : out.val).scenes.push_back(std::move(scenes[static_cast<size_t>(s)]));
  }
  return out;
}

// ---- presets -------------------------------------------------------------------

SyntheticDomainConfig preset_synth_a() {
  SyntheticDomainConfig cfg;
  cfg.name = "synth-A";
  cfg.scenes = 30;
  cfg.points_per_scene = 1400;
  cfg.category_space.names = {
      "wall", "floor", "cabinet", "bed", "chair", "sofa", "table", "door", "window",
      "picture", "desk", "shelves", "curtain", "dresser", "pillow", "mirror", "ceiling",
      "refrigerator", "television", "nightstand", "sink", "lamp", "otherstructure",
      "otherfurniture", "otherprop"};
  cfg.density_factor = 1.0;
  cfg.noise_sigma = 0.004;
  cfg.color_shift[0] = 0.0;
  cfg.color_shift[1] = 0.0;
  cfg.color_shift[2] = 0.0;
  cfg.global_scale = 1.0;
  cfg.layout_style = LayoutStyle::rooms;
  cfg.seed = 101;
  return cfg;
}

SyntheticDomainConfig preset_real_b() {
  SyntheticDomainConfig cfg;
  cfg.name = "real-B";
  cfg.scenes = 14;
  cfg.points_per_scene = 1000;
  cfg.category_space.names = {
      "wall", "floor", "cabinet", "bed", "chair", "sofa", "table", "door", "window",
      "bookshelf", "picture", "counter", "desk", "curtain", "refrigerator",
      "shower curtain", "toilet", "sink", "bathtub", "otherfurniture"};
  cfg.density_factor = 0.8;
  cfg.noise_sigma = 0.025;
  cfg.color_shift[0] = 0.08;
  cfg.color_shift[1] = -0.06;
  cfg.color_shift[2] = 0.04;
  cfg.global_scale = 0.85;
  cfg.layout_style = LayoutStyle::rooms;
  cfg.seed = 102;
  return cfg;
}

SyntheticDomainConfig preset_real_c() {
  SyntheticDomainConfig cfg;
  cfg.name = "real-C";
  cfg.scenes = 6;
  cfg.points_per_scene = 1800;
  cfg.category_space.names = {
      "ceiling", "floor", "wall", "beam", "column", "window", "door", "table", "chair",
      "sofa", "bookcase", "board", "clutter"};
  cfg.density_factor = 1.0;
  cfg.noise_sigma = 0.012;
  cfg.color_shift[0] = -0.05;
  cfg.color_shift[1] = 0.05;
  cfg.color_shift[2] = 0.06;
  cfg.global_scale = 1.2;
  cfg.layout_style = LayoutStyle::corridors;
  cfg.seed = 103;
  return cfg;
}

std::vector<SyntheticDomainConfig> default_presets() {
  return {preset_synth_a(), preset_real_b(), preset_real_c()};
}

SyntheticDomainConfig preset_by_name(const std::string& name) {
  for (auto& p : default_presets()) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown domain preset: " + name);
}

// ---- PPTD I/O --------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'P', 'T', 'D'};
constexpr uint16_t kVersion = 1;

class Writer {
public:
  explicit Writer(const std::filesystem::path& path) : f_(path, std::ios::binary) {
    if (!f_) throw DataError("cannot open for writing: " + path.string());
  }
  void bytes(const void* p, size_t n) { f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u16(uint16_t v) { bytes(&v, 2); }
  void u32(uint32_t v) { bytes(&v, 4); }
  void f32(float v) { bytes(&v, 4); }
  void str16(const std::string& s) {
    if (s.size() > 0xffff) throw DataError("string too long for PPTD: " + s.substr(0, 32));
    u16(static_cast<uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void finish(const std::filesystem::path& path) {
    f_.flush();
    if (!f_) throw DataError("write failed: " + path.string());
  }

private:
  std::ofstream f_;
};

class Reader {
public:
  explicit Reader(const std::filesystem::path& path) : f_(path, std::ios::binary), path_(path.string()) {
    if (!f_) throw DataError("cannot open for reading: " + path_);
  }
  void bytes(void* p, size_t n) {
    f_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (f_.gcount() != static_cast<std::streamsize>(n)) throw DataError("truncated PPTD file: " + path_);
  }
  uint16_t u16() { uint16_t v; bytes(&v, 2); return v; }
  uint32_t u32() { uint32_t v; bytes(&v, 4); return v; }
  float f32() { float v; bytes(&v, 4); return v; }
  std::string str16() {
    const uint16_t n = u16();
    std::string s(n, '\0');
    if (n > 0) bytes(s.data(), n);
    return s;
  }
  const std::string& path() const { return path_; }

private:
  std::ifstream f_;
  std::string path_;
};

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u16(kVersion);
  w.str16(ds.domain_name);
  if (ds.categories.size() > 0xffff) throw DataError("too many categories for PPTD");
  w.u16(static_cast<uint16_t>(ds.categories.size()));
  for (const auto& n : ds.categories.names) w.str16(n);
  w.u32(static_cast<uint32_t>(ds.scenes.size()));
  for (const auto& sc : ds.scenes) {
    const int n = sc.point_count();
    w.u32(static_cast<uint32_t>(n));
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) w.f32(static_cast<float>(sc.positions.at(i, c)));
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) w.f32(static_cast<float>(sc.features.at(i, c)));
    for (int i = 0; i < n; ++i) w.u16(sc.labels[static_cast<size_t>(i)]);
  }
  w.finish(path);
}

Dataset load_dataset(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("bad magic bytes, not a PPTD file: " + r.path());
  const uint16_t version = r.u16();
  if (version != kVersion) {
    throw DataError("unsupported PPTD version " + std::to_string(version) + " in " + r.path());
  }
  Dataset ds;
  ds.domain_name = r.str16();
  const uint16_t ncat = r.u16();
  if (ncat == 0) throw DataError("PPTD file with empty category space: " + r.path());
  for (int i = 0; i < ncat; ++i) ds.categories.names.push_back(r.str16());
  try {
    ds.categories.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid category space in ") + r.path() + ": " + e.what());
  }
  const uint32_t nscenes = r.u32();
  for (uint32_t s = 0; s < nscenes; ++s) {
    const uint32_t n = r.u32();
    Scene sc;
    sc.positions = Tensor({static_cast<int>(n), 3});
    sc.features = Tensor({static_cast<int>(n), 3});
    sc.labels.resize(n);
    for (uint32_t i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) sc.positions.at(static_cast<int>(i), c) = static_cast<double>(r.f32());
    for (uint32_t i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) sc.features.at(static_cast<int>(i), c) = static_cast<double>(r.f32());
    for (uint32_t i = 0; i < n; ++i) {
      const uint16_t l = r.u16();
      if (l >= ncat) {
        throw DataError("label " + std::to_string(l) + " out of range (" + std::to_string(ncat) +
                        " categories) in " + r.path());
      }
      sc.labels[i] = l;
    }
    ds.scenes.push_back(std::move(sc));
  }
  return ds;
}

// ---- batching ----------------------------------------------------------------------

Sample make_batch(const Dataset& ds, const std::vector<int>& scene_indices, int max_points,
                  uint64_t seed) {
  if (scene_indices.empty()) throw std::invalid_argument("make_batch: empty scene selection");
  if (max_points < 1) throw std::invalid_argument("make_batch: max_points must be positive");

  std::vector<std::pair<int, std::vector<int>>> picks;  // scene -> point indices
  int64_t total = 0;
  for (size_t k = 0; k < scene_indices.size(); ++k) {
    const int si = scene_indices[k];
    if (si < 0 || si >= ds.scene_count()) {
      throw std::invalid_argument("make_batch: scene index " + std::to_string(si) + " out of range");
    }
    const Scene& sc = ds.scenes[static_cast<size_t>(si)];
    const int n = sc.point_count();
    std::vector<int> idx;
    if (n <= max_points) {
      idx.resize(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    } else {
      Rng rng(mix_seed(seed, 0xBA7C + k));
      idx = rng.sample_indices(n, max_points);
    }
    total += static_cast<int64_t>(idx.size());
    picks.emplace_back(si, std::move(idx));
  }

  Sample out;
  out.domain.name = ds.domain_name;
  out.positions = Tensor({static_cast<int>(total), 3});
  out.features = Tensor({static_cast<int>(total), 3});
  out.labels.reserve(static_cast<size_t>(total));
  int row = 0;
  for (const auto& [si, idx] : picks) {
    const Scene& sc = ds.scenes[static_cast<size_t>(si)];
    for (int i : idx) {
      for (int c = 0; c < 3; ++c) {
        out.positions.at(row, c) = sc.positions.at(i, c);
        out.features.at(row, c) = sc.features.at(i, c);
      }
      out.labels.push_back(static_cast<int>(sc.labels[static_cast<size_t>(i)]));
      ++row;
    }
  }
  return out;
}

}  // namespace ppt
