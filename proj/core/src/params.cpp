#include "ppt/params.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ppt/error.hpp"

namespace ppt {

namespace {
constexpr char kMagic[4] = {'P', 'P', 'T', 'C'};
constexpr uint16_t kVersion = 1;
}  // namespace

int ParamRegistry::add(std::string name, ParamGroup group, Tensor value, std::string domain) {
  if (by_name_.count(name)) throw std::logic_error("duplicate parameter name: " + name);
  Entry e;
  e.name = std::move(name);
  e.group = group;
  e.domain = std::move(domain);
  e.value = std::move(value);
  entries_.push_back(std::move(e));
  const int idx = static_cast<int>(entries_.size()) - 1;
  by_name_[entries_.back().name] = idx;
  return idx;
}

int ParamRegistry::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

void ParamRegistry::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint for writing: " + path.string());
  f.write(kMagic, 4);
  auto u16 = [&f](uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
  auto u32 = [&f](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  u16(kVersion);
  u32(static_cast<uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    u16(static_cast<uint16_t>(e.name.size()));
    f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    const auto tag = static_cast<uint8_t>(e.group);
    f.write(reinterpret_cast<const char*>(&tag), 1);
    u32(static_cast<uint32_t>(e.value.size()));
    f.write(reinterpret_cast<const char*>(e.value.ptr()),
            static_cast<std::streamsize>(e.value.size() * 8));
  }
  f.flush();
  if (!f) throw DataError("checkpoint write failed: " + path.string());
}

void ParamRegistry::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path.string());
  auto need = [&f, &path](void* p, size_t n) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (f.gcount() != static_cast<std::streamsize>(n)) {
      throw DataError("truncated checkpoint: " + path.string());
    }
  };
  char magic[4];
  need(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("bad magic bytes, not a PPTC checkpoint: " + path.string());
  uint16_t version;
  need(&version, 2);
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
  }
  uint32_t count;
  need(&count, 4);
  if (count != entries_.size()) {
    throw DataError("checkpoint has " + std::to_string(count) + " entries, model expects " +
                    std::to_string(entries_.size()) + ": " + path.string());
  }
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t nlen;
    need(&nlen, 2);
    std::string name(nlen, '\0');
    if (nlen > 0) need(name.data(), nlen);
    uint8_t tag;
    need(&tag, 1);
    uint32_t vals;
    need(&vals, 4);
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw DataError("checkpoint entry '" + name + "' unknown to this model");
    Entry& e = entries_[static_cast<size_t>(it->second)];
    if (static_cast<uint8_t>(e.group) != tag) {
      throw DataError("checkpoint entry '" + name + "' has group tag " + std::to_string(tag) +
                      ", model expects " + std::to_string(static_cast<int>(e.group)));
    }
    if (static_cast<int64_t>(vals) != e.value.size()) {
      throw DataError("checkpoint entry '" + name + "' has " + std::to_string(vals) +
                      " values, model expects " + std::to_string(e.value.size()));
    }
    need(e.value.ptr(), static_cast<size_t>(vals) * 8);
  }
}

}  // namespace ppt
