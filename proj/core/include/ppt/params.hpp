#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "ppt/tensor.hpp"

namespace ppt {

/// Parameter group for optimizer scaling and checkpoint tagging. `buffer`
/// entries are non-trainable state (normalization running statistics).
enum class ParamGroup : uint8_t { backbone = 0, prompt = 1, buffer = 2 };

/// Flat named registry of model parameters and state buffers. Names are
/// unique; registration order is fixed by the model builder. Entries tagged
/// with a domain name are skipped by fine-tuning when the domain is not the
/// fine-tune target.
class ParamRegistry {
public:
  struct Entry {
    std::string name;
    ParamGroup group = ParamGroup::backbone;
    std::string domain;  // empty = shared across domains
    Tensor value;
  };

  /// Registers a new entry; throws on duplicate names. Returns its index.
  int add(std::string name, ParamGroup group, Tensor value, std::string domain = "");

  bool has(const std::string& name) const { return by_name_.count(name) > 0; }
  int index_of(const std::string& name) const;

  int count() const { return static_cast<int>(entries_.size()); }
  Entry& entry(int i) { return entries_[static_cast<size_t>(i)]; }
  const Entry& entry(int i) const { return entries_[static_cast<size_t>(i)]; }
  Tensor& value(int i) { return entries_[static_cast<size_t>(i)].value; }
  const Tensor& value(int i) const { return entries_[static_cast<size_t>(i)].value; }
  Tensor& value(const std::string& name) { return value(index_of(name)); }
  const Tensor& value(const std::string& name) const { return value(index_of(name)); }

  bool trainable(int i) const { return entry(i).group != ParamGroup::buffer; }

  /// Writes the PPTC checkpoint: magic, version, entry count, then per
  /// entry a length-prefixed name, group tag byte, u32 value count and the
  /// f64 values (shapes are re-derived from the model configuration).
  void save(const std::filesystem::path& path) const;

  /// Loads values from a PPTC file into matching entries. Every file entry
  /// must exist here with the same value count, and vice versa.
  void load(const std::filesystem::path& path);

private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> by_name_;
};

}  // namespace ppt
