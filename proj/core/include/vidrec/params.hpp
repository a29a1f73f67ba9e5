#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vidrec/tensor.hpp"

namespace vidrec {

struct Parameter {
  std::string name;
  std::string group;  // training group, e.g. "heads", "lsta", "backbone_last_stage"
  Tensor value;
};

/// Named model parameters in insertion order, each tagged with a training group.
class ParameterStore {
 public:
  void add(std::string name, std::string group, Tensor value);
  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  const Parameter& at(const std::string& name) const;
  /// Replaces the value; the shape must not change.
  void set(const std::string& name, Tensor value);

  std::span<const Parameter> items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::set<std::string> groups() const;

  /// Writes one TNSF file per tensor plus manifest.json into `dir`.
  void save(const std::filesystem::path& dir) const;
  static ParameterStore load(const std::filesystem::path& dir);

 private:
  std::vector<Parameter> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// The parameters as seen by one forward pass: members of trainable groups are
/// leaves on `tape`, the rest are plain constants.
class BoundParams {
 public:
  BoundParams() = default;
  static BoundParams constant(const ParameterStore& store);
  static BoundParams bind(const ParameterStore& store, Tape& tape,
                          const std::set<std::string>& trainable_groups);

  const Tensor& operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  /// Replaces the tensor seen under `name` (keeps its tape, if any).
  void assign(const std::string& name, Tensor value);
  /// (store index, leaf) for every trainable parameter.
  const std::vector<std::pair<std::size_t, Tensor>>& leaves() const { return leaves_; }

 private:
  std::unordered_map<std::string, Tensor> values_;
  std::vector<std::pair<std::size_t, Tensor>> leaves_;
};

/// 64-bit FNV-1a, used for stable per-name seeds and label-space ids.
std::uint64_t fnv1a64(std::string_view text);

/// Seed for the parameter `name` under experiment seed `seed`.
std::uint64_t seed_for(std::string_view name, std::uint64_t seed);

/// Values drawn uniformly from [-bound, bound] with a mt19937_64 stream.
Tensor uniform_tensor(Shape shape, double bound, std::uint64_t seed);

}  // namespace vidrec
