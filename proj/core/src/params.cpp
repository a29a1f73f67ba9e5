#include "vidrec/params.hpp"

#include <fstream>
#include <random>

#include <json.hpp>

#include "vidrec/errors.hpp"
#include "vidrec/tnsf.hpp"

namespace vidrec {

void ParameterStore::add(std::string name, std::string group, Tensor value) {
  if (index_.count(name)) throw ValidationError("duplicate parameter '" + name + "'");
  if (!value.defined()) throw ValidationError("parameter '" + name + "' is undefined");
  index_.emplace(name, items_.size());
  items_.push_back(Parameter{std::move(name), std::move(group), value.detach()});
}

bool ParameterStore::contains(const std::string& name) const { return index_.count(name) != 0; }

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return items_[it->second];
}

const Tensor& ParameterStore::get(const std::string& name) const { return at(name).value; }

void ParameterStore::set(const std::string& name, Tensor value) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter '" + name + "'");
  Parameter& p = items_[it->second];
  if (value.shape() != p.value.shape()) {
    throw ShapeError("parameter '" + name + "' has shape " + to_string(p.value.shape()) +
                     ", cannot assign " + to_string(value.shape()));
  }
  p.value = value.detach();
}

std::set<std::string> ParameterStore::groups() const {
  std::set<std::string> out;
  for (const auto& p : items_) out.insert(p.group);
  return out;
}

void ParameterStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "TNSF";
  manifest["tensors"] = nlohmann::ordered_json::array();
  for (const auto& p : items_) {
    const std::string file = p.name + ".tnsf";
    tnsf::save(dir / file, p.value);
    manifest["tensors"].push_back(
        {{"name", p.name}, {"group", p.group}, {"file", file}, {"shape", p.value.shape()}});
  }
  std::ofstream os(dir / "manifest.json");
  if (!os) throw FormatError("cannot write " + (dir / "manifest.json").string());
  os << manifest.dump(2) << '\n';
}

ParameterStore ParameterStore::load(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!manifest.contains("tensors") || !manifest["tensors"].is_array()) {
    throw FormatError(path.string() + ": missing 'tensors' array");
  }
  ParameterStore store;
  for (const auto& entry : manifest["tensors"]) {
    if (!entry.contains("name") || !entry.contains("file") || !entry.contains("group")) {
      throw FormatError(path.string() + ": tensor entry needs name, group and file");
    }
    Tensor t = tnsf::load(dir / entry["file"].get<std::string>());
    if (entry.contains("shape") && entry["shape"].get<Shape>() != t.shape()) {
      throw FormatError(path.string() + ": shape of '" + entry["name"].get<std::string>() +
                        "' disagrees with its TNSF header");
    }
    store.add(entry["name"].get<std::string>(), entry["group"].get<std::string>(), std::move(t));
  }
  return store;
}

BoundParams BoundParams::constant(const ParameterStore& store) {
  BoundParams b;
  for (const auto& p : store.items()) b.values_.emplace(p.name, p.value);
  return b;
}

BoundParams BoundParams::bind(const ParameterStore& store, Tape& tape,
                              const std::set<std::string>& trainable_groups) {
  BoundParams b;
  const auto items = store.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Parameter& p = items[i];
    if (trainable_groups.count(p.group)) {
      Tensor leaf = tape.leaf(p.value);
      b.leaves_.emplace_back(i, leaf);
      b.values_.emplace(p.name, std::move(leaf));
    } else {
      b.values_.emplace(p.name, p.value);
    }
  }
  return b;
}

void BoundParams::assign(const std::string& name, Tensor value) {
  auto it = values_.find(name);
  if (it == values_.end()) throw ValidationError("unknown parameter '" + name + "'");
  if (value.shape() != it->second.shape()) {
    throw ShapeError("parameter '" + name + "' has shape " + to_string(it->second.shape()) +
                     ", cannot assign " + to_string(value.shape()));
  }
  it->second = std::move(value);
}

const Tensor& BoundParams::operator[](const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t seed_for(std::string_view name, std::uint64_t seed) {
  return fnv1a64(name) ^ (seed * 0x9E3779B97F4A7C15ULL);
}

Tensor uniform_tensor(Shape shape, double bound, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(numel(shape));
  for (double& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace vidrec
