#include "vidrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "vidrec/errors.hpp"
#include "vidrec/ops.hpp"
#include "vidrec/tnsf.hpp"
#include "vidrec/two_stream.hpp"

namespace vidrec {

std::vector<Annotation> Dataset::annotations() const {
  std::vector<Annotation> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back({s.id, s.labels.verb, s.labels.noun});
  return out;
}

void Dataset::save(const std::filesystem::path& dir) const {
  if (samples.empty()) throw ValidationError("dataset: nothing to save");
  std::filesystem::create_directories(dir);
  const std::size_t nf = samples.front().frames.size();
  const Shape fshape = samples.front().frames.front().shape();
  std::vector<double> all;
  all.reserve(samples.size() * nf * numel(fshape));
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const Sample& s : samples) {
    if (s.frames.size() != nf) throw ValidationError("dataset: samples differ in frame count");
    for (const Tensor& f : s.frames) {
      if (f.shape() != fshape) throw ValidationError("dataset: samples differ in frame shape");
      all.insert(all.end(), f.data().begin(), f.data().end());
    }
    rows.push_back({{"id", s.id},
                    {"verb", s.labels.verb},
                    {"noun", s.labels.noun},
                    {"action", s.labels.action}});
  }
  Shape shape{samples.size(), nf};
  shape.insert(shape.end(), fshape.begin(), fshape.end());
  tnsf::save(dir / "frames.tnsf", Tensor(shape, std::move(all)));

  nlohmann::ordered_json j;
  j["split"] = split;
  j["label_space"] = nlohmann::ordered_json::parse(space.to_json());
  j["samples"] = std::move(rows);
  std::ofstream out(dir / "samples.json");
  out << j.dump(1) << '\n';
  if (!out) throw FormatError("dataset: cannot write " + (dir / "samples.json").string());
}

Dataset Dataset::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "samples.json");
  if (!in) throw ValidationError("dataset: cannot open " + (dir / "samples.json").string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("dataset samples.json: ") + e.what());
  }
  Dataset d;
  Tensor frames = tnsf::load(dir / "frames.tnsf");
  try {
    d.split = j.at("split").get<std::string>();
    d.space = LabelSpace::from_json(j.at("label_space").dump());
    const auto& rows = j.at("samples");
    if (frames.rank() != 5 || frames.dim(0) != rows.size()) {
      throw ValidationError("dataset: frames.tnsf shape " + to_string(frames.shape()) +
                            " does not match " + std::to_string(rows.size()) + " samples");
    }
    const std::size_t nf = frames.dim(1);
    const Shape fshape{frames.dim(2), frames.dim(3), frames.dim(4)};
    const std::size_t per = numel(fshape);
    auto data = frames.data();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Sample s;
      s.id = rows[i].at("id").get<std::string>();
      s.labels = {rows[i].at("verb").get<std::size_t>(), rows[i].at("noun").get<std::size_t>(),
                  rows[i].at("action").get<std::size_t>()};
      const auto pair = d.space.derive_pair(s.labels.action);
      if (pair != VerbNoun{s.labels.verb, s.labels.noun}) {
        throw ValidationError("dataset: sample " + s.id + " action disagrees with its verb/noun");
      }
      for (std::size_t f = 0; f < nf; ++f) {
        const double* p = data.data() + (i * nf + f) * per;
        s.frames.emplace_back(fshape, std::vector<double>(p, p + per));
      }
      d.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("dataset samples.json: ") + e.what());
  }
  return d;
}

// ---------------------------------------------------------------------------

std::vector<double> verb_signature(std::size_t verb, std::size_t num_verbs, std::size_t frames) {
  if (num_verbs == 0 || verb >= num_verbs) throw ValidationError("verb_signature: verb out of range");
  std::vector<double> out(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double phase = frames > 1 ? static_cast<double>(t) / static_cast<double>(frames - 1) : 0.0;
    out[t] = std::sin(std::numbers::pi * phase +
                      std::numbers::pi * static_cast<double>(verb) / static_cast<double>(num_verbs));
  }
  return out;
}

namespace {

std::size_t blob_side(std::size_t noun) { return 3 + 2 * (noun / 4); }

}  // namespace

std::size_t max_synthetic_nouns(std::size_t height, std::size_t width) {
  const std::size_t limit = std::min(height, width) / 2;
  if (limit < 3) return 0;
  return 4 * ((limit - 3) / 2 + 1);
}

Tensor noun_signature(std::size_t noun, std::size_t height, std::size_t width) {
  const std::size_t s = blob_side(noun);
  if (2 * s > std::min(height, width)) {
    throw ValidationError("noun_signature: noun " + std::to_string(noun) + " needs a " +
                          std::to_string(s) + "-pixel blob, which does not fit a " +
                          std::to_string(height) + "x" + std::to_string(width) + " frame");
  }
  const double sign = (noun / 2) % 2 == 0 ? 1.0 : -1.0;
  const std::size_t r0 = noun % 2 == 0 ? 0 : height - s;
  std::vector<double> m(height * width, 0.0);
  for (std::size_t r = r0; r < r0 + s; ++r)
    for (std::size_t q = 0; q < s; ++q) {
      m[r * width + q] = sign;
      m[r * width + width - 1 - q] = sign;
    }
  return Tensor({height, width}, std::move(m));
}

LabelSpace desk_label_space(std::size_t verbs, std::size_t nouns, std::size_t extra_pairs,
                            std::uint64_t seed) {
  if (verbs == 0 || nouns == 0) throw ValidationError("desk_label_space: empty vocabulary");
  std::vector<std::string> vn, nn;
  for (std::size_t v = 0; v < verbs; ++v) vn.push_back("verb_" + std::to_string(v));
  for (std::size_t n = 0; n < nouns; ++n) nn.push_back("noun_" + std::to_string(n));
  std::vector<VerbNoun> actions;
  for (std::size_t n = 0; n < nouns; ++n) actions.emplace_back(n % verbs, n);
  std::vector<VerbNoun> rest;
  for (std::size_t v = 0; v < verbs; ++v)
    for (std::size_t n = 0; n < nouns; ++n)
      if (std::find(actions.begin(), actions.end(), VerbNoun{v, n}) == actions.end())
        rest.emplace_back(v, n);
  if (extra_pairs > rest.size()) {
    throw ValidationError("desk_label_space: only " + std::to_string(rest.size()) +
                          " further pairs exist, " + std::to_string(extra_pairs) + " requested");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < extra_pairs; ++k) {
    const std::size_t pick = std::uniform_int_distribution<std::size_t>(k, rest.size() - 1)(rng);
    std::swap(rest[k], rest[pick]);
    actions.push_back(rest[k]);
  }
  return LabelSpace(std::move(vn), std::move(nn), std::move(actions));
}

Dataset make_synthetic(const LabelSpace& space, std::size_t n_samples, const SyntheticSpec& spec,
                       std::uint64_t seed, const std::string& split) {
  if (space.num_actions() == 0) throw ValidationError("make_synthetic: empty label space");
  if (spec.channels < 2) throw ValidationError("make_synthetic: at least 2 channels are required");
  if (spec.frames == 0 || spec.height == 0 || spec.width == 0) {
    throw ValidationError("make_synthetic: frame count and size must be positive");
  }
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw ValidationError("make_synthetic: noise sigma must be finite and non-negative");
  }
  if (space.num_nouns() > max_synthetic_nouns(spec.height, spec.width)) {
    throw ValidationError("make_synthetic: " + std::to_string(space.num_nouns()) +
                          " nouns need distinct templates; a " + std::to_string(spec.height) +
                          "x" + std::to_string(spec.width) + " frame supports at most " +
                          std::to_string(max_synthetic_nouns(spec.height, spec.width)));
  }
  std::vector<std::vector<double>> vsig;
  for (std::size_t v = 0; v < space.num_verbs(); ++v) {
    vsig.push_back(verb_signature(v, space.num_verbs(), spec.frames));
  }
  std::vector<Tensor> nsig;
  for (std::size_t n = 0; n < space.num_nouns(); ++n) {
    nsig.push_back(noun_signature(n, spec.height, spec.width));
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, space.num_actions() - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t plane = spec.height * spec.width;

  Dataset d;
  d.split = split;
  d.space = space;
  for (std::size_t i = 0; i < n_samples; ++i) {
    Sample s;
    char id[32];
    std::snprintf(id, sizeof id, "_%05zu", i);
    s.id = split + id;
    const std::size_t a = pick(rng);
    const auto [v, n] = space.derive_pair(a);
    s.labels = {v, n, a};
    auto blob = nsig[n].data();
    for (std::size_t t = 0; t < spec.frames; ++t) {
      std::vector<double> f(spec.channels * plane);
      for (double& x : f) x = spec.noise_sigma * noise(rng);
      for (std::size_t k = 0; k < plane; ++k) {
        f[k] += vsig[v][t];
        f[plane + k] += blob[k];
      }
      s.frames.emplace_back(Shape{spec.channels, spec.height, spec.width}, std::move(f));
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

SyntheticSplits make_synthetic_splits(const LabelSpace& space, std::size_t n_train,
                                      std::size_t n_test, const SyntheticSpec& spec,
                                      std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x7e57}};
  std::uint64_t streams[2];
  {
    std::uint32_t words[4];
    seq.generate(words, words + 4);
    streams[0] = (std::uint64_t{words[0]} << 32) | words[1];
    streams[1] = (std::uint64_t{words[2]} << 32) | words[3];
  }
  return {make_synthetic(space, n_train, spec, streams[0], "train"),
          make_synthetic(space, n_test, spec, streams[1], "test")};
}

std::vector<Tensor> flow_stacks(std::span<const Tensor> frames, std::span<const std::size_t> indices,
                                std::size_t pairs) {
  if (frames.size() < 2) throw ValidationError("flow_stacks: at least two frames are required");
  if (pairs == 0) throw ValidationError("flow_stacks: pair count must be positive");
  const Tensor& f0 = frames.front();
  if (f0.rank() != 3 || f0.dim(0) < 2) {
    throw ShapeError("flow_stacks: frames must be C×H×W with C >= 2, got " + to_string(f0.shape()));
  }
  const std::size_t H = f0.dim(1), W = f0.dim(2), plane = H * W;
  std::vector<Tensor> out;
  out.reserve(indices.size());
  for (std::size_t t : indices) {
    if (t >= frames.size()) throw ValidationError("flow_stacks: frame index out of range");
    std::vector<double> stack(2 * pairs * plane);
    for (std::size_t l = 0; l < pairs; ++l) {
      const std::size_t j = std::min(t + l, frames.size() - 2);
      auto a = frames[j].data(), b = frames[j + 1].data();
      for (std::size_t k = 0; k < plane; ++k) {
        stack[(2 * l) * plane + k] = b[k] - a[k];
        stack[(2 * l + 1) * plane + k] = b[plane + k] - a[plane + k];
      }
    }
    out.emplace_back(Shape{2 * pairs, H, W}, std::move(stack));
  }
  return out;
}

}  // namespace vidrec
