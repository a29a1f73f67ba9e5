#include "vidrec/hf_tsn.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "vidrec/errors.hpp"
#include "vidrec/ops.hpp"

namespace vidrec {

void HfTsnConfig::validate() const {
  if (segments == 0) throw ValidationError("hf_tsn config: segments must be positive");
  backbone().validate();
  std::set<std::size_t> seen;
  for (std::size_t pos : hf_positions) {
    if (pos >= stages.size()) {
      throw ValidationError("hf_tsn config: hf position " + std::to_string(pos) +
                            " does not index one of the " + std::to_string(stages.size()) +
                            " stages");
    }
    if (!seen.insert(pos).second) {
      throw ValidationError("hf_tsn config: hf position " + std::to_string(pos) + " repeated");
    }
  }
}

std::string HfTsnConfig::to_json() const {
  nlohmann::ordered_json j;
  j["segments"] = segments;
  j["in_channels"] = in_channels;
  j["stages"] = stages;
  j["hf_positions"] = hf_positions;
  return j.dump();
}

HfTsnConfig HfTsnConfig::from_json(const std::string& text) {
  HfTsnConfig c;
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ValidationError("hf_tsn config: expected a JSON object");
    c.segments = j.value("segments", c.segments);
    c.in_channels = j.value("in_channels", c.in_channels);
    c.stages = j.value("stages", c.stages);
    c.hf_positions = j.value("hf_positions", c.hf_positions);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("hf_tsn config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

namespace {

Tensor channel_weights(const Tensor& w, const Tensor& f) {
  if (w.rank() != 1 || f.rank() != 3 || w.dim(0) != f.dim(0)) {
    throw ShapeError("hf_block: weights of shape " + to_string(w.shape()) +
                     " do not match features " + to_string(f.shape()));
  }
  return reshape(w, {w.dim(0), 1, 1});
}

}  // namespace

std::vector<Tensor> hf_block(std::span<const Tensor> features, const Tensor& w0,
                             const Tensor& w1) {
  if (features.empty()) throw ShapeError("hf_block: empty feature sequence");
  if (w0.shape() != w1.shape()) {
    throw ShapeError("hf_block: w0 " + to_string(w0.shape()) + " and w1 " +
                     to_string(w1.shape()) + " differ");
  }
  const Tensor a = channel_weights(w0, features.front());
  const Tensor b = channel_weights(w1, features.front());
  std::vector<Tensor> out;
  out.reserve(features.size());
  for (std::size_t t = 0; t < features.size(); ++t) {
    if (features[t].shape() != features.front().shape()) {
      throw ShapeError("hf_block: feature " + std::to_string(t) + " has shape " +
                       to_string(features[t].shape()) + ", expected " +
                       to_string(features.front().shape()));
    }
    Tensor g = mul(a, features[t]);
    if (t + 1 < features.size()) g = add(g, mul(b, features[t + 1]));
    out.push_back(std::move(g));
  }
  return out;
}

Tensor hf_block(const Tensor& features, const Tensor& w0, const Tensor& w1) {
  if (features.rank() != 4) {
    throw ShapeError("hf_block: expected T×C×H×W features, got " + to_string(features.shape()));
  }
  std::vector<Tensor> frames;
  for (std::size_t t = 0; t < features.dim(0); ++t) frames.push_back(select(features, t));
  const auto out = hf_block(frames, w0, w1);
  return stack(out);
}

Tensor consensus(const Tensor& segment_features, const Tensor& weight, const Tensor& bias) {
  if (segment_features.rank() != 2) {
    throw ShapeError("consensus: expected T×F segment features, got " +
                     to_string(segment_features.shape()));
  }
  std::vector<Tensor> logits;
  for (std::size_t t = 0; t < segment_features.dim(0); ++t) {
    logits.push_back(add(matvec(weight, select(segment_features, t)), bias));
  }
  return mean_of(logits);
}

std::string hf_w0_name(std::size_t position) { return "hf." + std::to_string(position) + ".w0"; }
std::string hf_w1_name(std::size_t position) { return "hf." + std::to_string(position) + ".w1"; }

void init_hf_tsn(ParameterStore& store, const HfTsnConfig& config, const LabelSpace& space,
                 std::uint64_t seed) {
  config.validate();
  const BackboneSpec spec = config.backbone();
  init_backbone(store, spec, seed);
  for (std::size_t pos : config.hf_positions) {
    const std::size_t c = spec.stage_in_channels(pos);
    store.add(hf_w0_name(pos), "hf", Tensor::full({c}, 1.0));
    store.add(hf_w1_name(pos), "hf", Tensor::zeros({c}));
  }
  init_structured_head(store, "tsn", spec.out_channels(), space, seed);
}

std::vector<Tensor> hf_tsn_features(std::span<const Tensor> frames, const HfTsnConfig& config,
                                    const BoundParams& p) {
  if (frames.size() != config.segments) {
    throw ShapeError("hf_tsn_forward: expected " + std::to_string(config.segments) +
                     " frames, got " + std::to_string(frames.size()));
  }
  const BackboneSpec spec = config.backbone();
  std::vector<Tensor> x(frames.begin(), frames.end());
  for (std::size_t i = 0; i < spec.num_stages(); ++i) {
    for (Tensor& f : x) f = stage_input(f, i);
    if (std::find(config.hf_positions.begin(), config.hf_positions.end(), i) !=
        config.hf_positions.end()) {
      x = hf_block(x, p[hf_w0_name(i)], p[hf_w1_name(i)]);
    }
    for (Tensor& f : x) f = stage_conv(f, p, spec, i);
  }
  for (Tensor& f : x) f = spatial_avg_pool(f);
  return x;
}

ScoreTriple hf_tsn_forward(std::span<const Tensor> frames, const HfTsnConfig& config,
                           const BoundParams& p, const ForwardContext& ctx) {
  const auto head = structured_head_params(p, "tsn");
  std::vector<ScoreTriple> per_segment;
  for (const Tensor& f : hf_tsn_features(frames, config, p)) {
    per_segment.push_back(structured_forward(ctx.drop(f), head));
  }
  return mean_scores(per_segment);
}

}  // namespace vidrec
