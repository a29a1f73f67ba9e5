#include "vidrec/models.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vidrec/cells.hpp"
#include "vidrec/errors.hpp"
#include "vidrec/hf_tsn.hpp"
#include "vidrec/ops.hpp"
#include "vidrec/two_stream.hpp"

namespace vidrec {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::hf_tsn: return "hf_tsn";
    case ModelKind::lsta_gru: return "lsta_gru";
    case ModelKind::motion: return "motion";
    case ModelKind::two_stream: return "two_stream";
  }
  return "lsta_gru";
}

ModelKind model_kind_from_string(const std::string& text) {
  for (ModelKind k : {ModelKind::hf_tsn, ModelKind::lsta_gru, ModelKind::motion,
                      ModelKind::two_stream}) {
    if (text == to_string(k)) return k;
  }
  throw ValidationError("unknown model kind \"" + text +
                        "\" (expected hf_tsn, lsta_gru, motion or two_stream)");
}

void ModelConfig::validate() const {
  appearance_backbone().validate();
  if (memory == 0) throw ValidationError("model config: memory size must be positive");
  if (flow_pairs == 0) throw ValidationError("model config: flow_pairs must be positive");
  if (kind == ModelKind::hf_tsn) {
    HfTsnConfig hc;
    hc.in_channels = in_channels;
    hc.stages = stages;
    hc.hf_positions = hf_positions;
    hc.validate();
  }
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = to_string(kind);
  j["in_channels"] = in_channels;
  j["stages"] = stages;
  j["hf_positions"] = hf_positions;
  j["memory"] = memory;
  j["use_gru"] = use_gru;
  j["flow_pairs"] = flow_pairs;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ValidationError("model config: expected a JSON object");
    c.kind = model_kind_from_string(j.value("kind", std::string(to_string(c.kind))));
    c.in_channels = j.value("in_channels", c.in_channels);
    c.stages = j.value("stages", c.stages);
    c.hf_positions = j.value("hf_positions", c.hf_positions);
    c.memory = j.value("memory", c.memory);
    c.use_gru = j.value("use_gru", c.use_gru);
    c.flow_pairs = j.value("flow_pairs", c.flow_pairs);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

Model::Model(ModelConfig config, LabelSpace space, ParameterStore params)
    : config_(std::move(config)), space_(std::move(space)), params_(std::move(params)) {}

Model Model::create(const ModelConfig& config, const LabelSpace& space, std::uint64_t seed) {
  config.validate();
  if (space.num_actions() == 0) throw ValidationError("model: empty label space");
  ParameterStore store;
  const BackboneSpec app = config.appearance_backbone();
  const BackboneSpec mot = config.motion_backbone();
  const std::size_t feat = app.out_channels(), d = config.memory;
  switch (config.kind) {
    case ModelKind::hf_tsn: {
      HfTsnConfig hc;
      hc.in_channels = config.in_channels;
      hc.stages = config.stages;
      hc.hf_positions = config.hf_positions;
      init_hf_tsn(store, hc, space, seed);
      break;
    }
    case ModelKind::lsta_gru:
      init_backbone(store, app, seed);
      init_lsta(store, "lsta", "lsta", feat, d, seed);
      init_structured_head(store, "lsta", d, space, seed);
      if (config.use_gru) {
        init_gru(store, "gru_a", "grus", d, d, seed);
        init_gru(store, "gru_b", "grus", d, d, seed);
        init_structured_head(store, "gru", 2 * d, space, seed);
      }
      break;
    case ModelKind::motion:
      init_backbone(store, mot, seed);
      init_motion_attention(store, mot.out_channels());
      init_structured_head(store, "motion", mot.out_channels(), space, seed);
      break;
    case ModelKind::two_stream:
      init_backbone(store, app, seed);
      init_lsta(store, "lsta", "lsta", feat, d, seed);
      init_structured_head(store, "lsta", d, space, seed);
      init_backbone(store, mot, seed);
      init_motion_attention(store, mot.out_channels());
      init_convlstm(store, "convlstm", "convlstm", mot.out_channels(), d, seed);
      init_structured_head(store, "convlstm", d, space, seed);
      init_fusion(store, feat, d, mot.out_channels(), d);
      break;
  }
  return Model(config, space, std::move(store));
}

namespace {

void require_inputs(const char* what, const std::vector<Tensor>& v) {
  if (v.empty()) throw ShapeError(std::string("model forward: no ") + what + " supplied");
}

std::vector<Tensor> motion_features(const ModelInput& in, const BoundParams& p,
                                    const BackboneSpec& spec) {
  std::vector<Tensor> out;
  out.reserve(in.flows.size());
  for (const Tensor& f : in.flows) {
    out.push_back(motion_spatial_attention(backbone_forward(f, p, spec), p["motion.attn"]));
  }
  return out;
}

}  // namespace

ScoreTriple Model::forward(const BoundParams& p, const ModelInput& in,
                           const ForwardContext& ctx) const {
  const BackboneSpec app = config_.appearance_backbone();
  const BackboneSpec mot = config_.motion_backbone();
  if (config_.uses_frames()) require_inputs("frames", in.frames);
  if (config_.uses_flows()) require_inputs("flow stacks", in.flows);

  switch (config_.kind) {
    case ModelKind::hf_tsn: {
      HfTsnConfig hc;
      hc.segments = in.frames.size();
      hc.in_channels = config_.in_channels;
      hc.stages = config_.stages;
      hc.hf_positions = config_.hf_positions;
      return hf_tsn_forward(in.frames, hc, p, ctx);
    }
    case ModelKind::lsta_gru: {
      std::vector<Tensor> feats;
      feats.reserve(in.frames.size());
      for (const Tensor& f : in.frames) feats.push_back(backbone_forward(f, p, app));
      const LstaParams lsta = lsta_params(p, "lsta");
      const auto lsta_head = structured_head_params(p, "lsta");
      if (!config_.use_gru) {
        return structured_forward(ctx.drop(spatial_avg_pool(run_lsta(feats, lsta).c)), lsta_head);
      }
      const auto desc = run_lsta_gru(feats, lsta, gru_params(p, "gru_a"), gru_params(p, "gru_b"));
      return fuse_scores(structured_forward(ctx.drop(desc.lsta), lsta_head),
                         structured_forward(ctx.drop(desc.gru), structured_head_params(p, "gru")));
    }
    case ModelKind::motion: {
      const auto head = structured_head_params(p, "motion");
      std::vector<ScoreTriple> per_segment;
      for (const Tensor& f : motion_features(in, p, mot)) {
        per_segment.push_back(structured_forward(ctx.drop(spatial_avg_pool(f)), head));
      }
      return mean_scores(per_segment);
    }
    case ModelKind::two_stream: {
      std::vector<Tensor> feats;
      feats.reserve(in.frames.size());
      for (const Tensor& f : in.frames) feats.push_back(backbone_forward(f, p, app));
      const auto r = cross_modal_rollout(feats, motion_features(in, p, mot), lsta_params(p, "lsta"),
                                         convlstm_params(p, "convlstm"), fusion_params(p));
      return fuse_scores(
          structured_forward(ctx.drop(r.app_descriptor), structured_head_params(p, "lsta")),
          structured_forward(ctx.drop(r.motion_descriptor), structured_head_params(p, "convlstm")));
    }
  }
  throw ValidationError("model forward: unknown model kind");
}

ScoreTriple Model::predict(const ModelInput& input) const {
  return forward(BoundParams::constant(params_), input);
}

void Model::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  params_.save(dir);
  nlohmann::ordered_json j;
  j["config"] = nlohmann::ordered_json::parse(config_.to_json());
  j["label_space"] = nlohmann::ordered_json::parse(space_.to_json());
  std::ofstream out(dir / "model.json");
  out << j.dump(1) << '\n';
  if (!out) throw FormatError("model: cannot write " + (dir / "model.json").string());
}

Model Model::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw ValidationError("model: cannot open " + (dir / "model.json").string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (!j.contains("config") || !j.contains("label_space")) {
      throw ValidationError("model.json: requires \"config\" and \"label_space\" fields");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model.json: ") + e.what());
  }
  ModelConfig config = ModelConfig::from_json(j["config"].dump());
  LabelSpace space = LabelSpace::from_json(j["label_space"].dump());
  ParameterStore stored = ParameterStore::load(dir);
  // Validate against a freshly built layout so missing or reshaped tensors fail here.
  Model m = create(config, space, 0);
  for (const Parameter& p : m.params_.items()) {
    if (!stored.contains(p.name)) {
      throw ValidationError("model: parameter " + p.name + " missing from " + dir.string());
    }
    m.params_.set(p.name, stored.get(p.name));
  }
  return m;
}

// ---------------------------------------------------------------------------

std::size_t transfer_params(Model& dst, const Model& src, const std::string& prefix) {
  std::size_t n = 0;
  for (const Parameter& p : src.params().items()) {
    if (p.name.rfind(prefix, 0) != 0) continue;
    dst.params().set(p.name, p.value);
    ++n;
  }
  return n;
}

Model make_lsta_gru(const Model& pretrained, std::size_t memory, bool use_gru, std::uint64_t seed) {
  ModelConfig c = pretrained.config();
  c.kind = ModelKind::lsta_gru;
  c.memory = memory;
  c.use_gru = use_gru;
  Model m = Model::create(c, pretrained.space(), seed);
  transfer_params(m, pretrained, "backbone.");
  return m;
}

Model make_motion(const Model& pretrained, std::size_t flow_pairs, std::uint64_t seed) {
  ModelConfig c = pretrained.config();
  c.kind = ModelKind::motion;
  c.flow_pairs = flow_pairs;
  Model m = Model::create(c, pretrained.space(), seed);
  const BackboneSpec from = pretrained.config().appearance_backbone();
  const BackboneSpec to = c.motion_backbone();
  for (std::size_t i = 0; i < from.num_stages(); ++i) {
    const Tensor& k = pretrained.params().get(from.kernel_name(i));
    m.params().set(to.kernel_name(i), i == 0 ? inflate_first_conv(k, 2 * flow_pairs) : k);
    m.params().set(to.bias_name(i), pretrained.params().get(from.bias_name(i)));
  }
  return m;
}

Model make_two_stream(const Model& appearance, const Model& motion, std::uint64_t seed) {
  if (appearance.config().kind != ModelKind::lsta_gru || motion.config().kind != ModelKind::motion) {
    throw ValidationError("make_two_stream: needs an lsta_gru appearance model and a motion model");
  }
  if (!(appearance.space() == motion.space())) {
    throw ValidationError("make_two_stream: the two streams use different label spaces");
  }
  ModelConfig c = appearance.config();
  c.kind = ModelKind::two_stream;
  c.flow_pairs = motion.config().flow_pairs;
  if (motion.config().stages != c.stages) {
    throw ValidationError("make_two_stream: stream backbones differ in stage layout");
  }
  Model m = Model::create(c, appearance.space(), seed);
  transfer_params(m, appearance, "backbone.");
  transfer_params(m, appearance, "lsta.");
  transfer_params(m, appearance, "head.lsta.");
  transfer_params(m, motion, "motion_backbone.");
  transfer_params(m, motion, "motion.attn");
  return m;
}

}  // namespace vidrec
