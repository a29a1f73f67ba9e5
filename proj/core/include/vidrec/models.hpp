#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vidrec/backbone.hpp"
#include "vidrec/forward.hpp"
#include "vidrec/heads.hpp"
#include "vidrec/params.hpp"

namespace vidrec {

enum class ModelKind {
  hf_tsn,      // segment classifier with HF blocks (plain TSN when no positions)
  lsta_gru,    // LSTA over backbone features, optional GRU branch
  motion,      // flow-stack segment classifier with motion attention
  two_stream,  // LSTA appearance + ConvLSTM motion with cross-modal gate biases
};

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& text);

struct ModelConfig {
  ModelKind kind = ModelKind::lsta_gru;
  std::size_t in_channels = 3;
  std::vector<std::size_t> stages{8, 16, 16};
  std::vector<std::size_t> hf_positions{0, 1, 2};  // hf_tsn
  std::size_t memory = 16;                         // LSTA / ConvLSTM size
  bool use_gru = true;                             // lsta_gru
  std::size_t flow_pairs = 5;                      // motion, two_stream

  BackboneSpec appearance_backbone() const { return {"backbone", in_channels, stages}; }
  BackboneSpec motion_backbone() const { return {"motion_backbone", 2 * flow_pairs, stages}; }
  bool uses_frames() const { return kind != ModelKind::motion; }
  bool uses_flows() const { return kind == ModelKind::motion || kind == ModelKind::two_stream; }
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// Per-sample inputs: T sampled frames (C×H×W) and/or T flow stacks (2L×H×W).
struct ModelInput {
  std::vector<Tensor> frames;
  std::vector<Tensor> flows;
};

/// Configuration, label space and parameters of one trainable model.
class Model {
 public:
  Model() = default;
  /// Fresh parameters for `config`, seeded per tensor name.
  static Model create(const ModelConfig& config, const LabelSpace& space, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const LabelSpace& space() const { return space_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  ScoreTriple forward(const BoundParams& p, const ModelInput& input,
                      const ForwardContext& ctx = {}) const;
  /// Forward with the stored parameters as constants.
  ScoreTriple predict(const ModelInput& input) const;

  /// model.json plus the parameter files in `dir`.
  void save(const std::filesystem::path& dir) const;
  static Model load(const std::filesystem::path& dir);

 private:
  Model(ModelConfig config, LabelSpace space, ParameterStore params);

  ModelConfig config_;
  LabelSpace space_;
  ParameterStore params_;
};

/// Copies every parameter of `src` whose name starts with `prefix` into the
/// same-named parameter of `dst`. Returns the number copied.
std::size_t transfer_params(Model& dst, const Model& src, const std::string& prefix);

/// LSTA model whose appearance backbone is taken from `pretrained`.
Model make_lsta_gru(const Model& pretrained, std::size_t memory, bool use_gru, std::uint64_t seed);

/// Motion model whose backbone copies `pretrained`'s, with the first kernel
/// inflated to 2·flow_pairs input channels.
Model make_motion(const Model& pretrained, std::size_t flow_pairs, std::uint64_t seed);

/// Two-stream model: backbone, LSTA and LSTA head from `appearance`; motion
/// backbone and attention from `motion`; a fresh ConvLSTM and head
/// (`head.convlstm`), and zero fusion kernels.
Model make_two_stream(const Model& appearance, const Model& motion, std::uint64_t seed);

}  // namespace vidrec
