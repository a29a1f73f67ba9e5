#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vidrec/backbone.hpp"
#include "vidrec/forward.hpp"
#include "vidrec/heads.hpp"
#include "vidrec/params.hpp"

namespace vidrec {

/// Block counts of the two full-scale variants (deeper and shallower backbone).
inline constexpr std::size_t kHfBlocksDeep = 16;
inline constexpr std::size_t kHfBlocksShallow = 10;

struct HfTsnConfig {
  std::size_t segments = 16;
  std::size_t in_channels = 3;
  std::vector<std::size_t> stages{8, 16, 16};
  /// Stages whose input passes through an HF block; empty gives plain TSN.
  std::vector<std::size_t> hf_positions{0, 1, 2};

  std::size_t num_hf_blocks() const { return hf_positions.size(); }
  BackboneSpec backbone() const { return {"backbone", in_channels, stages}; }
  /// Throws ValidationError for out-of-range or repeated positions.
  void validate() const;

  /// {"segments":16,"stages":[...],"hf_positions":[...]} (plus "in_channels").
  std::string to_json() const;
  static HfTsnConfig from_json(const std::string& text);
};

/// G_t = w0 ⊙ F_t + w1 ⊙ F_{t+1} for t < T and G_T = w0 ⊙ F_T, with the
/// per-channel weights broadcast over H×W. Each feature is C×H×W.
std::vector<Tensor> hf_block(std::span<const Tensor> features, const Tensor& w0, const Tensor& w1);
/// Same on a stacked T×C×H×W tensor.
Tensor hf_block(const Tensor& features, const Tensor& w0, const Tensor& w1);

/// Mean over segments of W f_t + b for a T×F feature matrix.
Tensor consensus(const Tensor& segment_features, const Tensor& weight, const Tensor& bias);

/// Parameter names of the block at stage `position`.
std::string hf_w0_name(std::size_t position);
std::string hf_w1_name(std::size_t position);

/// Backbone, identity-initialised HF blocks (group "hf") and the "tsn" head.
void init_hf_tsn(ParameterStore& store, const HfTsnConfig& config, const LabelSpace& space,
                 std::uint64_t seed);

/// Runs the backbone on every frame with HF blocks at the configured stage
/// inputs and returns the pooled T×F features.
std::vector<Tensor> hf_tsn_features(std::span<const Tensor> frames, const HfTsnConfig& config,
                                    const BoundParams& p);

/// Per-segment structured head on (dropped-out) pooled features, averaged over
/// segments per task.
ScoreTriple hf_tsn_forward(std::span<const Tensor> frames, const HfTsnConfig& config,
                           const BoundParams& p, const ForwardContext& ctx = {});

}  // namespace vidrec
