#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vidrec/params.hpp"
#include "vidrec/tensor.hpp"

namespace vidrec {

/// Small convolutional feature extractor: each stage is a same-padded 3×3
/// convolution with bias followed by max(0, ·); stages after the first start
/// with a 2×2 mean downsample.
///
/// Parameters are `<prefix>.stage<i>.kernel` / `.bias`. The last stage goes in
/// group `<prefix>_last_stage`, the others in group `<prefix>`.
struct BackboneSpec {
  std::string prefix = "backbone";
  std::size_t in_channels = 3;
  std::vector<std::size_t> stages{8, 16, 16};

  std::size_t num_stages() const { return stages.size(); }
  std::size_t out_channels() const { return stages.back(); }
  /// Channel count at the input of stage `i`.
  std::size_t stage_in_channels(std::size_t i) const;
  std::string group(std::size_t stage) const;
  std::string kernel_name(std::size_t stage) const;
  std::string bias_name(std::size_t stage) const;
  /// Throws ValidationError for an empty or zero-width stage list.
  void validate() const;
};

/// He-uniform kernels (±sqrt(6/fan_in)), zero biases.
void init_backbone(ParameterStore& store, const BackboneSpec& spec, std::uint64_t seed);

/// Downsample applied at the input of stage `i` (identity for i = 0).
Tensor stage_input(const Tensor& x, std::size_t stage);

/// Convolution + bias + max(0, ·) of stage `i`.
Tensor stage_conv(const Tensor& x, const BoundParams& p, const BackboneSpec& spec,
                  std::size_t stage);

/// All stages on one C×H×W frame.
Tensor backbone_forward(const Tensor& frame, const BoundParams& p, const BackboneSpec& spec);

}  // namespace vidrec
