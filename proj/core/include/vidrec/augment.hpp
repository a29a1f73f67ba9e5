#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vidrec/tensor.hpp"

namespace vidrec {

struct AugmentationConfig {
  /// Crop side as a fraction of the frame side, drawn uniformly per clip.
  double scale_min = 1.0;
  double scale_max = 1.0;
  double flip_p = 0.5;
  bool temporal_jitter = true;

  /// Throws ValidationError for probabilities outside [0, 1] or a bad range.
  void validate() const;
};

/// Rows [y, y+h) and columns [x, x+w) of every channel of a C×H×W frame.
Tensor crop(const Tensor& frame, std::size_t y, std::size_t x, std::size_t h, std::size_t w);
/// Mirror along the width axis.
Tensor hflip(const Tensor& frame);
/// Bilinear resampling to out_h×out_w with half-pixel centres and edge clamping.
Tensor resize_bilinear(const Tensor& frame, std::size_t out_h, std::size_t out_w);

/// Random scale jitter (crop of side scale·extent at a uniform position,
/// resized back) and horizontal flip, drawn once and applied to every frame
/// of the clip.
std::vector<Tensor> augment_clip(std::span<const Tensor> frames, const AugmentationConfig& config,
                                 std::mt19937_64& rng);

enum class CropMode { lsta_10view, tsn_10crop, center };

struct CropSpec {
  CropMode mode = CropMode::center;
  std::size_t crop_size = 0;  // 0: the full (square) frame side

  std::size_t view_count() const { return mode == CropMode::center ? 1 : 10; }
};

CropMode crop_mode_from_string(const std::string& text);
const char* to_string(CropMode mode);

/// Views in fixed order: top-left, top-right, bottom-left, bottom-right and
/// centre crops, then the same five flipped. `center` gives the centre crop
/// only. Throws ShapeError if the crop exceeds the frame.
std::vector<Tensor> eval_multiview(const Tensor& frame, const CropSpec& spec);

/// eval_multiview over a clip: result[v] is the clip seen through view v.
std::vector<std::vector<Tensor>> eval_multiview_clip(std::span<const Tensor> frames,
                                                     const CropSpec& spec);

}  // namespace vidrec
