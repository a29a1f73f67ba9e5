#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vidrec/cells.hpp"
#include "vidrec/heads.hpp"
#include "vidrec/params.hpp"

namespace vidrec {

/// Flow pairs per stack at full scale (10 input channels).
inline constexpr std::size_t kFlowPairs = 5;

/// Replaces a C_out×3×k×k first-layer kernel by C_out×target_in×k×k whose
/// every input slice is the mean of the three source slices (no rescaling).
Tensor inflate_first_conv(const Tensor& kernel, std::size_t target_in = 2 * kFlowPairs);

/// Interleaves per-frame displacement components: x1, y1, ..., xL, yL.
/// Each component is H×W; both lists must have equal length.
Tensor make_flow_stack(std::span<const Tensor> x_components, std::span<const Tensor> y_components);

/// feat ⊙ (α · H·W) with α = softmax over H×W of a 1×1 single-channel conv.
/// `weights` is 1×C×1×1; zero weights give the identity.
Tensor motion_spatial_attention(const Tensor& feat, const Tensor& weights);

struct FusionParams {
  Tensor app_to_motion;  // 4·D_m × C_a × 3 × 3 × 3, over the C_a×T×H×W appearance stack
  Tensor motion_to_app;  // 4·D_a × C_m × 3 × 3
};

struct CrossModalResult {
  LstaState app_state;
  ConvLstmState motion_state;
  Tensor app_descriptor;     // pooled final LSTA memory
  Tensor motion_descriptor;  // pooled final ConvLSTM memory
};

/// Runs the LSTA over appearance features and the ConvLSTM over motion
/// features for T steps from zero state. The appearance sequence, through a
/// temporal 3D conv, biases the ConvLSTM gates; motion features at step t,
/// through a 2D conv, bias the LSTA gates at step t.
CrossModalResult cross_modal_rollout(std::span<const Tensor> app_frames,
                                     std::span<const Tensor> motion_frames,
                                     const LstaParams& lsta, const ConvLstmParams& clstm,
                                     const FusionParams& fusion);

/// Elementwise mean of each logit vector.
ScoreTriple fuse_scores(const ScoreTriple& a, const ScoreTriple& b);

/// `fusion.app_to_motion` and `fusion.motion_to_app`, zero-initialised, group "fusion".
void init_fusion(ParameterStore& store, std::size_t app_channels, std::size_t app_memory,
                 std::size_t motion_channels, std::size_t motion_memory);
FusionParams fusion_params(const BoundParams& p);

/// `motion.attn`, zero-initialised (identity attention), group "motion_attention".
void init_motion_attention(ParameterStore& store, std::size_t channels);

}  // namespace vidrec
