#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "vidrec/params.hpp"
#include "vidrec/tensor.hpp"

// Recurrent units: the attention-gated LSTA cell, ConvLSTM, GRU, and the
// LSTA+GRU sequence runner. Fused gate tensors are laid out (i, f, g, o).
namespace vidrec {

inline constexpr std::size_t kFullScaleMemory = 512;

/// c (memory) and h (output) maps, both D×H×W.
struct RecurrentState {
  Tensor c;
  Tensor h;

  static RecurrentState zeros(std::size_t memory, std::size_t height, std::size_t width);
};
using LstaState = RecurrentState;
using ConvLstmState = RecurrentState;

struct LstaParams {
  Tensor attn_kernel;  // 1 × (C+D) × 3 × 3
  Tensor gate_kernel;  // 4D × (C+D) × 3 × 3
  Tensor pool_kernel;  // D × D × 1 × 1
  Tensor gate_bias;    // 4D

  std::size_t memory() const { return pool_kernel.dim(0); }
  std::size_t input_channels() const { return gate_kernel.dim(1) - memory(); }
};

struct ConvLstmParams {
  Tensor gate_kernel;  // 4D × (C+D) × 3 × 3
  Tensor gate_bias;    // 4D

  std::size_t memory() const { return gate_kernel.dim(0) / 4; }
  std::size_t input_channels() const { return gate_kernel.dim(1) - memory(); }
};

struct GruParams {
  Tensor w_update;     // D × (C+D)
  Tensor w_reset;      // D × (C+D)
  Tensor w_candidate;  // D × (C+D)
  Tensor b_update;     // D
  Tensor b_reset;      // D
  Tensor b_candidate;  // D

  std::size_t hidden() const { return w_update.dim(0); }
  std::size_t input_size() const { return w_update.dim(1) - hidden(); }
};

/// Additive pre-activation bias for all four gates, 4D×H×W in (i, f, g, o) order.
struct GateBias {
  Tensor maps;
};

struct LstaStepResult {
  LstaState state;
  Tensor attention;  // 1×H×W, sums to 1
};

/// One LSTA step:
///   alpha = softmax_spatial(conv([x; h], attn)),  x~ = x * alpha
///   [i f g o] = conv([x~; h], gates) + b (+ bias)
///   c = sig(f) c + sig(i) tanh(g),  h = sig(o) tanh(conv1x1(c, pool))
LstaStepResult lsta_step(const Tensor& x, const LstaState& prev, const LstaParams& params,
                         const std::optional<GateBias>& bias = std::nullopt);

/// Standard ConvLSTM step with an optional additive gate bias.
ConvLstmState convlstm_step(const Tensor& x, const ConvLstmState& prev,
                            const ConvLstmParams& params,
                            const std::optional<GateBias>& bias = std::nullopt);

/// h' = (1 - z) n + z h with z, r the update/reset gates over [x; h] and
/// n = tanh(W_n [x; r h] + b_n).
Tensor gru_step(const Tensor& x, const Tensor& h, const GruParams& params);

struct LstaGruDescriptors {
  Tensor lsta;  // D: pooled final LSTA memory
  Tensor gru;   // 2D: final hidden states of both GRUs, concatenated
};

/// Runs the LSTA over `frames` from zero state; the pooled output map of every
/// step feeds two independent GRUs.
LstaGruDescriptors run_lsta_gru(std::span<const Tensor> frames, const LstaParams& lsta,
                                const GruParams& gru_a, const GruParams& gru_b);

/// Runs the LSTA alone and returns its final state.
LstaState run_lsta(std::span<const Tensor> frames, const LstaParams& lsta);

// Parameter creation and lookup. Kernels are uniform in ±sqrt(1/fan_in) with
// a seed derived from the tensor name; the forget-gate bias starts at +1.

void init_lsta(ParameterStore& store, const std::string& prefix, const std::string& group,
               std::size_t input_channels, std::size_t memory, std::uint64_t seed);
void init_convlstm(ParameterStore& store, const std::string& prefix, const std::string& group,
                   std::size_t input_channels, std::size_t memory, std::uint64_t seed);
void init_gru(ParameterStore& store, const std::string& prefix, const std::string& group,
              std::size_t input_size, std::size_t hidden, std::uint64_t seed);

LstaParams lsta_params(const BoundParams& p, const std::string& prefix);
ConvLstmParams convlstm_params(const BoundParams& p, const std::string& prefix);
GruParams gru_params(const BoundParams& p, const std::string& prefix);

/// Gate bias with the forget block set to `forget` and the rest to zero.
Tensor gate_bias_vector(std::size_t memory, double forget);

}  // namespace vidrec
