#include "vidrec/cells.hpp"

#include <cmath>

#include "vidrec/errors.hpp"
#include "vidrec/ops.hpp"

namespace vidrec {

namespace {

void check_state(const char* op, const RecurrentState& s, std::size_t memory, const Tensor& x) {
  const Shape want{memory, x.dim(1), x.dim(2)};
  if (s.c.shape() != want || s.h.shape() != want) {
    throw ShapeError(std::string(op) + ": state must be " + to_string(want) + ", got c " +
                     to_string(s.c.shape()) + ", h " + to_string(s.h.shape()));
  }
}

void check_input(const char* op, const Tensor& x, std::size_t channels) {
  if (!x.defined() || x.rank() != 3 || x.dim(0) != channels) {
    throw ShapeError(std::string(op) + ": input must have " + std::to_string(channels) +
                     " channels (C×H×W), got " + to_string(x.shape()));
  }
}

struct Gates {
  Tensor i, f, g, o;
};

Gates split_gates(const char* op, Tensor z, const Tensor& gate_bias, std::size_t memory,
                  const std::optional<GateBias>& bias) {
  z = add(z, reshape(gate_bias, {4 * memory, 1, 1}));
  if (bias) {
    if (bias->maps.shape() != z.shape()) {
      throw ShapeError(std::string(op) + ": gate bias must be " + to_string(z.shape()) + ", got " +
                       to_string(bias->maps.shape()));
    }
    z = add(z, bias->maps);
  }
  return Gates{sigmoid(slice(z, 0, memory)), sigmoid(slice(z, memory, memory)),
               tanh(slice(z, 2 * memory, memory)), sigmoid(slice(z, 3 * memory, memory))};
}

}  // namespace

RecurrentState RecurrentState::zeros(std::size_t memory, std::size_t height, std::size_t width) {
  return {Tensor::zeros({memory, height, width}), Tensor::zeros({memory, height, width})};
}

LstaStepResult lsta_step(const Tensor& x, const LstaState& prev, const LstaParams& params,
                         const std::optional<GateBias>& bias) {
  const std::size_t d = params.memory();
  check_input("lsta_step", x, params.input_channels());
  check_state("lsta_step", prev, d, x);

  Tensor alpha = softmax_spatial(conv2d(concat({x, prev.h}), params.attn_kernel));
  Tensor attended = mul(x, alpha);
  Gates g = split_gates("lsta_step", conv2d(concat({attended, prev.h}), params.gate_kernel),
                        params.gate_bias, d, bias);
  Tensor c = add(mul(g.f, prev.c), mul(g.i, g.g));
  Tensor h = mul(g.o, tanh(conv2d(c, params.pool_kernel)));
  return {{std::move(c), std::move(h)}, std::move(alpha)};
}

ConvLstmState convlstm_step(const Tensor& x, const ConvLstmState& prev,
                            const ConvLstmParams& params, const std::optional<GateBias>& bias) {
  const std::size_t d = params.memory();
  check_input("convlstm_step", x, params.input_channels());
  check_state("convlstm_step", prev, d, x);

  Gates g = split_gates("convlstm_step", conv2d(concat({x, prev.h}), params.gate_kernel),
                        params.gate_bias, d, bias);
  Tensor c = add(mul(g.f, prev.c), mul(g.i, g.g));
  Tensor h = mul(g.o, tanh(c));
  return {std::move(c), std::move(h)};
}

Tensor gru_step(const Tensor& x, const Tensor& h, const GruParams& params) {
  const std::size_t d = params.hidden();
  if (!x.defined() || x.rank() != 1 || x.dim(0) != params.input_size()) {
    throw ShapeError("gru_step: input must be a vector of length " +
                     std::to_string(params.input_size()) + ", got " + to_string(x.shape()));
  }
  if (!h.defined() || h.shape() != Shape{d}) {
    throw ShapeError("gru_step: hidden state must have length " + std::to_string(d) + ", got " +
                     to_string(h.shape()));
  }
  Tensor xh = concat({x, h});
  Tensor z = sigmoid(add(matvec(params.w_update, xh), params.b_update));
  Tensor r = sigmoid(add(matvec(params.w_reset, xh), params.b_reset));
  Tensor n = tanh(add(matvec(params.w_candidate, concat({x, mul(r, h)})), params.b_candidate));
  return add(mul(add_scalar(scale(z, -1.0), 1.0), n), mul(z, h));
}

LstaGruDescriptors run_lsta_gru(std::span<const Tensor> frames, const LstaParams& lsta,
                                const GruParams& gru_a, const GruParams& gru_b) {
  if (frames.empty()) throw ShapeError("run_lsta_gru: empty frame sequence");
  const std::size_t d = lsta.memory();
  const Tensor& first = frames.front();
  check_input("run_lsta_gru", first, lsta.input_channels());
  LstaState state = LstaState::zeros(d, first.dim(1), first.dim(2));
  Tensor ha = Tensor::zeros({gru_a.hidden()});
  Tensor hb = Tensor::zeros({gru_b.hidden()});
  for (const Tensor& x : frames) {
    state = lsta_step(x, state, lsta).state;
    Tensor pooled = spatial_avg_pool(state.h);
    ha = gru_step(pooled, ha, gru_a);
    hb = gru_step(pooled, hb, gru_b);
  }
  return {spatial_avg_pool(state.c), concat({ha, hb})};
}

LstaState run_lsta(std::span<const Tensor> frames, const LstaParams& lsta) {
  if (frames.empty()) throw ShapeError("run_lsta: empty frame sequence");
  const Tensor& first = frames.front();
  check_input("run_lsta", first, lsta.input_channels());
  LstaState state = LstaState::zeros(lsta.memory(), first.dim(1), first.dim(2));
  for (const Tensor& x : frames) state = lsta_step(x, state, lsta).state;
  return state;
}

// ---------------------------------------------------------------------------

Tensor gate_bias_vector(std::size_t memory, double forget) {
  std::vector<double> b(4 * memory, 0.0);
  for (std::size_t k = memory; k < 2 * memory; ++k) b[k] = forget;
  return Tensor({4 * memory}, std::move(b));
}

namespace {

Tensor kernel_init(const std::string& name, Shape shape, std::size_t fan_in, std::uint64_t seed) {
  return uniform_tensor(std::move(shape), std::sqrt(1.0 / static_cast<double>(fan_in)),
                        seed_for(name, seed));
}

}  // namespace

void init_lsta(ParameterStore& store, const std::string& prefix, const std::string& group,
               std::size_t c, std::size_t d, std::uint64_t seed) {
  const std::size_t fan = (c + d) * 9;
  store.add(prefix + ".attn_kernel", group,
            kernel_init(prefix + ".attn_kernel", {1, c + d, 3, 3}, fan, seed));
  store.add(prefix + ".gate_kernel", group,
            kernel_init(prefix + ".gate_kernel", {4 * d, c + d, 3, 3}, fan, seed));
  store.add(prefix + ".pool_kernel", group,
            kernel_init(prefix + ".pool_kernel", {d, d, 1, 1}, d, seed));
  store.add(prefix + ".gate_bias", group, gate_bias_vector(d, 1.0));
}

void init_convlstm(ParameterStore& store, const std::string& prefix, const std::string& group,
                   std::size_t c, std::size_t d, std::uint64_t seed) {
  store.add(prefix + ".gate_kernel", group,
            kernel_init(prefix + ".gate_kernel", {4 * d, c + d, 3, 3}, (c + d) * 9, seed));
  store.add(prefix + ".gate_bias", group, gate_bias_vector(d, 1.0));
}

void init_gru(ParameterStore& store, const std::string& prefix, const std::string& group,
              std::size_t c, std::size_t d, std::uint64_t seed) {
  for (const char* w : {".w_update", ".w_reset", ".w_candidate"}) {
    store.add(prefix + w, group, kernel_init(prefix + w, {d, c + d}, c + d, seed));
  }
  for (const char* b : {".b_update", ".b_reset", ".b_candidate"}) {
    store.add(prefix + b, group, Tensor::zeros({d}));
  }
}

LstaParams lsta_params(const BoundParams& p, const std::string& prefix) {
  return {p[prefix + ".attn_kernel"], p[prefix + ".gate_kernel"], p[prefix + ".pool_kernel"],
          p[prefix + ".gate_bias"]};
}

ConvLstmParams convlstm_params(const BoundParams& p, const std::string& prefix) {
  return {p[prefix + ".gate_kernel"], p[prefix + ".gate_bias"]};
}

GruParams gru_params(const BoundParams& p, const std::string& prefix) {
  return {p[prefix + ".w_update"], p[prefix + ".w_reset"], p[prefix + ".w_candidate"],
          p[prefix + ".b_update"], p[prefix + ".b_reset"], p[prefix + ".b_candidate"]};
}

}  // namespace vidrec
