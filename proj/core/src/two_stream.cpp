#include "vidrec/two_stream.hpp"

#include "vidrec/errors.hpp"
#include "vidrec/ops.hpp"

namespace vidrec {

Tensor inflate_first_conv(const Tensor& kernel, std::size_t target_in) {
  if (kernel.rank() != 4 || kernel.dim(1) != 3) {
    throw ShapeError("inflate_first_conv: expected a C_out×3×k×k kernel, got " +
                     to_string(kernel.shape()));
  }
  if (target_in == 0) throw ShapeError("inflate_first_conv: target channel count must be positive");
  const std::size_t cout = kernel.dim(0), plane = kernel.dim(2) * kernel.dim(3);
  auto src = kernel.data();
  std::vector<double> out(cout * target_in * plane);
  for (std::size_t o = 0; o < cout; ++o) {
    const double* s = src.data() + o * 3 * plane;
    for (std::size_t k = 0; k < plane; ++k) {
      // Running mean: exact when the three slices agree.
      double m = s[k];
      m += (s[plane + k] - m) / 2.0;
      m += (s[2 * plane + k] - m) / 3.0;
      for (std::size_t c = 0; c < target_in; ++c) out[(o * target_in + c) * plane + k] = m;
    }
  }
  return Tensor({cout, target_in, kernel.dim(2), kernel.dim(3)}, std::move(out));
}

Tensor make_flow_stack(std::span<const Tensor> xs, std::span<const Tensor> ys) {
  if (xs.empty() || xs.size() != ys.size()) {
    throw ShapeError("make_flow_stack: need equal, nonzero numbers of x and y components (got " +
                     std::to_string(xs.size()) + " and " + std::to_string(ys.size()) + ")");
  }
  std::vector<Tensor> planes;
  for (std::size_t l = 0; l < xs.size(); ++l) {
    for (const Tensor* c : {&xs[l], &ys[l]}) {
      if (c->rank() != 2 || c->shape() != xs.front().shape()) {
        throw ShapeError("make_flow_stack: components must share one H×W shape, got " +
                         to_string(c->shape()));
      }
      planes.push_back(reshape(*c, {1, c->dim(0), c->dim(1)}));
    }
  }
  return concat(planes);
}

Tensor motion_spatial_attention(const Tensor& feat, const Tensor& weights) {
  if (feat.rank() != 3 || weights.shape() != Shape{1, feat.dim(0), 1, 1}) {
    throw ShapeError("motion_spatial_attention: weights " + to_string(weights.shape()) +
                     " do not fit features " + to_string(feat.shape()));
  }
  const double cells = static_cast<double>(feat.dim(1) * feat.dim(2));
  return mul(feat, softmax_spatial(conv2d(feat, weights), cells));
}

CrossModalResult cross_modal_rollout(std::span<const Tensor> app_frames,
                                     std::span<const Tensor> motion_frames,
                                     const LstaParams& lsta, const ConvLstmParams& clstm,
                                     const FusionParams& fusion) {
  if (app_frames.empty() || app_frames.size() != motion_frames.size()) {
    throw ShapeError("cross_modal_rollout: appearance and motion sequences must be nonempty and "
                     "of equal length (got " + std::to_string(app_frames.size()) + " and " +
                     std::to_string(motion_frames.size()) + ")");
  }
  const std::size_t steps = app_frames.size();
  const Tensor& a0 = app_frames.front();
  const Tensor& m0 = motion_frames.front();
  if (a0.rank() != 3 || m0.rank() != 3) {
    throw ShapeError("cross_modal_rollout: frames must be C×H×W");
  }

  // C_a×T×H×W -> 4D_m×T×H×W -> T×4D_m×H×W
  Tensor app_bias = transpose01(conv3d(transpose01(stack(app_frames)), fusion.app_to_motion));

  LstaState sa = LstaState::zeros(lsta.memory(), a0.dim(1), a0.dim(2));
  ConvLstmState sm = ConvLstmState::zeros(clstm.memory(), m0.dim(1), m0.dim(2));
  for (std::size_t t = 0; t < steps; ++t) {
    GateBias to_app{conv2d(motion_frames[t], fusion.motion_to_app)};
    GateBias to_motion{select(app_bias, t)};
    sa = lsta_step(app_frames[t], sa, lsta, to_app).state;
    sm = convlstm_step(motion_frames[t], sm, clstm, to_motion);
  }
  Tensor da = spatial_avg_pool(sa.c);
  Tensor dm = spatial_avg_pool(sm.c);
  return {std::move(sa), std::move(sm), std::move(da), std::move(dm)};
}

ScoreTriple fuse_scores(const ScoreTriple& a, const ScoreTriple& b) {
  auto avg = [](const Tensor& x, const Tensor& y, const char* task) {
    if (x.shape() != y.shape()) {
      throw ShapeError(std::string("fuse_scores: ") + task + " logits " + to_string(x.shape()) +
                       " vs " + to_string(y.shape()));
    }
    return scale(add(x, y), 0.5);
  };
  return {avg(a.verb, b.verb, "verb"), avg(a.noun, b.noun, "noun"),
          avg(a.action, b.action, "action")};
}

void init_fusion(ParameterStore& store, std::size_t app_channels, std::size_t app_memory,
                 std::size_t motion_channels, std::size_t motion_memory) {
  store.add("fusion.app_to_motion", "fusion",
            Tensor::zeros({4 * motion_memory, app_channels, 3, 3, 3}));
  store.add("fusion.motion_to_app", "fusion", Tensor::zeros({4 * app_memory, motion_channels, 3, 3}));
}

FusionParams fusion_params(const BoundParams& p) {
  return {p["fusion.app_to_motion"], p["fusion.motion_to_app"]};
}

void init_motion_attention(ParameterStore& store, std::size_t channels) {
  store.add("motion.attn", "motion_attention", Tensor::zeros({1, channels, 1, 1}));
}

}  // namespace vidrec
