#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "vidrec/cells.hpp"
#include "vidrec/errors.hpp"
#include "vidrec/gradcheck.hpp"
#include "vidrec/ops.hpp"

using namespace vidrec;
using oracle::random_tensor;

namespace {

constexpr std::size_t C = 3, D = 4, H = 5, W = 5;

LstaParams zero_lsta(std::size_t c = C, std::size_t d = D) {
  return {Tensor::zeros({1, c + d, 3, 3}), Tensor::zeros({4 * d, c + d, 3, 3}),
          Tensor::zeros({d, d, 1, 1}), Tensor::zeros({4 * d})};
}

LstaParams random_lsta(std::uint64_t seed, std::size_t c = C, std::size_t d = D) {
  return {random_tensor({1, c + d, 3, 3}, seed, -0.5, 0.5),
          random_tensor({4 * d, c + d, 3, 3}, seed + 1, -0.3, 0.3),
          random_tensor({d, d, 1, 1}, seed + 2, -0.5, 0.5), random_tensor({4 * d}, seed + 3)};
}

GruParams random_gru(std::uint64_t seed, std::size_t c, std::size_t d) {
  return {random_tensor({d, c + d}, seed),     random_tensor({d, c + d}, seed + 1),
          random_tensor({d, c + d}, seed + 2), random_tensor({d}, seed + 3),
          random_tensor({d}, seed + 4),        random_tensor({d}, seed + 5)};
}

RecurrentState random_state(std::uint64_t seed) {
  return {random_tensor({D, H, W}, seed), random_tensor({D, H, W}, seed + 1)};
}

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

std::vector<double> cat(const Tensor& a, const Tensor& b) {
  std::vector<double> v = a.values();
  v.insert(v.end(), b.values().begin(), b.values().end());
  return v;
}

// Scalar-loop rendering of the LSTA recurrence.
struct LstaOracleOut {
  std::vector<double> c, h, alpha;
};

LstaOracleOut lsta_oracle(const Tensor& x, const RecurrentState& s, const LstaParams& p) {
  const std::size_t n = H * W;
  auto a = oracle::conv2d_same(cat(x, s.h), C + D, H, W, p.attn_kernel.values(), 1, 3, 3);
  double mx = a[0];
  for (double v : a) mx = std::max(mx, v);
  double tot = 0.0;
  std::vector<double> alpha(n);
  for (std::size_t k = 0; k < n; ++k) tot += alpha[k] = std::exp(a[k] - mx);
  for (double& v : alpha) v /= tot;
  std::vector<double> xt(C * n);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t k = 0; k < n; ++k) xt[c * n + k] = x[c * n + k] * alpha[k];
  std::vector<double> in = xt;
  in.insert(in.end(), s.h.values().begin(), s.h.values().end());
  auto z = oracle::conv2d_same(in, C + D, H, W, p.gate_kernel.values(), 4 * D, 3, 3);
  std::vector<double> c(D * n), h(D * n);
  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t k = 0; k < n; ++k) {
      const double i = sig(z[(0 * D + d) * n + k] + p.gate_bias[0 * D + d]);
      const double f = sig(z[(1 * D + d) * n + k] + p.gate_bias[1 * D + d]);
      const double g = std::tanh(z[(2 * D + d) * n + k] + p.gate_bias[2 * D + d]);
      c[d * n + k] = f * s.c[d * n + k] + i * g;
    }
  auto pooled = oracle::conv2d_same(c, D, H, W, p.pool_kernel.values(), D, 1, 1);
  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t k = 0; k < n; ++k) {
      const double o = sig(z[(3 * D + d) * n + k] + p.gate_bias[3 * D + d]);
      h[d * n + k] = o * std::tanh(pooled[d * n + k]);
    }
  return {c, h, alpha};
}

Tensor weighted(const Tensor& y, std::uint64_t seed) {
  return sum(mul(y, random_tensor(y.shape(), seed)));
}

}  // namespace

TEST(LstaStep, ZeroParametersHalveMemoryAndSilenceOutput) {
  RecurrentState s = random_state(1);
  auto r = lsta_step(random_tensor({C, H, W}, 2), s, zero_lsta());
  for (std::size_t k = 0; k < r.state.c.size(); ++k) EXPECT_EQ(r.state.c[k], 0.5 * s.c[k]);
  for (double v : r.state.h.data()) EXPECT_EQ(v, 0.0);
  for (double v : r.attention.data()) EXPECT_DOUBLE_EQ(v, 1.0 / (H * W));
}

TEST(LstaStep, LargeForgetBiasPreservesMemory) {
  RecurrentState s = random_state(3);
  LstaParams p = zero_lsta();
  p.gate_bias = gate_bias_vector(D, 20.0);
  auto r = lsta_step(random_tensor({C, H, W}, 4), s, p);
  EXPECT_LE(oracle::max_abs_diff(r.state.c, s.c), 1e-8);
}

TEST(LstaStep, MatchesScalarLoopOracle) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    LstaParams p = random_lsta(10 + 10 * seed);
    RecurrentState s = random_state(100 + seed);
    Tensor x = random_tensor({C, H, W}, 200 + seed);
    auto r = lsta_step(x, s, p);
    auto o = lsta_oracle(x, s, p);
    for (std::size_t k = 0; k < o.c.size(); ++k) {
      EXPECT_NEAR(r.state.c[k], o.c[k], 1e-13);
      EXPECT_NEAR(r.state.h[k], o.h[k], 1e-13);
    }
    for (std::size_t k = 0; k < o.alpha.size(); ++k) EXPECT_NEAR(r.attention[k], o.alpha[k], 1e-15);
  }
}

TEST(LstaStep, AttentionSumsToOneAndMemoryIsBounded) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    LstaParams p = random_lsta(1000 + seed);
    p.attn_kernel = random_tensor(p.attn_kernel.shape(), 3000 + seed, -5, 5);
    RecurrentState s = random_state(2000 + seed);
    auto r = lsta_step(random_tensor({C, H, W}, 4000 + seed, -3, 3), s, p);
    double tot = 0.0;
    for (double v : r.attention.data()) tot += v;
    EXPECT_LE(std::abs(tot - 1.0), 1e-12);
    for (std::size_t k = 0; k < s.c.size(); ++k)
      EXPECT_LE(std::abs(r.state.c[k]), std::abs(s.c[k]) + 1.0);
  }
}

TEST(LstaStep, ExplicitZeroBiasIsBitIdenticalToNoBias) {
  LstaParams p = random_lsta(5);
  RecurrentState s = random_state(6);
  Tensor x = random_tensor({C, H, W}, 7);
  auto a = lsta_step(x, s, p);
  auto b = lsta_step(x, s, p, GateBias{Tensor::zeros({4 * D, H, W})});
  EXPECT_TRUE(oracle::bit_equal(a.state.c, b.state.c));
  EXPECT_TRUE(oracle::bit_equal(a.state.h, b.state.h));
}

TEST(LstaStep, ShapeErrors) {
  LstaParams p = zero_lsta();
  EXPECT_THROW(lsta_step(Tensor::zeros({C + 1, H, W}), RecurrentState::zeros(D, H, W), p), ShapeError);
  EXPECT_THROW(lsta_step(Tensor::zeros({C, H, W}), RecurrentState::zeros(D, H + 1, W), p), ShapeError);
  EXPECT_THROW(lsta_step(Tensor::zeros({C, H, W}), RecurrentState::zeros(D, H, W), p,
                         GateBias{Tensor::zeros({D, H, W})}),
               ShapeError);
}

TEST(LstaStep, GradCheckOnThreeInstances) {
  for (std::uint64_t inst = 0; inst < 3; ++inst) {
    LstaParams p = random_lsta(50 + 10 * inst);
    RecurrentState s = random_state(70 + inst);
    std::vector<NamedTensor> params{{"x", random_tensor({C, H, W}, 80 + inst)},
                                    {"attn", p.attn_kernel},
                                    {"gates", p.gate_kernel},
                                    {"pool", p.pool_kernel},
                                    {"bias", p.gate_bias},
                                    {"h", s.h},
                                    {"c", s.c}};
    GradReport r = grad_check(
        [](auto v) {
          auto out = lsta_step(v[0], {v[6], v[5]}, {v[1], v[2], v[3], v[4]});
          return add(weighted(out.state.h, 91), weighted(out.state.c, 92));
        },
        params);
    EXPECT_TRUE(r.passed()) << "instance " << inst << " rel " << r.max_rel_error();
  }
}

TEST(ConvLstmStep, ZeroParameters) {
  RecurrentState s = random_state(11);
  ConvLstmParams p{Tensor::zeros({4 * D, C + D, 3, 3}), Tensor::zeros({4 * D})};
  auto r = convlstm_step(random_tensor({C, H, W}, 12), s, p);
  for (std::size_t k = 0; k < s.c.size(); ++k) {
    EXPECT_EQ(r.c[k], 0.5 * s.c[k]);
    EXPECT_NEAR(r.h[k], 0.5 * std::tanh(0.5 * s.c[k]), 1e-15);
  }
}

TEST(ConvLstmStep, ZeroInputWithLargeForgetBiasPreservesMemory) {
  RecurrentState s = random_state(13);
  ConvLstmParams p{Tensor::zeros({4 * D, C + D, 3, 3}), gate_bias_vector(D, 20.0)};
  auto r = convlstm_step(Tensor::zeros({C, H, W}), {s.c, Tensor::zeros({D, H, W})}, p);
  EXPECT_LE(oracle::max_abs_diff(r.c, s.c), 1e-8);
}

TEST(ConvLstmStep, ExplicitZeroBiasIsBitIdentical) {
  ConvLstmParams p{random_tensor({4 * D, C + D, 3, 3}, 15, -0.3, 0.3), random_tensor({4 * D}, 16)};
  RecurrentState s = random_state(17);
  Tensor x = random_tensor({C, H, W}, 18);
  auto a = convlstm_step(x, s, p);
  auto b = convlstm_step(x, s, p, GateBias{Tensor::zeros({4 * D, H, W})});
  EXPECT_TRUE(oracle::bit_equal(a.c, b.c));
  EXPECT_TRUE(oracle::bit_equal(a.h, b.h));
}

TEST(ConvLstmStep, GradCheckOnThreeInstances) {
  for (std::uint64_t inst = 0; inst < 3; ++inst) {
    std::vector<NamedTensor> params{{"x", random_tensor({C, H, W}, 20 + inst)},
                                    {"gates", random_tensor({4 * D, C + D, 3, 3}, 30 + inst, -0.3, 0.3)},
                                    {"bias", random_tensor({4 * D}, 40 + inst)},
                                    {"gb", random_tensor({4 * D, H, W}, 50 + inst)},
                                    {"c", random_tensor({D, H, W}, 60 + inst)}};
    GradReport r = grad_check(
        [](auto v) {
          auto s = convlstm_step(v[0], {v[4], Tensor::zeros({D, H, W})}, {v[1], v[2]}, GateBias{v[3]});
          return add(weighted(s.h, 93), weighted(s.c, 94));
        },
        params);
    EXPECT_TRUE(r.passed()) << "instance " << inst << " rel " << r.max_rel_error();
  }
}

TEST(GruStep, ZeroParametersHalveState) {
  GruParams p{Tensor::zeros({D, C + D}), Tensor::zeros({D, C + D}), Tensor::zeros({D, C + D}),
              Tensor::zeros({D}),        Tensor::zeros({D}),        Tensor::zeros({D})};
  Tensor h = random_tensor({D}, 21);
  Tensor out = gru_step(random_tensor({C}, 22), h, p);
  for (std::size_t k = 0; k < D; ++k) EXPECT_EQ(out[k], 0.5 * h[k]);
}

TEST(GruStep, LargeUpdateBiasCarriesState) {
  GruParams p = random_gru(23, C, D);
  p.w_update = Tensor::zeros({D, C + D});
  p.b_update = Tensor::full({D}, 20.0);
  Tensor h = random_tensor({D}, 24);
  EXPECT_LE(oracle::max_abs_diff(gru_step(random_tensor({C}, 25), h, p), h), 1e-8);
}

TEST(GruStep, MatchesScalarLoopOracle) {
  GruParams p = random_gru(26, C, D);
  Tensor x = random_tensor({C}, 27), h = random_tensor({D}, 28);
  Tensor out = gru_step(x, h, p);
  const std::vector<double> xh = cat(x, h);
  auto row = [&](const Tensor& w, std::size_t d, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t j = 0; j < C + D; ++j) s += w[d * (C + D) + j] * v[j];
    return s;
  };
  std::vector<double> r(D), z(D);
  for (std::size_t d = 0; d < D; ++d) {
    z[d] = sig(row(p.w_update, d, xh) + p.b_update[d]);
    r[d] = sig(row(p.w_reset, d, xh) + p.b_reset[d]);
  }
  std::vector<double> xrh = x.values();
  for (std::size_t d = 0; d < D; ++d) xrh.push_back(r[d] * h[d]);
  for (std::size_t d = 0; d < D; ++d) {
    const double n = std::tanh(row(p.w_candidate, d, xrh) + p.b_candidate[d]);
    EXPECT_NEAR(out[d], (1 - z[d]) * n + z[d] * h[d], 1e-14);
  }
}

TEST(GruStep, ExtentErrors) {
  GruParams p = random_gru(29, C, D);
  EXPECT_THROW(gru_step(Tensor::zeros({C + 1}), Tensor::zeros({D}), p), ShapeError);
  EXPECT_THROW(gru_step(Tensor::zeros({C}), Tensor::zeros({D + 2}), p), ShapeError);
}

TEST(GruStep, GradCheckOnThreeInstances) {
  for (std::uint64_t inst = 0; inst < 3; ++inst) {
    GruParams g = random_gru(300 + 10 * inst, C, D);
    std::vector<NamedTensor> params{{"x", random_tensor({C}, 310 + inst)},
                                    {"h", random_tensor({D}, 320 + inst)},
                                    {"wz", g.w_update},
                                    {"wr", g.w_reset},
                                    {"wn", g.w_candidate},
                                    {"bz", g.b_update},
                                    {"br", g.b_reset},
                                    {"bn", g.b_candidate}};
    GradReport r = grad_check(
        [](auto v) {
          return weighted(gru_step(v[0], v[1], {v[2], v[3], v[4], v[5], v[6], v[7]}), 95);
        },
        params);
    EXPECT_TRUE(r.passed()) << "instance " << inst << " rel " << r.max_rel_error();
  }
}

TEST(RunLstaGru, SingleFrameWithZeroParametersGivesZeroDescriptors) {
  GruParams g{Tensor::zeros({D, D + D}), Tensor::zeros({D, D + D}), Tensor::zeros({D, D + D}),
              Tensor::zeros({D}),        Tensor::zeros({D}),        Tensor::zeros({D})};
  std::vector<Tensor> frames{random_tensor({C, H, W}, 31)};
  auto out = run_lsta_gru(frames, zero_lsta(), g, g);
  EXPECT_EQ(out.lsta.shape(), (Shape{D}));
  EXPECT_EQ(out.gru.shape(), (Shape{2 * D}));
  for (double v : out.lsta.data()) EXPECT_EQ(v, 0.0);
  for (double v : out.gru.data()) EXPECT_EQ(v, 0.0);
}

TEST(RunLstaGru, IdenticalGrusGiveIdenticalHalves) {
  GruParams g = random_gru(32, D, D);
  std::vector<Tensor> frames;
  for (std::uint64_t t = 0; t < 4; ++t) frames.push_back(random_tensor({C, H, W}, 33 + t));
  auto out = run_lsta_gru(frames, random_lsta(40), g, g);
  for (std::size_t k = 0; k < D; ++k) EXPECT_EQ(out.gru[k], out.gru[D + k]);
}

TEST(RunLstaGru, DescriptorIsPooledFinalMemory) {
  std::vector<Tensor> frames;
  for (std::uint64_t t = 0; t < 3; ++t) frames.push_back(random_tensor({C, H, W}, 50 + t));
  LstaParams p = random_lsta(60);
  RecurrentState s = RecurrentState::zeros(D, H, W);
  for (const Tensor& f : frames) s = lsta_step(f, s, p).state;
  auto out = run_lsta_gru(frames, p, random_gru(61, D, D), random_gru(62, D, D));
  EXPECT_TRUE(oracle::bit_equal(out.lsta, spatial_avg_pool(s.c)));
  EXPECT_TRUE(oracle::bit_equal(run_lsta(frames, p).c, s.c));
  EXPECT_THROW(run_lsta_gru({}, p, random_gru(61, D, D), random_gru(62, D, D)), ShapeError);
}

TEST(RunLstaGru, GradCheckOnThreeFourFrameSequences) {
  constexpr std::size_t c = 2, d = 3, hw = 4;
  for (std::uint64_t inst = 0; inst < 3; ++inst) {
    LstaParams p = random_lsta(500 + 10 * inst, c, d);
    GruParams a = random_gru(600 + 10 * inst, d, d), b = random_gru(700 + 10 * inst, d, d);
    std::vector<NamedTensor> params{{"frames", random_tensor({4, c, hw, hw}, 800 + inst)},
                                    {"attn", p.attn_kernel},
                                    {"gates", p.gate_kernel},
                                    {"pool", p.pool_kernel},
                                    {"bias", p.gate_bias},
                                    {"wz_a", a.w_update},
                                    {"wn_b", b.w_candidate}};
    GradReport r = grad_check(
        [&](auto v) {
          std::vector<Tensor> frames;
          for (std::size_t t = 0; t < 4; ++t) frames.push_back(select(v[0], t));
          GruParams ga = a, gb = b;
          ga.w_update = v[5];
          gb.w_candidate = v[6];
          auto out = run_lsta_gru(frames, {v[1], v[2], v[3], v[4]}, ga, gb);
          return add(weighted(out.lsta, 96), weighted(out.gru, 97));
        },
        params);
    EXPECT_TRUE(r.passed()) << "instance " << inst << " rel " << r.max_rel_error();
  }
}

TEST(Init, ShapesGroupsAndForgetBias) {
  ParameterStore s;
  init_lsta(s, "lsta", "lsta", C, D, 1);
  init_convlstm(s, "convlstm", "convlstm", C, D, 1);
  init_gru(s, "gru_a", "lsta", D, D, 1);
  init_gru(s, "gru_b", "lsta", D, D, 1);
  EXPECT_EQ(s.get("lsta.attn_kernel").shape(), (Shape{1, C + D, 3, 3}));
  EXPECT_EQ(s.get("lsta.gate_kernel").shape(), (Shape{4 * D, C + D, 3, 3}));
  EXPECT_EQ(s.get("lsta.pool_kernel").shape(), (Shape{D, D, 1, 1}));
  EXPECT_EQ(s.get("convlstm.gate_kernel").shape(), (Shape{4 * D, C + D, 3, 3}));
  EXPECT_EQ(s.get("gru_a.w_update").shape(), (Shape{D, 2 * D}));
  EXPECT_EQ(s.at("convlstm.gate_bias").group, "convlstm");
  Tensor b = s.get("lsta.gate_bias");
  for (std::size_t k = 0; k < 4 * D; ++k) EXPECT_EQ(b[k], (k >= D && k < 2 * D) ? 1.0 : 0.0);
  const double bound = std::sqrt(1.0 / ((C + D) * 9.0));
  for (double v : s.get("lsta.gate_kernel").data()) EXPECT_LE(std::abs(v), bound);
  EXPECT_FALSE(oracle::bit_equal(s.get("gru_a.w_update"), s.get("gru_b.w_update")));
  BoundParams bp = BoundParams::constant(s);
  EXPECT_EQ(lsta_params(bp, "lsta").memory(), D);
  EXPECT_EQ(lsta_params(bp, "lsta").input_channels(), C);
  EXPECT_EQ(gru_params(bp, "gru_b").hidden(), D);
  EXPECT_EQ(convlstm_params(bp, "convlstm").input_channels(), C);
  EXPECT_EQ(kFullScaleMemory, 512u);
}
