#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "oracles.hpp"
#include "vidrec/errors.hpp"
#include "vidrec/gradcheck.hpp"
#include "vidrec/ops.hpp"

using namespace vidrec;
using oracle::random_tensor;

TEST(Elementwise, AddAndSigmoidExamples) {
  Tensor s = add(Tensor::vector({1, 2}), Tensor::vector({3, 4}));
  EXPECT_EQ(s.values(), (std::vector<double>{4, 6}));
  EXPECT_EQ(sigmoid(Tensor::vector({0.0}))[0], 0.5);
}

TEST(Elementwise, HadamardMatchesLoopOracle) {
  Tensor a = random_tensor({2, 3}, 11), b = random_tensor({2, 3}, 12);
  Tensor c = mul(a, b);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(c[i * 3 + j], a[i * 3 + j] * b[i * 3 + j]);
}

TEST(Elementwise, BroadcastMatchesLoopOracleAndCommutes) {
  Tensor a = random_tensor({3, 1, 4}, 13), b = random_tensor({2, 1}, 14);
  Tensor s = add(a, b), p = mul(a, b);
  ASSERT_EQ(s.shape(), (Shape{3, 2, 4}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(s[(i * 2 + j) * 4 + k], a[i * 4 + k] + b[j]);
        EXPECT_EQ(p[(i * 2 + j) * 4 + k], a[i * 4 + k] * b[j]);
      }
  EXPECT_TRUE(oracle::bit_equal(s, add(b, a)));
  EXPECT_TRUE(oracle::bit_equal(p, mul(b, a)));
}

TEST(Elementwise, IncompatibleShapesThrow) {
  EXPECT_THROW(add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), ShapeError);
  EXPECT_THROW(mul(Tensor::zeros({4}), Tensor::zeros({3})), ShapeError);
}

TEST(Elementwise, SigmoidIsStableForLargeInputs) {
  Tensor s = sigmoid(Tensor::vector({-800.0, 800.0}));
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 1.0);
}

TEST(Matmul, IdentityZeroAndOracle) {
  Tensor a = random_tensor({3, 3}, 21);
  Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_TRUE(oracle::bit_equal(matmul(eye, a), a));
  Tensor z = matmul(a, Tensor::zeros({3, 2}));
  for (double v : z.data()) EXPECT_EQ(v, 0.0);

  Tensor x = random_tensor({3, 4}, 22), y = random_tensor({4, 2}, 23);
  EXPECT_EQ(matmul(x, y).values(), oracle::matmul(x.values(), y.values(), 3, 4, 2));
  EXPECT_THROW(matmul(x, x), ShapeError);
}

TEST(Matmul, MatvecMatchesMatmul) {
  Tensor w = random_tensor({3, 4}, 24), v = random_tensor({4}, 25);
  EXPECT_EQ(matvec(w, v).values(), oracle::matmul(w.values(), v.values(), 3, 4, 1));
}

TEST(Conv2d, UnitKernelIsIdentity) {
  Tensor x = random_tensor({1, 4, 5}, 31);
  EXPECT_TRUE(oracle::bit_equal(conv2d(x, Tensor::full({1, 1, 1, 1}, 1.0)), x));
}

TEST(Conv2d, OnesKernelCountsCoveredCells) {
  Tensor y = conv2d(Tensor::full({1, 3, 3}, 1.0), Tensor::full({1, 1, 3, 3}, 1.0));
  EXPECT_EQ(y[4], 9.0);
  EXPECT_EQ(y[0], 4.0);
  EXPECT_EQ(y[1], 6.0);
}

TEST(Conv2d, MatchesDirectLoopOracle) {
  Tensor x = random_tensor({2, 4, 4}, 32), k = random_tensor({3, 2, 3, 3}, 33);
  EXPECT_EQ(conv2d(x, k).values(), oracle::conv2d_same(x.values(), 2, 4, 4, k.values(), 3, 3, 3));
}

TEST(Conv2d, ValidPaddingShrinksOutput) {
  Tensor y = conv2d(Tensor::full({1, 5, 5}, 1.0), Tensor::full({2, 1, 3, 3}, 1.0), false);
  EXPECT_EQ(y.shape(), (Shape{2, 3, 3}));
  for (double v : y.data()) EXPECT_EQ(v, 9.0);
}

TEST(Conv2d, Errors) {
  EXPECT_THROW(conv2d(Tensor::zeros({2, 4, 4}), Tensor::zeros({1, 3, 3, 3})), ShapeError);
  EXPECT_THROW(conv2d(Tensor::zeros({1, 4, 4}), Tensor::zeros({1, 1, 2, 2})), ShapeError);
}

TEST(Conv3d, UnitKernelIsIdentity) {
  Tensor x = random_tensor({2, 3, 4, 4}, 41);
  Tensor k = Tensor::zeros({2, 2, 1, 1, 1});
  std::vector<double> kv(4, 0.0);
  kv[0] = kv[3] = 1.0;
  EXPECT_TRUE(oracle::bit_equal(conv3d(x, Tensor({2, 2, 1, 1, 1}, kv)), x));
}

TEST(Conv3d, TimeConstantInputTriplesInterior) {
  Tensor plane = random_tensor({2, 1, 4, 4}, 42);
  std::vector<double> v;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t k = 0; k < 16; ++k) v.push_back(plane[c * 16 + k]);
  Tensor x({2, 5, 4, 4}, v);
  Tensor k2 = random_tensor({3, 2, 3, 3}, 43);
  std::vector<double> kv;
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t q = 0; q < 9; ++q) kv.push_back(k2[(o * 2 + c) * 9 + q]);
  Tensor y = conv3d(x, Tensor({3, 2, 3, 3, 3}, kv));
  Tensor y2 = conv2d(Tensor({2, 4, 4}, plane.values()), k2);
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t t = 1; t < 4; ++t)
      for (std::size_t q = 0; q < 16; ++q)
        EXPECT_NEAR(y[(o * 5 + t) * 16 + q], 3.0 * y2[o * 16 + q], 1e-12);
}

TEST(Conv3d, MatchesDirectLoopOracle) {
  Tensor x = random_tensor({2, 3, 4, 3}, 44), k = random_tensor({2, 2, 3, 3, 3}, 45);
  EXPECT_EQ(conv3d(x, k).values(),
            oracle::conv3d_same(x.values(), 2, 3, 4, 3, k.values(), 2, 3, 3, 3));
}

TEST(SoftmaxSpatial, ConstantMapIsUniform) {
  Tensor p = softmax_spatial(Tensor::full({1, 3, 5}, 0.7));
  for (double v : p.data()) EXPECT_DOUBLE_EQ(v, 1.0 / 15.0);
}

TEST(SoftmaxSpatial, HandEvaluatedExample) {
  Tensor p = softmax_spatial(Tensor({1, 2, 2}, {0.0, std::log(2.0), std::log(3.0), std::log(4.0)}));
  const double want[] = {0.1, 0.2, 0.3, 0.4};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(p[k], want[k], 1e-15);
}

TEST(SoftmaxSpatial, SumsToOneAndIsShiftInvariant) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Tensor m = random_tensor({1, 6, 7}, 100 + seed, -30, 30);
    Tensor p = softmax_spatial(m);
    double s = 0.0;
    for (double v : p.data()) {
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_LE(std::abs(s - 1.0), 1e-12);
    Tensor q = softmax_spatial(add_scalar(m, 12.5));
    EXPECT_LE(oracle::max_abs_diff(p, q), 1e-15);
  }
}

TEST(SoftmaxSpatial, MassScalesTheOutput) {
  Tensor p = softmax_spatial(Tensor::zeros({1, 5, 5}), 25.0);
  for (double v : p.data()) EXPECT_EQ(v, 1.0);
  EXPECT_THROW(softmax_spatial(Tensor::zeros({2, 3, 3})), ShapeError);
}

TEST(SpatialAvgPool, Examples) {
  EXPECT_EQ(spatial_avg_pool(Tensor::full({1, 3, 3}, 0.25))[0], 0.25);
  EXPECT_EQ(spatial_avg_pool(Tensor({1, 2, 2}, {1, 2, 3, 4}))[0], 2.5);
  Tensor x = random_tensor({3, 5, 5}, 51);
  Tensor p = spatial_avg_pool(x);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < 25; ++k) s += x[c * 25 + k];
    EXPECT_EQ(p[c], s / 25.0);
  }
}

TEST(Structure, ConcatSliceSelectStackTranspose) {
  Tensor a = random_tensor({2, 3}, 61), b = random_tensor({1, 3}, 62);
  Tensor c = concat({a, b});
  EXPECT_EQ(c.shape(), (Shape{3, 3}));
  EXPECT_TRUE(oracle::bit_equal(slice(c, 0, 2), a));
  EXPECT_TRUE(oracle::bit_equal(select(c, 2), Tensor({3}, b.values())));
  std::vector<Tensor> parts{a, a};
  Tensor s = stack(parts);
  EXPECT_EQ(s.shape(), (Shape{2, 2, 3}));
  Tensor t = transpose01(s);
  EXPECT_EQ(t.shape(), (Shape{2, 2, 3}));
  Tensor u = transpose01(random_tensor({2, 3, 4}, 63));
  EXPECT_EQ(u.shape(), (Shape{3, 2, 4}));
  Tensor v = random_tensor({2, 3, 4}, 63);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(u[(j * 2 + i) * 4 + k], v[(i * 3 + j) * 4 + k]);
  EXPECT_THROW(concat({a, Tensor::zeros({1, 2})}), ShapeError);
}

TEST(CrossEntropy, MatchesLogSumExpOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Tensor x = random_tensor({7}, 70 + seed, -5, 5);
    const std::size_t label = seed % 7;
    EXPECT_NEAR(cross_entropy(x, label).item(), oracle::cross_entropy(x.values(), label), 1e-12);
  }
  EXPECT_THROW(cross_entropy(Tensor::zeros({3}), 3), ValidationError);
}

TEST(Dropout, IdentityWithoutRngAndScaledMask) {
  Tensor x = random_tensor({1000}, 81);
  EXPECT_TRUE(oracle::bit_equal(dropout(x, 0.5, nullptr), x));
  std::mt19937_64 rng(1);
  Tensor y = dropout(x, 0.7, &rng);
  std::size_t kept = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (y[k] != 0.0) {
      ++kept;
      EXPECT_NEAR(y[k], x[k] / 0.3, 1e-15);
    }
  }
  EXPECT_NEAR(static_cast<double>(kept) / 1000.0, 0.3, 0.06);
}

TEST(Determinism, RepeatedForwardIsBitIdentical) {
  Tensor x = random_tensor({3, 6, 6}, 91), k = random_tensor({4, 3, 3, 3}, 92);
  auto run = [&] { return spatial_avg_pool(tanh(conv2d(mean_downsample2(x), k))); };
  EXPECT_TRUE(oracle::bit_equal(run(), run()));
}

// Every differentiable op passes the finite-difference check on 3 random instances.
namespace {

struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  std::function<Tensor(std::span<const Tensor>)> fn;
  double lo = -1.0, hi = 1.0;
};

Tensor weighted_sum(const Tensor& y, std::uint64_t seed) {
  return sum(mul(y, random_tensor(y.shape(), seed)));
}

}  // namespace

TEST(GradCheck, EveryOpOnThreeRandomInstances) {
  const std::vector<OpCase> cases = {
      {"add", {{2, 3}, {3}}, [](auto p) { return weighted_sum(add(p[0], p[1]), 1); }},
      {"sub", {{2, 3}, {2, 1}}, [](auto p) { return weighted_sum(sub(p[0], p[1]), 2); }},
      {"mul", {{2, 3}, {2, 3}}, [](auto p) { return weighted_sum(mul(p[0], p[1]), 3); }},
      {"scale", {{4}}, [](auto p) { return weighted_sum(scale(p[0], -1.7), 4); }},
      {"add_scalar", {{4}}, [](auto p) { return weighted_sum(add_scalar(p[0], 0.3), 5); }},
      {"sigmoid", {{5}}, [](auto p) { return weighted_sum(sigmoid(p[0]), 6); }},
      {"tanh", {{5}}, [](auto p) { return weighted_sum(vidrec::tanh(p[0]), 7); }},
      {"exp", {{5}}, [](auto p) { return weighted_sum(vidrec::exp(p[0]), 8); }},
      {"log", {{5}}, [](auto p) { return weighted_sum(vidrec::log(p[0]), 9); }, 0.5, 2.0},
      {"relu", {{6}}, [](auto p) { return weighted_sum(relu(p[0]), 10); }},
      {"matmul", {{2, 3}, {3, 4}}, [](auto p) { return weighted_sum(matmul(p[0], p[1]), 11); }},
      {"matvec", {{3, 4}, {4}}, [](auto p) { return weighted_sum(matvec(p[0], p[1]), 12); }},
      {"reshape", {{2, 3}}, [](auto p) { return weighted_sum(reshape(p[0], {3, 2}), 13); }},
      {"concat", {{2, 2}, {1, 2}}, [](auto p) { return weighted_sum(concat({p[0], p[1]}), 14); }},
      {"slice", {{4, 2}}, [](auto p) { return weighted_sum(slice(p[0], 1, 2), 15); }},
      {"select", {{3, 2}}, [](auto p) { return weighted_sum(select(p[0], 2), 16); }},
      {"stack", {{2, 2}, {2, 2}}, [](auto p) { return weighted_sum(stack(p), 17); }},
      {"transpose01", {{2, 3, 2}}, [](auto p) { return weighted_sum(transpose01(p[0]), 18); }},
      {"mean", {{3, 2}}, [](auto p) { return mul(mean(p[0]), mean(p[0])); }},
      {"mean_of", {{3}, {3}}, [](auto p) { return weighted_sum(mean_of(p), 19); }},
      {"conv2d", {{2, 4, 4}, {3, 2, 3, 3}}, [](auto p) { return weighted_sum(conv2d(p[0], p[1]), 20); }},
      {"conv2d_valid", {{2, 4, 4}, {1, 2, 3, 3}},
       [](auto p) { return weighted_sum(conv2d(p[0], p[1], false), 21); }},
      {"conv3d", {{2, 3, 3, 3}, {2, 2, 3, 3, 3}},
       [](auto p) { return weighted_sum(conv3d(p[0], p[1]), 22); }},
      {"softmax_spatial", {{1, 3, 4}}, [](auto p) { return weighted_sum(softmax_spatial(p[0]), 23); }},
      {"softmax_spatial_mass", {{1, 3, 3}},
       [](auto p) { return weighted_sum(softmax_spatial(p[0], 9.0), 24); }},
      {"spatial_avg_pool", {{2, 3, 3}}, [](auto p) { return weighted_sum(spatial_avg_pool(p[0]), 25); }},
      {"mean_downsample2", {{2, 4, 5}}, [](auto p) { return weighted_sum(mean_downsample2(p[0]), 26); }},
      {"cross_entropy", {{6}}, [](auto p) { return cross_entropy(p[0], 4); }},
  };
  for (const OpCase& c : cases) {
    for (std::uint64_t inst = 0; inst < 3; ++inst) {
      std::vector<NamedTensor> params;
      for (std::size_t k = 0; k < c.shapes.size(); ++k) {
        params.push_back({"p" + std::to_string(k),
                          random_tensor(c.shapes[k], 1000 * inst + 17 * k + 5, c.lo, c.hi)});
      }
      GradReport r = grad_check(c.fn, params);
      EXPECT_TRUE(r.passed()) << c.name << " instance " << inst << " max rel " << r.max_rel_error();
    }
  }
}

TEST(GradCheck, MatmulChainMatchesFiniteDifferencesTightly) {
  std::vector<NamedTensor> params{{"a", random_tensor({3, 4}, 301)},
                                  {"b", random_tensor({4, 2}, 302)},
                                  {"c", random_tensor({2, 3}, 303)}};
  GradReport r = grad_check(
      [](auto p) { return weighted_sum(matmul(matmul(p[0], p[1]), p[2]), 304); }, params, 1e-5,
      1e-6);
  EXPECT_TRUE(r.passed()) << r.max_rel_error();
}
