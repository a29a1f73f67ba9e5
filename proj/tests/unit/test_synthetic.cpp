#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "vidrec/errors.hpp"
#include "vidrec/synthetic.hpp"

using namespace vidrec;

namespace {

// Template oracles written from the generator's documented construction.
std::vector<double> verb_template(std::size_t v, std::size_t V, std::size_t F) {
  std::vector<double> out(F);
  for (std::size_t t = 0; t < F; ++t)
    out[t] = std::sin(std::numbers::pi * t / (F - 1.0) + std::numbers::pi * v / V);
  return out;
}

std::vector<double> noun_template(std::size_t n, std::size_t H, std::size_t W) {
  const std::size_t side = 3 + 2 * (n / 4);
  const double sign = (n / 2) % 2 == 0 ? 1.0 : -1.0;
  const std::size_t top = n % 2 == 0 ? 0 : H - side;
  std::vector<double> m(H * W, 0.0);
  for (std::size_t r = top; r < top + side; ++r)
    for (std::size_t c = 0; c < side; ++c) m[r * W + c] = m[r * W + W - 1 - c] = sign;
  return m;
}

struct OracleScore {
  double verb = 0.0, noun = 0.0;
};

// Nearest template in squared distance: channel 0 averaged per frame against
// the verb curves; channel 1 averaged over time against the noun maps.
OracleScore template_oracle(const Dataset& d, const SyntheticSpec& spec) {
  const std::size_t V = d.space.num_verbs(), N = d.space.num_nouns();
  const std::size_t HW = spec.height * spec.width;
  std::size_t verb_ok = 0, noun_ok = 0;
  for (const Sample& s : d.samples) {
    std::vector<double> curve(spec.frames, 0.0), map(HW, 0.0);
    for (std::size_t t = 0; t < spec.frames; ++t)
      for (std::size_t k = 0; k < HW; ++k) {
        curve[t] += s.frames[t][k] / HW;
        map[k] += s.frames[t][HW + k] / spec.frames;
      }
    auto nearest = [](std::size_t count, auto&& distance) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < count; ++c) {
        const double dd = distance(c);
        if (dd < bd) bd = dd, best = c;
      }
      return best;
    };
    const std::size_t v = nearest(V, [&](std::size_t c) {
      auto tpl = verb_template(c, V, spec.frames);
      double e = 0.0;
      for (std::size_t t = 0; t < spec.frames; ++t) e += (curve[t] - tpl[t]) * (curve[t] - tpl[t]);
      return e;
    });
    const std::size_t n = nearest(N, [&](std::size_t c) {
      auto tpl = noun_template(c, spec.height, spec.width);
      double e = 0.0;
      for (std::size_t k = 0; k < HW; ++k) e += (map[k] - tpl[k]) * (map[k] - tpl[k]);
      return e;
    });
    verb_ok += v == s.labels.verb;
    noun_ok += n == s.labels.noun;
  }
  return {static_cast<double>(verb_ok) / d.size(), static_cast<double>(noun_ok) / d.size()};
}

}  // namespace

TEST(Signatures, MatchTheDocumentedTemplates) {
  for (std::size_t v = 0; v < 6; ++v) {
    auto got = verb_signature(v, 6, 16);
    auto want = verb_template(v, 6, 16);
    for (std::size_t t = 0; t < 16; ++t) EXPECT_NEAR(got[t], want[t], 1e-15);
  }
  for (std::size_t n = 0; n < 12; ++n) {
    Tensor got = noun_signature(n, 16, 16);
    auto want = noun_template(n, 16, 16);
    EXPECT_EQ(got.values(), want) << n;
  }
  EXPECT_EQ(max_synthetic_nouns(16, 16), 12u);
  EXPECT_THROW(noun_signature(12, 16, 16), ValidationError);
  EXPECT_THROW(verb_signature(6, 6, 16), ValidationError);
}

TEST(Signatures, NounTemplatesAreFlipInvariantAndDistinct) {
  for (std::size_t n = 0; n < 12; ++n) {
    Tensor m = noun_signature(n, 16, 16);
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(m[r * 16 + c], m[r * 16 + 15 - c]);
    for (std::size_t o = 0; o < n; ++o) EXPECT_FALSE(oracle::bit_equal(m, noun_signature(o, 16, 16)));
  }
}

TEST(DeskLabelSpace, ShapeAndCoverage) {
  LabelSpace s = desk_label_space(6, 8, 4, 3);
  EXPECT_EQ(s.num_verbs(), 6u);
  EXPECT_EQ(s.num_nouns(), 8u);
  EXPECT_EQ(s.num_actions(), 12u);
  for (std::size_t n = 0; n < 8; ++n) EXPECT_TRUE(s.action_of(n % 6, n).has_value());
  EXPECT_EQ(desk_label_space(6, 8, 4, 3), s);
}

TEST(MakeSynthetic, NoiselessTemplatesAreClassifiedPerfectly) {
  LabelSpace s = desk_label_space(6, 8, 4, 3);
  SyntheticSpec spec;
  spec.noise_sigma = 0.0;
  Dataset d = make_synthetic(s, 100, spec, 9, "train");
  OracleScore r = template_oracle(d, spec);
  EXPECT_EQ(r.verb, 1.0);
  EXPECT_EQ(r.noun, 1.0);
}

TEST(MakeSynthetic, NoisyDataKeepsTheTemplateFloor) {
  LabelSpace s = desk_label_space(6, 8, 4, 3);
  SyntheticSpec spec;
  Dataset d = make_synthetic(s, 200, spec, 10, "test");
  OracleScore r = template_oracle(d, spec);
  EXPECT_GE(r.verb, 0.9);
  EXPECT_GE(r.noun, 0.9);
}

TEST(MakeSynthetic, LabelsIdsShapesAndDeterminism) {
  LabelSpace s = desk_label_space(6, 8, 4, 3);
  SyntheticSpec spec{.frames = 5, .channels = 3, .height = 16, .width = 16, .noise_sigma = 0.5};
  Dataset a = make_synthetic(s, 30, spec, 11, "train");
  Dataset b = make_synthetic(s, 30, spec, 11, "train");
  ASSERT_EQ(a.size(), 30u);
  EXPECT_EQ(a.samples[7].id, "train_00007");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Sample& x = a.samples[i];
    EXPECT_EQ(s.derive_pair(x.labels.action), (VerbNoun{x.labels.verb, x.labels.noun}));
    ASSERT_EQ(x.frames.size(), 5u);
    EXPECT_EQ(x.frames[0].shape(), (Shape{3, 16, 16}));
    for (std::size_t t = 0; t < 5; ++t) EXPECT_TRUE(oracle::bit_equal(x.frames[t], b.samples[i].frames[t]));
  }
  Dataset c = make_synthetic(s, 30, spec, 12, "train");
  EXPECT_FALSE(oracle::bit_equal(a.samples[0].frames[0], c.samples[0].frames[0]));
}

TEST(MakeSynthetic, SplitsAreDisjointStreams) {
  LabelSpace s = desk_label_space(6, 8, 4, 3);
  SyntheticSpec spec{.frames = 4, .channels = 2, .height = 16, .width = 16, .noise_sigma = 0.5};
  SyntheticSplits sp = make_synthetic_splits(s, 10, 10, spec, 5);
  EXPECT_EQ(sp.train.split, "train");
  EXPECT_EQ(sp.test.split, "test");
  for (const Sample& x : sp.train.samples)
    for (const Sample& y : sp.test.samples) EXPECT_FALSE(oracle::bit_equal(x.frames[0], y.frames[0]));
}

TEST(Dataset, SaveLoadRoundTrip) {
  auto dir = std::filesystem::temp_directory_path() / "vidrec_dataset_test";
  std::filesystem::remove_all(dir);
  LabelSpace s = desk_label_space(3, 4, 1, 3);
  SyntheticSpec spec{.frames = 3, .channels = 2, .height = 8, .width = 8, .noise_sigma = 0.5};
  Dataset d = make_synthetic(s, 6, spec, 1, "train");
  d.save(dir);
  Dataset e = Dataset::load(dir);
  EXPECT_EQ(e.split, "train");
  EXPECT_EQ(e.space, s);
  ASSERT_EQ(e.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(e.samples[i].id, d.samples[i].id);
    EXPECT_EQ(e.samples[i].labels.action, d.samples[i].labels.action);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_TRUE(oracle::bit_equal(e.samples[i].frames[t], d.samples[i].frames[t]));
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(Dataset::load(dir), ValidationError);
}

TEST(FlowStacks, ConsecutiveDifferencesInterleaved) {
  std::vector<Tensor> frames;
  for (std::uint64_t t = 0; t < 6; ++t) frames.push_back(oracle::random_tensor({3, 2, 2}, 40 + t));
  std::vector<std::size_t> idx{0, 4};
  auto stacks = flow_stacks(frames, idx, 2);
  ASSERT_EQ(stacks.size(), 2u);
  EXPECT_EQ(stacks[0].shape(), (Shape{4, 2, 2}));
  auto check = [&](const Tensor& st, std::size_t l, std::size_t j) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(st[(2 * l) * 4 + k], frames[j + 1][k] - frames[j][k]);
      EXPECT_EQ(st[(2 * l + 1) * 4 + k], frames[j + 1][4 + k] - frames[j][4 + k]);
    }
  };
  check(stacks[0], 0, 0);
  check(stacks[0], 1, 1);
  check(stacks[1], 0, 4);
  check(stacks[1], 1, 4);  // clamped at F − 2
}
