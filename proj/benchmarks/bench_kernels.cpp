#include <random>
#include <set>
#include <string>

#include <benchmark/benchmark.h>

#include "vidrec/cells.hpp"
#include "vidrec/models.hpp"
#include "vidrec/ops.hpp"
#include "vidrec/synthetic.hpp"
#include "vidrec/trainer.hpp"
#include "vidrec/tensor.hpp"

namespace {

using namespace vidrec;

Tensor random_tensor(Shape shape, std::uint64_t seed, double bound = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

// Args: channels in/out, spatial side.
void BM_Conv2dForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_tensor({c, hw, hw}, 1);
  const Tensor k = random_tensor({c, c, 3, 3}, 2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * 9 * hw * hw));
}
BENCHMARK(BM_Conv2dForward)->Args({8, 16})->Args({16, 8})->Args({16, 16})->Args({32, 16});

void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_tensor({c, hw, hw}, 1);
  const Tensor k = random_tensor({c, c, 3, 3}, 2, 0.3);
  for (auto _ : state) {
    Tape tape;
    const Tensor xl = tape.leaf(x), kl = tape.leaf(k);
    Gradients g = tape.backward(sum(conv2d(xl, kl)));
    benchmark::DoNotOptimize(g.of(kl));
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({8, 16})->Args({16, 8})->Args({16, 16});

LstaParams lsta(std::size_t c, std::size_t d) {
  return {random_tensor({1, c + d, 3, 3}, 3, 0.5), random_tensor({4 * d, c + d, 3, 3}, 4, 0.3),
          random_tensor({d, d, 1, 1}, 5, 0.5), gate_bias_vector(d, 1.0)};
}

// Args: input channels, memory, spatial side.
void BM_LstaStep(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto hw = static_cast<std::size_t>(state.range(2));
  const LstaParams p = lsta(c, d);
  const Tensor x = random_tensor({c, hw, hw}, 6);
  const LstaState s{random_tensor({d, hw, hw}, 7), random_tensor({d, hw, hw}, 8)};
  for (auto _ : state) benchmark::DoNotOptimize(lsta_step(x, s, p).state.h);
}
BENCHMARK(BM_LstaStep)->Args({16, 16, 4})->Args({16, 16, 8})->Args({32, 32, 4});

void BM_LstaSequenceBackward(benchmark::State& state) {
  const auto t_steps = static_cast<std::size_t>(state.range(0));
  const LstaParams p = lsta(16, 16);
  std::vector<Tensor> frames;
  for (std::size_t t = 0; t < t_steps; ++t) frames.push_back(random_tensor({16, 4, 4}, 10 + t));
  for (auto _ : state) {
    Tape tape;
    const LstaParams lp{tape.leaf(p.attn_kernel), tape.leaf(p.gate_kernel),
                        tape.leaf(p.pool_kernel), tape.leaf(p.gate_bias)};
    Gradients g = tape.backward(sum(run_lsta(frames, lp).c));
    benchmark::DoNotOptimize(g.of(lp.gate_kernel));
  }
}
BENCHMARK(BM_LstaSequenceBackward)->Arg(4)->Arg(8);

// One desk-scale training sample: forward, loss and backward.
void BM_ModelTrainSample(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  const LabelSpace space = desk_label_space(6, 8, 4, 1);
  ModelConfig mc;
  mc.kind = kind;
  const Model m = Model::create(mc, space, 2);
  SyntheticSpec spec;
  const Dataset d = make_synthetic(space, 1, spec, 3, "bench");
  std::vector<std::size_t> idx{0, 2, 4, 6, 8, 10, 12, 14};
  const ModelInput in = make_input(mc, d.samples[0].frames, idx);
  std::set<std::string> groups;
  for (const Parameter& p : m.params().items()) groups.insert(p.group);
  for (auto _ : state) {
    Tape tape;
    BoundParams bp = BoundParams::bind(m.params(), tape, groups);
    Gradients g = tape.backward(multi_task_loss(m.forward(bp, in), d.samples[0].labels));
    benchmark::DoNotOptimize(g.of(bp.leaves().front().second));
  }
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_ModelTrainSample)
    ->Arg(static_cast<int>(ModelKind::hf_tsn))
    ->Arg(static_cast<int>(ModelKind::lsta_gru))
    ->Arg(static_cast<int>(ModelKind::motion))
    ->Arg(static_cast<int>(ModelKind::two_stream))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
