#include <benchmark/benchmark.h>

#include "lcsac/encoder.hpp"
#include "lcsac/envs.hpp"
#include "lcsac/nets.hpp"
#include "lcsac/replay.hpp"
#include "lcsac/rng.hpp"
#include "lcsac/sac.hpp"
#include "lcsac/tape.hpp"

using namespace lcsac;

static void BM_MatmulForwardBackward(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  Rng rng(1);
  Tensor a = Tensor::uniform({128, n}, rng, -1, 1);
  Tensor b = Tensor::uniform({n, n}, rng, -1, 1);
  for (auto _ : state) {
    Tape tape;
    Value va = tape.leaf(a);
    Value vb = tape.leaf(b);
    Value loss = tape.mean(tape.matmul(va, vb));
    Gradients g = tape.backward(loss);
    benchmark::DoNotOptimize(g.get(vb));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

static void BM_MlpForward(benchmark::State& state) {
  const std::int64_t width = state.range(0);
  Rng rng(2);
  MlpParams mlp = MlpParams::init({9, width, 1, 2}, rng);
  Tensor input = Tensor::uniform({128, 9}, rng, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_eval(mlp, input));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_MlpForward)->Arg(32)->Arg(64)->Arg(256);

static void BM_SacUpdate(benchmark::State& state) {
  const std::int64_t width = state.range(0);
  Rng rng(3);
  SacConfig config;
  config.batch = 128;
  CriticEnsemble critics = CriticEnsemble::init(2, 2, 5, width, rng);
  GaussianPolicyParams policy = GaussianPolicyParams::init({7, width, 2}, rng);
  AdamState policy_opt;
  RlBuffer buffer(10000, 5, 2, 2);
  for (int i = 0; i < 2000; ++i) {
    RlTuple t;
    t.c = {0.1, 0.2, 0.3, 0.4, 0.5};
    t.s = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    t.a = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    t.r = rng.uniform(-1, 0);
    t.s_next = t.s;
    t.c_next = t.c;
    t.done = i % 50 == 0;
    buffer.push(t);
  }
  Rng batch_rng(4), noise_rng(5);
  for (auto _ : state) {
    auto m = sac_update(config, critics, policy, policy_opt, buffer,
                        batch_rng, noise_rng);
    benchmark::DoNotOptimize(m);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SacUpdate)->Arg(32)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_EncoderUpdate(benchmark::State& state) {
  const std::int64_t hidden = state.range(0);
  Rng rng(6);
  EncoderConfig cfg;
  cfg.s_dim = 2;
  cfg.a_dim = 2;
  cfg.context_dim = 5;
  cfg.hidden = hidden;
  EncoderParams enc = EncoderParams::init(cfg, rng);
  AdamState opt;
  ContextBuffer buf(10000, 2, 2);
  for (int e = 0; e < 50; ++e)
    for (int i = 0; i < 40; ++i) {
      Transition t;
      t.s = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
      t.a = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
      t.r = rng.uniform(-1, 0);
      t.s_next = t.s;
      t.done = i == 39;
      buf.push(t);
    }
  Rng seg_rng(7);
  for (auto _ : state) {
    SegmentBatch batch = buf.sample_segments(64, 20, seg_rng);
    auto m = encoder_update(enc, opt, batch, 3e-4, 0.0, 0.0);
    benchmark::DoNotOptimize(m);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EncoderUpdate)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_EncoderStreamStep(benchmark::State& state) {
  Rng rng(8);
  EncoderConfig cfg;
  cfg.s_dim = 2;
  cfg.a_dim = 2;
  cfg.context_dim = 5;
  cfg.hidden = state.range(0);
  EncoderParams enc = EncoderParams::init(cfg, rng);
  EncoderStream stream(enc);
  const std::vector<double> s{0.1, -0.2};
  const std::vector<double> a{0.3, 0.4};
  for (auto _ : state) {
    benchmark::DoNotOptimize(stream.step(s, a, -0.5));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EncoderStreamStep)->Arg(32)->Arg(128);

static void BM_EnvStep(benchmark::State& state) {
  auto env = make_env("goal-reach");
  Rng rng(9);
  env->reset(rng);
  std::int64_t steps = 0;
  for (auto _ : state) {
    auto res = env->step(std::array{0.01, -0.01});
    benchmark::DoNotOptimize(res);
    if (res.done) env->reset(rng);
    ++steps;
  }
  state.SetItemsProcessed(steps);
}
BENCHMARK(BM_EnvStep);

BENCHMARK_MAIN();
