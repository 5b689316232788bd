#include <benchmark/benchmark.h>

#include "ggsa/ggsa.hpp"

namespace {

constexpr std::size_t kDim = 64;
constexpr std::size_t kHeads = 4;
constexpr std::size_t kGroup = 10;
constexpr std::size_t kWindow = 11;

struct Fixture {
  ggsa::AttentionParams<float> params;
  ggsa::Tensor<float> x;

  explicit Fixture(std::size_t length) {
    ggsa::Rng rng(1);
    params = ggsa::AttentionParams<float>::xavier(kDim, kHeads, {0, 0, kGroup / 2, kGroup / 2}, rng, "");
    for (ggsa::Parameter<float>* p : {&params.wq, &params.wk, &params.wv, &params.wo}) p->trainable = false;
    x = ggsa::uniform_tensor<float>(ggsa::Shape{kDim, length}, -1, 1, rng);
  }
};

void set_counters(benchmark::State& state, ggsa::AttentionKind kind) {
  const auto len = static_cast<std::size_t>(state.range(0));
  state.counters["flops_core"] = static_cast<double>(ggsa::flop_count(len, kDim, kHeads, kGroup, kind).core);
}

void BM_GlobalAttention(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  Fixture f(len);
  const float scale = static_cast<float>(ggsa::attention_scale(kDim, kHeads));
  for (auto _ : state) {
    ggsa::Tape<float> tape;
    auto out = ggsa::multi_head_attention(tape.constant(f.x), f.params, ggsa::all_valid(len), scale);
    benchmark::DoNotOptimize(out.output.value().data().data());
  }
  set_counters(state, ggsa::AttentionKind::kGlobal);
}

void BM_GroupAttention(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  Fixture f(len);
  const float scale = static_cast<float>(ggsa::attention_scale(kDim, kHeads));
  for (auto _ : state) {
    ggsa::Tape<float> tape;
    auto out = ggsa::group_multi_head_attention(tape.constant(f.x), f.params, kGroup, ggsa::all_valid(len), scale);
    benchmark::DoNotOptimize(out.value().data().data());
  }
  set_counters(state, ggsa::AttentionKind::kGroup);
}

void BM_LocalWindowAttention(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  Fixture f(len);
  const float scale = static_cast<float>(ggsa::attention_scale(kDim, kHeads));
  for (auto _ : state) {
    ggsa::Tape<float> tape;
    auto out = ggsa::local_window_attention(tape.constant(f.x), f.params, kWindow, ggsa::all_valid(len), scale);
    benchmark::DoNotOptimize(out.output.value().data().data());
  }
  set_counters(state, ggsa::AttentionKind::kLocal);
}

}  // namespace

BENCHMARK(BM_GlobalAttention)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GroupAttention)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LocalWindowAttention)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
