#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "avt/model.hpp"
#include "avt/ops.hpp"
#include "avt/trainer.hpp"

using namespace avt;

namespace {

template <typename T>
Tensor<T> filled(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(n(rng));
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = filled<float>(Shape{n, n}, 1), b = filled<float>(Shape{n, n}, 2);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b).data().data());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_HeadForward(benchmark::State& state) {
  auto cfg = ModelConfig::from_preset("fixed-features", 8, 16);
  AnticipativeModel<float> model(cfg, 3);
  const auto len = static_cast<std::size_t>(state.range(0));
  auto x = filled<float>(Shape{16, len, 16}, 4);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x).logits.data().data());
}
BENCHMARK(BM_HeadForward)->Arg(10)->Arg(32);

void BM_FrameForward(benchmark::State& state) {
  auto cfg = ModelConfig::from_preset("avt-tiny", 16, 0);
  AnticipativeModel<float> model(cfg, 5);
  auto x = filled<float>(Shape{4, 4, cfg.input_dim()}, 6);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x).logits.data().data());
}
BENCHMARK(BM_FrameForward);

void BM_TrainStep(benchmark::State& state) {
  auto cfg = ModelConfig::from_preset("fixed-features", 8, 16);
  AnticipativeModel<float> model(cfg, 7);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<AnticipationSample> samples(16);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& s = samples[i];
    s.id = i;
    s.dim = 16;
    s.inputs.resize(10 * 16);
    for (auto& v : s.inputs) v = static_cast<float>(n(rng));
    s.labels.frame_labels.assign(10, static_cast<int>(i % 8));
    s.labels.next_action = static_cast<int>((i + 1) % 8);
  }
  TrainOptions opts;
  opts.mode = static_cast<TrainingMode>(state.range(0));
  Trainer<float> trainer(model, opts);
  std::vector<std::size_t> batch(16);
  std::iota(batch.begin(), batch.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_step(samples, batch, 1e-3).total);
}
BENCHMARK(BM_TrainStep)->Arg(static_cast<int>(TrainingMode::Naive))->Arg(static_cast<int>(TrainingMode::Anticipative));

}  // namespace
BENCHMARK_MAIN();
