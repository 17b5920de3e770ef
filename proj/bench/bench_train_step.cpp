#include <benchmark/benchmark.h>

#include "rvla/robusttrain/train.hpp"

namespace {

using namespace rvla;

const sim::Dataset& data() {
  static const sim::Dataset d = sim::generate_dataset(40, 3);
  return d;
}

void BM_TrainStep(benchmark::State& state) {
  const auto mode = static_cast<robust::Mode>(state.range(0));
  const auto arm = unc::default_spec(static_cast<unc::Kind>(state.range(1)));
  flow::PolicyParams p = flow::init_params(1);
  std::vector<sim::Sample> batch;
  for (std::size_t i : robust::batch_indices(1, 0, 32, data().samples.size())) batch.push_back(data().samples[i]);
  int step = 0;
  for (auto _ : state) {
    p.zero_grad();
    auto o = robust::compute_step(p, batch, 1, step++, mode, &arm, robust::AdvConfig{}, true);
    benchmark::DoNotOptimize(o.total);
  }
  state.SetLabel(std::string(robust::mode_name(mode)) + "/" + unc::kind_name(arm.kind));
}

}  // namespace

BENCHMARK(BM_TrainStep)
    ->Args({0, static_cast<int>(unc::Kind::kDeadPixel)})
    ->Args({2, static_cast<int>(unc::Kind::kDeadPixel)})
    ->Args({3, static_cast<int>(unc::Kind::kDeadPixel)})
    ->Args({1, static_cast<int>(unc::Kind::kDeadPixel)})
    ->Args({1, static_cast<int>(unc::Kind::kLexical)})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
