// Serial reference kernels against the OpenMP variants on the encoder shapes.
#include <benchmark/benchmark.h>

#include <vector>

#include "rvla/common/random.hpp"
#include "rvla/gradcore/kernels.hpp"

namespace k = rvla::kernels;

namespace {

std::vector<double> filled(std::size_t n, std::uint64_t seed) {
  rvla::Stream rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

const k::ConvShape kConv1{.batch = 32, .channels = 3, .height = 32, .width = 32, .filters = 8, .stride = 2};

void BM_MatmulSerial(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  auto a = filled(n * n, 1), b = filled(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    k::serial::matmul(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
}

void BM_MatmulOmp(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  auto a = filled(n * n, 1), b = filled(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    k::omp::matmul(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
}

void BM_ConvSerial(benchmark::State& state) {
  const auto& s = kConv1;
  auto x = filled(s.batch * s.channels * s.height * s.width, 3);
  auto w = filled(s.filters * s.patch(), 4);
  std::vector<double> y(s.batch * s.filters * s.out_pixels());
  for (auto _ : state) {
    k::serial::conv3x3(x, w, y, s);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_ConvOmp(benchmark::State& state) {
  const auto& s = kConv1;
  auto x = filled(s.batch * s.channels * s.height * s.width, 3);
  auto w = filled(s.filters * s.patch(), 4);
  std::vector<double> y(s.batch * s.filters * s.out_pixels());
  std::vector<double> cols(s.batch * s.patch() * s.out_pixels());
  for (auto _ : state) {
    k::omp::conv3x3(x, w, y, cols, s);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_MatmulSerial)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_MatmulOmp)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_ConvSerial);
BENCHMARK(BM_ConvOmp);
BENCHMARK_MAIN();
