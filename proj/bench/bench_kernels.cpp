// Parallel vs serial window encoding, and the FFT against a direct DFT.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "statedet/kernels.hpp"
#include "statedet/spectral.hpp"

using namespace statedet;

namespace {

std::vector<Window> batch(std::size_t count) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<Window> out;
  for (std::size_t i = 0; i < count; ++i) {
    Matrix m(4, 128);
    for (auto& v : m.flat()) v = nd(rng);
    out.push_back({std::move(m), i * 50});
  }
  return out;
}

EncoderParams encoder() {
  EncoderConfig ec;
  ec.input_dims = 4;
  ec.seed = 3;
  return init_encoder(ec);
}

void BM_EncodeParallel(benchmark::State& state) {
  const auto p = encoder();
  const auto ws = batch(static_cast<std::size_t>(state.range(0)));
  const EmbeddingStage stage;
  for (auto _ : state) benchmark::DoNotOptimize(encode_windows(p, stage, ws));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = kernel_threads();
}

void BM_EncodeSerial(benchmark::State& state) {
  const auto p = encoder();
  const auto ws = batch(static_cast<std::size_t>(state.range(0)));
  const EmbeddingStage stage;
  for (auto _ : state) benchmark::DoNotOptimize(encode_windows_serial(p, stage, ws));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<Complex> signal(std::size_t n) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  std::vector<Complex> x(n);
  for (auto& c : x) c = {nd(rng), 0.0};
  return x;
}

void BM_Fft(benchmark::State& state) {
  const auto x = signal(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto y = x;
    fft(y);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_DirectDft(benchmark::State& state) {
  const auto x = signal(static_cast<std::size_t>(state.range(0)));
  const std::size_t n = x.size();
  std::vector<Complex> y(n);
  for (auto _ : state) {
    for (std::size_t k = 0; k < n; ++k) {
      Complex acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
        acc += x[t] * Complex(std::cos(ang), std::sin(ang));
      }
      y[k] = acc;
    }
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_EncodeParallel)->Arg(80)->Arg(400);
BENCHMARK(BM_EncodeSerial)->Arg(80)->Arg(400);
BENCHMARK(BM_Fft)->Arg(128)->Arg(480)->Arg(1024);
BENCHMARK(BM_DirectDft)->Arg(128)->Arg(480)->Arg(1024);

BENCHMARK_MAIN();
