#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "printkind/kernels/gemm.hpp"
#include "printkind/kernels/layers.hpp"

using namespace printkind::kernels;

namespace {

std::vector<float> random_vector(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
    std::vector<float> c(n * n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            gemm(n, n, n, row_major(a.data(), n), row_major(b.data(), n), c.data(), n, false);
        } else {
            gemm_reference(n, n, n, row_major(a.data(), n), row_major(b.data(), n), c.data(), n, false);
        }
        benchmark::DoNotOptimize(c.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(2.0 * double(n * n * n), benchmark::Counter::kIsIterationInvariantRate,
                                                   benchmark::Counter::kIs1000);
}

// Args: in_channels, out_channels, spatial size, kernel; batch of 4 crops.
ConvGeometry geometry(const benchmark::State& state) {
    return ConvGeometry::make(4, static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(2)),
                              static_cast<std::size_t>(state.range(2)), static_cast<std::size_t>(state.range(1)),
                              static_cast<std::size_t>(state.range(3)), Padding::same);
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
    const auto g = geometry(state);
    const auto x = random_vector(g.input_size(), 3), w = random_vector(g.weight_size(), 4),
               bias = random_vector(g.out_channels, 5);
    std::vector<float> y(g.output_size());
    for (auto _ : state) {
        if constexpr (Parallel) {
            parallel::conv2d_forward<float>(g, x, w, bias, y);
        } else {
            reference::conv2d_forward<float>(g, x, w, bias, y);
        }
        benchmark::DoNotOptimize(y.data());
    }
    state.counters["GFLOP/s"] =
        benchmark::Counter(2.0 * double(g.output_size() * g.patch_size()), benchmark::Counter::kIsIterationInvariantRate,
                           benchmark::Counter::kIs1000);
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
    const auto g = geometry(state);
    const auto x = random_vector(g.input_size(), 3), w = random_vector(g.weight_size(), 4),
               dy = random_vector(g.output_size(), 6);
    std::vector<float> dx(g.input_size()), dw(g.weight_size()), db(g.out_channels);
    for (auto _ : state) {
        if constexpr (Parallel) {
            parallel::conv2d_backward<float>(g, x, w, dy, dx, dw, db);
        } else {
            reference::conv2d_backward<float>(g, x, w, dy, dx, dw, db);
        }
        benchmark::DoNotOptimize(dw.data());
    }
    state.counters["GFLOP/s"] =
        benchmark::Counter(4.0 * double(g.output_size() * g.patch_size()), benchmark::Counter::kIsIterationInvariantRate,
                           benchmark::Counter::kIs1000);
}

// The Big-Filters layer shapes: first conv (1->16, 128px, k=11) and third (32->64, 32px, k=6).
void conv_shapes(benchmark::internal::Benchmark* b) {
    b->Args({1, 16, 128, 11})->Args({16, 32, 64, 10})->Args({32, 64, 32, 6})->Unit(benchmark::kMillisecond);
}

} // namespace

BENCHMARK(BM_Gemm<false>)->Name("gemm/reference")->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gemm<true>)->Name("gemm/parallel")->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference")->Apply(conv_shapes);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/parallel")->Apply(conv_shapes);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference")->Apply(conv_shapes);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/parallel")->Apply(conv_shapes);

BENCHMARK_MAIN();
