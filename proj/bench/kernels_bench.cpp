// OpenMP kernels vs. the serial reference, at shapes seen in training
// (engine FNN batch, autoencoder trunk) and a larger square case.
#include <benchmark/benchmark.h>

#include <vector>

#include "dtlife/kernels.hpp"
#include "dtlife/rng.hpp"

namespace k = dtlife::kernels;

namespace {

std::vector<double> filled(std::size_t n, std::uint64_t seed) {
    dtlife::Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <bool Parallel>
void BM_gemm_nt(benchmark::State& st) {
    const std::size_t n = st.range(0), kk = st.range(1), m = st.range(2);
    const auto a = filled(n * kk, 1), b = filled(m * kk, 2), bias = filled(m, 3);
    std::vector<double> c(n * m);
    k::set_parallel_threshold(Parallel ? 0 : std::size_t(-1));
    for (auto _ : st) {
        if constexpr (Parallel) k::gemm_nt(a.data(), b.data(), bias.data(), c.data(), n, kk, m);
        else k::serial::gemm_nt(a.data(), b.data(), bias.data(), c.data(), n, kk, m);
        benchmark::DoNotOptimize(c.data());
    }
    st.SetItemsProcessed(st.iterations() * 2 * n * kk * m);
}

template <bool Parallel>
void BM_gemm_nn_acc(benchmark::State& st) {
    const std::size_t n = st.range(0), kk = st.range(1), m = st.range(2);
    const auto a = filled(n * kk, 1), b = filled(kk * m, 2);
    std::vector<double> c(n * m);
    k::set_parallel_threshold(Parallel ? 0 : std::size_t(-1));
    for (auto _ : st) {
        if constexpr (Parallel) k::gemm_nn_acc(a.data(), b.data(), c.data(), n, kk, m);
        else k::serial::gemm_nn_acc(a.data(), b.data(), c.data(), n, kk, m);
        benchmark::DoNotOptimize(c.data());
    }
    st.SetItemsProcessed(st.iterations() * 2 * n * kk * m);
}

template <bool Parallel>
void BM_gemm_tn_acc(benchmark::State& st) {
    const std::size_t kk = st.range(0), n = st.range(1), m = st.range(2);
    const auto a = filled(kk * n, 1), b = filled(kk * m, 2);
    std::vector<double> c(n * m);
    k::set_parallel_threshold(Parallel ? 0 : std::size_t(-1));
    for (auto _ : st) {
        if constexpr (Parallel) k::gemm_tn_acc(a.data(), b.data(), c.data(), kk, n, m);
        else k::serial::gemm_tn_acc(a.data(), b.data(), c.data(), kk, n, m);
        benchmark::DoNotOptimize(c.data());
    }
    st.SetItemsProcessed(st.iterations() * 2 * n * kk * m);
}

template <bool Parallel>
void BM_colsum(benchmark::State& st) {
    const std::size_t n = st.range(0), m = st.range(1);
    const auto a = filled(n * m, 1);
    std::vector<double> out(m);
    k::set_parallel_threshold(Parallel ? 0 : std::size_t(-1));
    for (auto _ : st) {
        if constexpr (Parallel) k::colsum_acc(a.data(), out.data(), n, m);
        else k::serial::colsum_acc(a.data(), out.data(), n, m);
        benchmark::DoNotOptimize(out.data());
    }
    st.SetItemsProcessed(st.iterations() * n * m);
}

void gemm_shapes(benchmark::internal::Benchmark* b) {
    b->Args({100, 32, 32})->Args({40, 320, 160})->Args({512, 512, 512});
}

}  // namespace

BENCHMARK(BM_gemm_nt<false>)->Apply(gemm_shapes)->Name("gemm_nt/serial");
BENCHMARK(BM_gemm_nt<true>)->Apply(gemm_shapes)->Name("gemm_nt/openmp");
BENCHMARK(BM_gemm_nn_acc<false>)->Apply(gemm_shapes)->Name("gemm_nn_acc/serial");
BENCHMARK(BM_gemm_nn_acc<true>)->Apply(gemm_shapes)->Name("gemm_nn_acc/openmp");
BENCHMARK(BM_gemm_tn_acc<false>)->Apply(gemm_shapes)->Name("gemm_tn_acc/serial");
BENCHMARK(BM_gemm_tn_acc<true>)->Apply(gemm_shapes)->Name("gemm_tn_acc/openmp");
BENCHMARK(BM_colsum<false>)->Args({200, 6})->Args({4096, 512})->Name("colsum/serial");
BENCHMARK(BM_colsum<true>)->Args({200, 6})->Args({4096, 512})->Name("colsum/openmp");

BENCHMARK_MAIN();
