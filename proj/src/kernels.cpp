#include "dtlife/kernels.hpp"

#include <atomic>
#include <cstdint>

namespace dtlife::kernels {

namespace {
std::atomic<std::size_t> g_threshold{1u << 16};

bool go_parallel(std::size_t flops) { return flops >= g_threshold.load(std::memory_order_relaxed); }
}  // namespace

void set_parallel_threshold(std::size_t flops) { g_threshold.store(flops); }
std::size_t parallel_threshold() { return g_threshold.load(); }

namespace serial {

void gemm_nt(const double* a, const double* b, const double* bias, double* c,
             std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
            c[i * m + j] = bias ? s + bias[j] : s;
        }
    }
}

void gemm_nn_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                 std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = c[i * m + j];
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * m + j];
            c[i * m + j] = s;
        }
    }
}

void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t k, std::size_t n,
                 std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = c[i * m + j];
            for (std::size_t p = 0; p < k; ++p) s += a[p * n + i] * b[p * m + j];
            c[i * m + j] = s;
        }
    }
}

void colsum_acc(const double* a, double* out, std::size_t n, std::size_t m) {
    for (std::size_t j = 0; j < m; ++j) {
        double s = out[j];
        for (std::size_t i = 0; i < n; ++i) s += a[i * m + j];
        out[j] = s;
    }
}

}  // namespace serial

// The parallel kernels reorder loops for contiguous access but keep the
// per-element accumulation sequence of the serial reference.

void gemm_nt(const double* a, const double* b, const double* bias, double* c,
             std::size_t n, std::size_t k, std::size_t m) {
    const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (go_parallel(n * k * m))
    for (std::int64_t ii = 0; ii < rows; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* ar = a + i * k;
        double* cr = c + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            const double* br = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
            cr[j] = bias ? s + bias[j] : s;
        }
    }
}

void gemm_nn_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                 std::size_t m) {
    const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (go_parallel(n * k * m))
    for (std::int64_t ii = 0; ii < rows; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* ar = a + i * k;
        double* cr = c + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ar[p];
            const double* br = b + p * m;
            for (std::size_t j = 0; j < m; ++j) cr[j] += av * br[j];
        }
    }
}

void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t k, std::size_t n,
                 std::size_t m) {
    const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (go_parallel(n * k * m))
    for (std::int64_t ii = 0; ii < rows; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* cr = c + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[p * n + i];
            const double* br = b + p * m;
            for (std::size_t j = 0; j < m; ++j) cr[j] += av * br[j];
        }
    }
}

void colsum_acc(const double* a, double* out, std::size_t n, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* ar = a + i * m;
        for (std::size_t j = 0; j < m; ++j) out[j] += ar[j];
    }
}

}  // namespace dtlife::kernels
