#pragma once

#include <cstddef>

// Dense kernels behind the autodiff engine. Every output element is reduced
// by exactly one thread in ascending index order, so the OpenMP kernels are
// bitwise identical to the serial reference regardless of thread count.

namespace dtlife::kernels {

/// C[n x m] = A[n x k] * B[m x k]^T (+ bias[m] when non-null)
void gemm_nt(const double* a, const double* b, const double* bias, double* c,
             std::size_t n, std::size_t k, std::size_t m);
/// C[n x m] += A[n x k] * B[k x m]
void gemm_nn_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                 std::size_t m);
/// C[n x m] += A[k x n]^T * B[k x m]
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t k, std::size_t n,
                 std::size_t m);
/// out[m] += column sums of A[n x m]
void colsum_acc(const double* a, double* out, std::size_t n, std::size_t m);

void set_parallel_threshold(std::size_t flops);
std::size_t parallel_threshold();

namespace serial {
void gemm_nt(const double* a, const double* b, const double* bias, double* c,
             std::size_t n, std::size_t k, std::size_t m);
void gemm_nn_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                 std::size_t m);
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t k, std::size_t n,
                 std::size_t m);
void colsum_acc(const double* a, double* out, std::size_t n, std::size_t m);
}  // namespace serial

}  // namespace dtlife::kernels
