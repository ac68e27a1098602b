#pragma once

#include <cstddef>

// Runtime-dispatched arithmetic kernels for the dense inner loops: long dot
// products over path-grid buffers and the C += A^T B accumulation behind the
// Monte Carlo two-vector means. Scalar reference implementations define the
// semantics; the AVX2 variants are equivalence-tested against them.

namespace pathlab::simd {

enum class Backend { Scalar, Avx2 };

// Active backend. Resolved once from CPU capabilities; the environment
// variable PATHLAB_SIMD=scalar|avx2 forces a choice.
Backend active_backend();
const char* backend_name();
bool backend_supported(Backend b);
void set_backend(Backend b);  // throws std::runtime_error if unsupported

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, std::size_t n, double s);

// C (d x d, row-major) += A^T B for A, B of shape k x d (row-major).
// Deterministic for a fixed backend and thread count: the thread partition
// is a static split of column blocks.
void gemm_acc_at_b(const double* A, const double* B, std::size_t k, std::size_t d,
                   double* C, int threads = 1);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
void scale_scalar(double* x, std::size_t n, double s);
void gemm_acc_at_b_scalar(const double* A, const double* B, std::size_t k, std::size_t d,
                          double* C, std::size_t j_lo, std::size_t j_hi);

#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
#define PATHLAB_X86 1
#else
#define PATHLAB_X86 0
#endif

#if PATHLAB_X86
bool cpu_has_avx2_fma();
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void scale_avx2(double* x, std::size_t n, double s);
void gemm_acc_at_b_avx2(const double* A, const double* B, std::size_t k, std::size_t d,
                        double* C, std::size_t j_lo, std::size_t j_hi);
#endif
}  // namespace detail

}  // namespace pathlab::simd
