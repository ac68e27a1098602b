#include "pathlab/simd/kernels.hpp"

#if PATHLAB_X86
#include <immintrin.h>
#if defined(_MSC_VER)
#include <intrin.h>
#endif
#endif

namespace pathlab::simd::detail {

#if PATHLAB_X86

bool cpu_has_avx2_fma() {
#if defined(__GNUC__) || defined(__clang__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

#if defined(__AVX2__) && defined(__FMA__)

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  __m256d s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), s3);
  }
  for (; i + 4 <= n; i += 4) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  }
  __m256d s = _mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, s);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double* x, std::size_t n, double s) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= s;
}

namespace {

// 4x8 register tile: rows i..i+3 of C, columns j..j+7, accumulated over the
// whole sample batch before touching memory again.
inline void tile_4x8(const double* A, const double* B, std::size_t k, std::size_t d,
                     double* C, std::size_t i, std::size_t j) {
  __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
  __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
  __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
  __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
  const double* ap = A + i;
  const double* bp = B + j;
  for (std::size_t p = 0; p < k; ++p, ap += d, bp += d) {
    const __m256d b0 = _mm256_loadu_pd(bp);
    const __m256d b1 = _mm256_loadu_pd(bp + 4);
    __m256d a = _mm256_set1_pd(ap[0]);
    c00 = _mm256_fmadd_pd(a, b0, c00);
    c01 = _mm256_fmadd_pd(a, b1, c01);
    a = _mm256_set1_pd(ap[1]);
    c10 = _mm256_fmadd_pd(a, b0, c10);
    c11 = _mm256_fmadd_pd(a, b1, c11);
    a = _mm256_set1_pd(ap[2]);
    c20 = _mm256_fmadd_pd(a, b0, c20);
    c21 = _mm256_fmadd_pd(a, b1, c21);
    a = _mm256_set1_pd(ap[3]);
    c30 = _mm256_fmadd_pd(a, b0, c30);
    c31 = _mm256_fmadd_pd(a, b1, c31);
  }
  double* c0 = C + i * d + j;
  double* c1 = c0 + d;
  double* c2 = c1 + d;
  double* c3 = c2 + d;
  _mm256_storeu_pd(c0, _mm256_add_pd(_mm256_loadu_pd(c0), c00));
  _mm256_storeu_pd(c0 + 4, _mm256_add_pd(_mm256_loadu_pd(c0 + 4), c01));
  _mm256_storeu_pd(c1, _mm256_add_pd(_mm256_loadu_pd(c1), c10));
  _mm256_storeu_pd(c1 + 4, _mm256_add_pd(_mm256_loadu_pd(c1 + 4), c11));
  _mm256_storeu_pd(c2, _mm256_add_pd(_mm256_loadu_pd(c2), c20));
  _mm256_storeu_pd(c2 + 4, _mm256_add_pd(_mm256_loadu_pd(c2 + 4), c21));
  _mm256_storeu_pd(c3, _mm256_add_pd(_mm256_loadu_pd(c3), c30));
  _mm256_storeu_pd(c3 + 4, _mm256_add_pd(_mm256_loadu_pd(c3 + 4), c31));
}

}  // namespace

void gemm_acc_at_b_avx2(const double* A, const double* B, std::size_t k, std::size_t d,
                        double* C, std::size_t j_lo, std::size_t j_hi) {
  const std::size_t i_full = d - d % 4;
  std::size_t j = j_lo;
  for (; j + 8 <= j_hi; j += 8) {
    for (std::size_t i = 0; i < i_full; i += 4) tile_4x8(A, B, k, d, C, i, j);
    for (std::size_t i = i_full; i < d; ++i) {
      double* ci = C + i * d;
      for (std::size_t p = 0; p < k; ++p) {
        const double a = A[p * d + i];
        const double* bp = B + p * d;
        for (std::size_t jj = j; jj < j + 8; ++jj) ci[jj] += a * bp[jj];
      }
    }
  }
  if (j < j_hi) {
    gemm_acc_at_b_scalar(A, B, k, d, C, j, j_hi);
  }
}

#else  // translation unit built without AVX2 support

double dot_avx2(const double* a, const double* b, std::size_t n) {
  return dot_scalar(a, b, n);
}
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  axpy_scalar(alpha, x, y, n);
}
void scale_avx2(double* x, std::size_t n, double s) { scale_scalar(x, n, s); }
void gemm_acc_at_b_avx2(const double* A, const double* B, std::size_t k, std::size_t d,
                        double* C, std::size_t j_lo, std::size_t j_hi) {
  gemm_acc_at_b_scalar(A, B, k, d, C, j_lo, j_hi);
}

#endif

#endif  // PATHLAB_X86

}  // namespace pathlab::simd::detail
