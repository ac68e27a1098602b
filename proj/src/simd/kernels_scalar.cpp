#include "pathlab/simd/kernels.hpp"

namespace pathlab::simd::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  // four accumulators so the result is independent of autovectorization width
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double* x, std::size_t n, double s) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

void gemm_acc_at_b_scalar(const double* A, const double* B, std::size_t k, std::size_t d,
                          double* C, std::size_t j_lo, std::size_t j_hi) {
  // C[i][j] += sum_p A[p][i] * B[p][j], restricted to columns [j_lo, j_hi)
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = A + p * d;
    const double* bp = B + p * d;
    for (std::size_t i = 0; i < d; ++i) {
      const double a = ap[i];
      if (a == 0.0) continue;
      double* ci = C + i * d;
      for (std::size_t j = j_lo; j < j_hi; ++j) ci[j] += a * bp[j];
    }
  }
}

}  // namespace pathlab::simd::detail
