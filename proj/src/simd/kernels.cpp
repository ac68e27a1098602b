#include "pathlab/simd/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <thread>
#include <vector>

namespace pathlab::simd {

namespace {

Backend resolve_initial() {
#if PATHLAB_X86
  bool avx2 = detail::cpu_has_avx2_fma();
#else
  bool avx2 = false;
#endif
  if (const char* env = std::getenv("PATHLAB_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2) return Backend::Avx2;
  }
  return avx2 ? Backend::Avx2 : Backend::Scalar;
}

Backend& backend_state() {
  static Backend b = resolve_initial();
  return b;
}

}  // namespace

Backend active_backend() { return backend_state(); }

const char* backend_name() {
  return backend_state() == Backend::Avx2 ? "avx2" : "scalar";
}

bool backend_supported(Backend b) {
  if (b == Backend::Scalar) return true;
#if PATHLAB_X86
  return detail::cpu_has_avx2_fma();
#else
  return false;
#endif
}

void set_backend(Backend b) {
  if (!backend_supported(b)) throw std::runtime_error("simd backend not supported on this cpu");
  backend_state() = b;
}

double dot(const double* a, const double* b, std::size_t n) {
#if PATHLAB_X86
  if (backend_state() == Backend::Avx2) return detail::dot_avx2(a, b, n);
#endif
  return detail::dot_scalar(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
#if PATHLAB_X86
  if (backend_state() == Backend::Avx2) return detail::axpy_avx2(alpha, x, y, n);
#endif
  detail::axpy_scalar(alpha, x, y, n);
}

void scale(double* x, std::size_t n, double s) {
#if PATHLAB_X86
  if (backend_state() == Backend::Avx2) return detail::scale_avx2(x, n, s);
#endif
  detail::scale_scalar(x, n, s);
}

void gemm_acc_at_b(const double* A, const double* B, std::size_t k, std::size_t d,
                   double* C, int threads) {
  const bool avx2 =
#if PATHLAB_X86
      backend_state() == Backend::Avx2;
#else
      false;
#endif
  auto run = [&](std::size_t j_lo, std::size_t j_hi) {
#if PATHLAB_X86
    if (avx2) {
      detail::gemm_acc_at_b_avx2(A, B, k, d, C, j_lo, j_hi);
      return;
    }
#endif
    detail::gemm_acc_at_b_scalar(A, B, k, d, C, j_lo, j_hi);
  };
  if (threads <= 1 || d < 64) {
    run(0, d);
    return;
  }
  // static column split; each thread owns a disjoint block of C, so the
  // result does not depend on scheduling
  const std::size_t nt = static_cast<std::size_t>(threads);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  const std::size_t chunk = ((d / nt) / 8) * 8 + 8;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = (t + 1 == nt) ? d : std::min(d, (t + 1) * chunk);
    if (lo >= hi) break;
    pool.emplace_back(run, lo, hi);
  }
  for (auto& th : pool) th.join();
}

}  // namespace pathlab::simd
