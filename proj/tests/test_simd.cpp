#include <doctest.h>

#include <cmath>
#include <vector>

#include "pathlab/rng.hpp"
#include "pathlab/simd/kernels.hpp"

using namespace pathlab;
namespace sk = pathlab::simd;

namespace {

std::vector<double> random_buf(std::size_t n, std::uint64_t stream) {
  std::vector<double> v(n);
  CounterRng rng(31337);
  rng.fill_normals(stream, 0, v.data(), n);
  return v;
}

// straightforward reference for C += A^T B
void gemm_ref(const std::vector<double>& A, const std::vector<double>& B, std::size_t k,
              std::size_t d, std::vector<double>& C) {
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) C[i * d + j] += A[p * d + i] * B[p * d + j];
}

struct BackendGuard {
  sk::Backend saved = sk::active_backend();
  ~BackendGuard() { sk::set_backend(saved); }
};

}  // namespace

TEST_CASE("kernel backends agree on dot, axpy and scale") {
  BackendGuard guard;
  for (std::size_t n : {1u, 7u, 64u, 1023u, 4096u}) {
    auto a = random_buf(n, 1);
    auto b = random_buf(n, 2);
    sk::set_backend(sk::Backend::Scalar);
    const double ds = sk::dot(a.data(), b.data(), n);
    auto ys = a;
    sk::axpy(0.37, b.data(), ys.data(), n);
    sk::scale(ys.data(), n, -1.25);
    if (!sk::backend_supported(sk::Backend::Avx2)) continue;
    sk::set_backend(sk::Backend::Avx2);
    const double dv = sk::dot(a.data(), b.data(), n);
    auto yv = a;
    sk::axpy(0.37, b.data(), yv.data(), n);
    sk::scale(yv.data(), n, -1.25);
    CHECK(std::fabs(ds - dv) <= 1e-12 * (1.0 + std::fabs(ds)));
    for (std::size_t i = 0; i < n; ++i) CHECK(ys[i] == doctest::Approx(yv[i]).epsilon(1e-13));
  }
}

TEST_CASE("gemm accumulation matches the reference on all backends") {
  BackendGuard guard;
  for (auto [k, d] : {std::pair<std::size_t, std::size_t>{5, 9},
                      {16, 24},
                      {33, 65},
                      {8, 128}}) {
    auto A = random_buf(k * d, 3);
    auto B = random_buf(k * d, 4);
    std::vector<double> Cref(d * d, 0.0);
    gemm_ref(A, B, k, d, Cref);

    for (auto backend : {sk::Backend::Scalar, sk::Backend::Avx2}) {
      if (!sk::backend_supported(backend)) continue;
      sk::set_backend(backend);
      std::vector<double> C(d * d, 0.0);
      sk::gemm_acc_at_b(A.data(), B.data(), k, d, C.data(), 1);
      double worst = 0;
      for (std::size_t i = 0; i < C.size(); ++i)
        worst = std::max(worst, std::fabs(C[i] - Cref[i]));
      CHECK(worst < 1e-11);
    }
  }
}

TEST_CASE("threaded gemm is bitwise identical to single-threaded") {
  BackendGuard guard;
  const std::size_t k = 32, d = 96;
  auto A = random_buf(k * d, 5);
  auto B = random_buf(k * d, 6);
  for (auto backend : {sk::Backend::Scalar, sk::Backend::Avx2}) {
    if (!sk::backend_supported(backend)) continue;
    sk::set_backend(backend);
    std::vector<double> C1(d * d, 0.0), C2(d * d, 0.0);
    sk::gemm_acc_at_b(A.data(), B.data(), k, d, C1.data(), 1);
    sk::gemm_acc_at_b(A.data(), B.data(), k, d, C2.data(), 2);
    CHECK(C1 == C2);
  }
}

TEST_CASE("gemm accumulates on top of existing values") {
  const std::size_t k = 4, d = 16;
  auto A = random_buf(k * d, 7);
  auto B = random_buf(k * d, 8);
  std::vector<double> C(d * d, 1.0), Cref(d * d, 1.0);
  gemm_ref(A, B, k, d, Cref);
  sk::gemm_acc_at_b(A.data(), B.data(), k, d, C.data(), 1);
  for (std::size_t i = 0; i < C.size(); ++i) CHECK(C[i] == doctest::Approx(Cref[i]));
}
