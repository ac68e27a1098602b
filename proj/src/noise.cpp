#include "pathlab/noise.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <thread>

#include "pathlab/rng.hpp"
#include "pathlab/simd/kernels.hpp"

namespace pathlab {

NoiseDecomposition decompose_noise(const FramedPath& fp, const DrivingPath& w) {
  const int m = fp.m, n = fp.n, N = fp.N();
  if (w.grid != fp.base.grid || w.m != m)
    throw std::invalid_argument("decompose_noise: driver does not match the framed path");
  NoiseDecomposition d;
  d.grid = w.grid;
  d.m = m;
  d.n = n;
  d.btilde.assign(static_cast<std::size_t>(N) * m, 0.0);
  d.beta.assign(static_cast<std::size_t>(N) * m, 0.0);
  d.btilde_coords.assign(static_cast<std::size_t>(N) * n, 0.0);
  d.beta_coords.assign(static_cast<std::size_t>(N) * (m - n), 0.0);
  const double* E0 = fp.E(0);
  const double* F0 = fp.F(0);
  for (int k = 0; k < N; ++k) {
    double back[8];
    fp.apply_tilde_inv(k, w.step(k), back);
    double* bt = d.btilde.data() + static_cast<std::size_t>(k) * m;
    double* be = d.beta.data() + static_cast<std::size_t>(k) * m;
    for (int j = 0; j < n; ++j) {
      double c = 0.0;
      for (int i = 0; i < m; ++i) c += E0[i * n + j] * back[i];
      d.btilde_coords[static_cast<std::size_t>(k) * n + j] = c;
      for (int i = 0; i < m; ++i) bt[i] += E0[i * n + j] * c;
    }
    for (int j = 0; j < m - n; ++j) {
      double c = 0.0;
      for (int i = 0; i < m; ++i) c += F0[i * (m - n) + j] * back[i];
      d.beta_coords[static_cast<std::size_t>(k) * (m - n) + j] = c;
      for (int i = 0; i < m; ++i) be[i] += F0[i * (m - n) + j] * c;
    }
  }
  return d;
}

DrivingPath recompose(const FramedPath& fp, const NoiseDecomposition& d, const Vec& beta_coords) {
  const int m = d.m, n = d.n, N = d.grid.N;
  if (static_cast<int>(beta_coords.size()) != N * (m - n))
    throw std::invalid_argument("recompose: redundant coordinates have wrong size");
  DrivingPath w;
  w.grid = d.grid;
  w.m = m;
  w.seed = 0;
  w.inc.assign(static_cast<std::size_t>(N) * m, 0.0);
  const double* F0 = fp.F(0);
  for (int k = 0; k < N; ++k) {
    double local[8];
    const double* bt = d.btilde_step(k);
    for (int i = 0; i < m; ++i) local[i] = bt[i];
    for (int j = 0; j < m - n; ++j) {
      const double c = beta_coords[static_cast<std::size_t>(k) * (m - n) + j];
      for (int i = 0; i < m; ++i) local[i] += F0[i * (m - n) + j] * c;
    }
    fp.apply_tilde(k, local, w.step(k));
  }
  return w;
}

namespace {

Vec fresh_beta_coords(const NoiseDecomposition& d, std::uint64_t seed,
                      std::uint64_t sample_index) {
  const int p = d.m - d.n, N = d.grid.N;
  Vec coords(static_cast<std::size_t>(N) * p, 0.0);
  CounterRng rng(seed);
  const double sd = std::sqrt(d.grid.dt());
  // each step owns a fixed block range so layouts cannot collide
  for (int k = 0; k < N; ++k) {
    rng.fill_normals(sample_index, static_cast<std::uint64_t>(k) * 4,
                     coords.data() + static_cast<std::size_t>(k) * p, p, sd);
  }
  return coords;
}

}  // namespace

DrivingPath resample_redundant(const FramedPath& fp, const NoiseDecomposition& d,
                               std::uint64_t seed, std::uint64_t sample_index) {
  DrivingPath w = recompose(fp, d, fresh_beta_coords(d, seed, sample_index));
  w.seed = seed;
  return w;
}

McStats conditional_expectation_mc(const FramedPath& fp, const NoiseDecomposition& d,
                                   const PathFunctional& functional, int samples,
                                   std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("conditional_expectation_mc: samples >= 2");
  McStats st;
  st.samples = samples;
  Vec mean, m2;
  // batched evaluation; Welford reduction in sample order
  const int batch = 64;
  std::vector<Vec> results(batch);
  int done = 0;
  while (done < samples) {
    const int nb = std::min(batch, samples - done);
    std::exception_ptr failures[2] = {nullptr, nullptr};
    auto worker = [&](int slot, int lo, int hi) {
      for (int i = lo; i < hi; ++i) {
        try {
          DrivingPath w = resample_redundant(fp, d, seed, static_cast<std::uint64_t>(done + i));
          results[i] = functional(w, fp);
        } catch (const std::exception& e) {
          failures[slot] = std::make_exception_ptr(std::runtime_error(
              "conditional_expectation_mc: functional failed at sample " +
              std::to_string(done + i) + ": " + e.what()));
          return;
        }
      }
    };
    if (nb >= 8) {
      std::thread th(worker, 0, 0, nb / 2);
      worker(1, nb / 2, nb);
      th.join();
    } else {
      worker(0, 0, nb);
    }
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);
    for (int i = 0; i < nb; ++i) {
      const Vec& y = results[i];
      if (mean.empty()) {
        mean.assign(y.size(), 0.0);
        m2.assign(y.size(), 0.0);
      }
      const double cnt = done + i + 1;
      for (std::size_t j = 0; j < y.size(); ++j) {
        const double delta = y[j] - mean[j];
        mean[j] += delta / cnt;
        m2[j] += delta * (y[j] - mean[j]);
      }
    }
    done += nb;
  }
  st.mean = mean;
  st.stderr_of_mean.assign(mean.size(), 0.0);
  for (std::size_t j = 0; j < mean.size(); ++j)
    st.stderr_of_mean[j] = std::sqrt(m2[j] / (samples - 1.0) / samples);
  return st;
}

McStats conditional_expectation_mc(std::shared_ptr<const EmbeddedManifold> M, const Vec& x0,
                                   const DrivingPath& w, const PathFunctional& functional,
                                   int samples, std::uint64_t seed) {
  ManifoldPath path = solve_gradient_sde(*M, x0, w);
  FramedPath fp = compute_transports(M, path);
  NoiseDecomposition d = decompose_noise(fp, w);
  return conditional_expectation_mc(fp, d, functional, samples, seed);
}

TwoVectorOnPath conditional_wedge_mean(const EmbeddedManifold& M, const FramedPath& fp,
                                       const NoiseDecomposition& d,
                                       const CameronMartinVector& h1,
                                       const CameronMartinVector& h2, int samples,
                                       std::uint64_t seed, double* tangency_defect) {
  const int m = fp.m, N = fp.N();
  const std::size_t D = static_cast<std::size_t>(N + 1) * m;
  Vec C(D * D, 0.0);
  const int batch = 64;
  Vec A(batch * D), B(batch * D);
  const Vec x0 = fp.base.node_vec(0);

  int done = 0;
  while (done < samples) {
    const int nb = std::min(batch, samples - done);
    auto worker = [&](int lo, int hi) {
      ManifoldPath path;
      TangentPath v1, v2;
      for (int i = lo; i < hi; ++i) {
        DrivingPath w = resample_redundant(fp, d, seed, static_cast<std::uint64_t>(done + i));
        solve_with_derivatives(M, x0, w, &h1, &h2, path, &v1, &v2);
        std::memcpy(A.data() + static_cast<std::size_t>(i) * D, v1.v.data(), D * sizeof(double));
        std::memcpy(B.data() + static_cast<std::size_t>(i) * D, v2.v.data(), D * sizeof(double));
      }
    };
    if (nb >= 8) {
      std::thread th(worker, 0, nb / 2);
      worker(nb / 2, nb);
      th.join();
    } else {
      worker(0, nb);
    }
    simd::gemm_acc_at_b(A.data(), B.data(), nb, D, C.data(), /*threads=*/2);
    done += nb;
  }

  // fold the full accumulator into the antisymmetrized triangle mean
  TwoVectorOnPath out;
  out.allocate(fp.base.grid, m);
  const double inv = 1.0 / samples;
  for (int s = 0; s <= N; ++s) {
    for (int t = s; t <= N; ++t) {
      double* blk = out.block(s, t);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const std::size_t row = static_cast<std::size_t>(s) * m + i;
          const std::size_t col = static_cast<std::size_t>(t) * m + j;
          blk[i * m + j] = (C[row * D + col] - C[col * D + row]) * inv;
        }
    }
  }

  // fiberwise tangency projection, recording the worst relative defect
  double scale = out.max_block_abs();
  double worst = 0.0;
  Mat Es(m, fp.n), Et(m, fp.n);
  for (int s = 0; s <= N; ++s) {
    Es = fp.E_mat(s);
    for (int t = s; t <= N; ++t) {
      Et = fp.E_mat(t);
      double* blk = out.block(s, t);
      // P = E_s (E_s^T blk E_t) E_t^T
      double tmp[16 * 16];
      for (int a = 0; a < fp.n; ++a)
        for (int b = 0; b < fp.n; ++b) {
          double sum = 0.0;
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) sum += Es(i, a) * blk[i * m + j] * Et(j, b);
          tmp[a * fp.n + b] = sum;
        }
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double sum = 0.0;
          for (int a = 0; a < fp.n; ++a)
            for (int b = 0; b < fp.n; ++b) sum += Es(i, a) * tmp[a * fp.n + b] * Et(j, b);
          const double defect = std::fabs(blk[i * m + j] - sum);
          if (scale > 0.0) worst = std::max(worst, defect / scale);
          blk[i * m + j] = sum;
        }
    }
  }
  if (tangency_defect) *tangency_defect = worst;
  return out;
}

}  // namespace pathlab
