#include "pathlab/sde.hpp"

#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>

#include "pathlab/errors.hpp"
#include "pathlab/rng.hpp"

namespace pathlab {

void require_grid(const TimeGrid& g) {
  if (!(g.T > 0.0) || g.N < 2) throw std::invalid_argument("grid requires T > 0 and N >= 2");
}

Vec DrivingPath::cumulative(int k) const {
  Vec b(m, 0.0);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < m; ++i) b[i] += step(j)[i];
  return b;
}

double CameronMartinVector::h_norm_sq() const {
  double s = 0.0;
  for (double x : hdot) s += x * x;
  return s * grid.dt();
}

double cm_inner(const CameronMartinVector& a, const CameronMartinVector& b) {
  if (a.grid != b.grid || a.m != b.m) throw std::invalid_argument("cm_inner: grid mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.hdot.size(); ++i) s += a.hdot[i] * b.hdot[i];
  return s * a.grid.dt();
}

double TangentPath::sup_norm() const {
  double best = 0.0;
  for (int k = 0; k <= grid.N; ++k) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += node(k)[i] * node(k)[i];
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

void write_path_csv(const ManifoldPath& path, std::ostream& os) {
  os << "t";
  for (int i = 1; i <= path.m; ++i) os << ",x" << i;
  os << "\n";
  os.precision(17);
  for (int k = 0; k <= path.grid.N; ++k) {
    os << path.grid.t(k);
    for (int i = 0; i < path.m; ++i) os << "," << path.node(k)[i];
    os << "\n";
  }
}

DrivingPath coarsen(const DrivingPath& w) {
  if (w.grid.N % 2 != 0) throw std::invalid_argument("coarsen: N must be even");
  DrivingPath out;
  out.grid = TimeGrid{w.grid.T, w.grid.N / 2};
  out.m = w.m;
  out.seed = w.seed;
  out.inc.assign(static_cast<std::size_t>(out.grid.N) * w.m, 0.0);
  for (int k = 0; k < out.grid.N; ++k)
    for (int i = 0; i < w.m; ++i)
      out.step(k)[i] = w.step(2 * k)[i] + w.step(2 * k + 1)[i];
  return out;
}

DrivingPath sample_driving_path(int m, const TimeGrid& grid, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("sample_driving_path: m >= 1 required");
  require_grid(grid);
  DrivingPath w;
  w.grid = grid;
  w.m = m;
  w.seed = seed;
  w.inc.assign(static_cast<std::size_t>(grid.N) * m, 0.0);
  CounterRng rng(seed);
  rng.fill_normals(/*stream=*/0, /*block_base=*/0, w.inc.data(), w.inc.size(),
                   std::sqrt(grid.dt()));
  return w;
}

namespace {

constexpr int kMaxAmbient = 8;

inline void matvec(const double* A, const double* x, double* y, int m) {
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    const double* ai = A + i * m;
    for (int j = 0; j < m; ++j) s += ai[j] * x[j];
    y[i] = s;
  }
}

// One Heun step together with the exact differential of the step applied to
// `nch` tangent channels. Channel c carries a state v[c] (ambient vector,
// tangent at x) and an optional Cameron-Martin forcing hdot[c].
inline void heun_step(const EmbeddedManifold& M, int m, double dt, const double* dB,
                      double* x, int nch, double* const* v, const double* const* hdot) {
  double Xk[kMaxAmbient * kMaxAmbient];
  double Xs[kMaxAmbient * kMaxAmbient];
  double p0[kMaxAmbient], p1[kMaxAmbient], xstar[kMaxAmbient], y[kMaxAmbient];

  M.tangent_projector(x, Xk);
  matvec(Xk, dB, p0, m);
  for (int i = 0; i < m; ++i) xstar[i] = x[i] + p0[i];
  M.tangent_projector(xstar, Xs);
  matvec(Xs, dB, p1, m);
  for (int i = 0; i < m; ++i) y[i] = x[i] + 0.5 * (p0[i] + p1[i]);

  for (int c = 0; c < nch; ++c) {
    double* vc = v[c];
    double a[kMaxAmbient], b0[kMaxAmbient], b1[kMaxAmbient];
    double dxstar[kMaxAmbient], cc[kMaxAmbient], dy[kMaxAmbient];
    // d p0 = dX(x)[v] dB + X(x) hdot dt
    M.dX(x, vc, dB, a);
    if (hdot[c]) {
      matvec(Xk, hdot[c], b0, m);
      matvec(Xs, hdot[c], b1, m);
    } else {
      std::memset(b0, 0, m * sizeof(double));
      std::memset(b1, 0, m * sizeof(double));
    }
    for (int i = 0; i < m; ++i) dxstar[i] = vc[i] + a[i] + b0[i] * dt;
    // d p1 = dX(x*)[dx*] dB + X(x*) hdot dt
    M.dX(xstar, dxstar, dB, cc);
    for (int i = 0; i < m; ++i)
      dy[i] = vc[i] + 0.5 * (a[i] + b0[i] * dt + cc[i] + b1[i] * dt);
    M.dproject(y, dy, vc);
  }

  std::memcpy(x, y, m * sizeof(double));
  M.project(x);
}

void run_solver(const EmbeddedManifold& M, const Vec& x0, const DrivingPath& w,
                const CameronMartinVector* h1, const CameronMartinVector* h2,
                const Vec* v0, ManifoldPath& path, TangentPath* v1, TangentPath* v2) {
  const int m = M.ambient_dim();
  if (m > kMaxAmbient) throw std::invalid_argument("ambient dimension too large");
  if (w.m != m) throw std::invalid_argument("driver dimension does not match the manifold");
  require_grid(w.grid);
  for (const CameronMartinVector* h : {h1, h2}) {
    if (h && (h->grid != w.grid || h->m != m))
      throw std::invalid_argument("Cameron-Martin direction on a different grid");
  }
  const int N = w.grid.N;
  const double dt = w.grid.dt();

  path.grid = w.grid;
  path.m = m;
  path.nodes.assign(static_cast<std::size_t>(N + 1) * m, 0.0);

  double x[kMaxAmbient];
  std::memcpy(x, x0.data(), m * sizeof(double));
  M.project(x);  // x0 is validated by callers; retract exactly onto M

  double vbuf[2][kMaxAmbient];
  TangentPath* outs[2] = {v1, v2};
  const CameronMartinVector* hs[2] = {h1, h2};
  int nch = 0;
  for (int c = 0; c < 2; ++c) {
    if (!outs[c]) continue;
    outs[c]->grid = w.grid;
    outs[c]->m = m;
    outs[c]->v.assign(static_cast<std::size_t>(N + 1) * m, 0.0);
    if (v0 && c == 0) {
      Vec vt = M.apply_tangent(Vec(x, x + m), *v0);
      std::memcpy(vbuf[c], vt.data(), m * sizeof(double));
    } else {
      std::memset(vbuf[c], 0, m * sizeof(double));
    }
    std::memcpy(outs[c]->node(0), vbuf[c], m * sizeof(double));
    ++nch;
  }

  std::memcpy(path.node(0), x, m * sizeof(double));
  double* vptr[2] = {vbuf[0], vbuf[1]};
  const double* hptr[2] = {nullptr, nullptr};
  for (int k = 0; k < N; ++k) {
    int ch = 0;
    for (int c = 0; c < 2; ++c) {
      if (!outs[c]) continue;
      vptr[ch] = vbuf[c];
      hptr[ch] = hs[c] ? hs[c]->step(k) : nullptr;
      ++ch;
    }
    heun_step(M, m, dt, w.step(k), x, nch, vptr, hptr);
    std::memcpy(path.node(k + 1), x, m * sizeof(double));
    ch = 0;
    for (int c = 0; c < 2; ++c) {
      if (!outs[c]) continue;
      std::memcpy(outs[c]->node(k + 1), vbuf[c], m * sizeof(double));
      ++ch;
    }
  }
}

}  // namespace

ManifoldPath solve_gradient_sde(const EmbeddedManifold& M, const Vec& x0, const DrivingPath& w) {
  Vec x = M.require_on_manifold(x0);
  ManifoldPath path;
  run_solver(M, x, w, nullptr, nullptr, nullptr, path, nullptr, nullptr);
  return path;
}

TangentPath flow_and_ito_derivative(const EmbeddedManifold& M, const ManifoldPath& path,
                                    const DrivingPath& w, const CameronMartinVector* h,
                                    const Vec* v0) {
  if (path.grid != w.grid) throw std::invalid_argument("path and driver grids differ");
  ManifoldPath replay;
  TangentPath out;
  run_solver(M, path.node_vec(0), w, h, nullptr, v0, replay, &out, nullptr);
  return out;
}

TangentPath ito_map_derivative(const EmbeddedManifold& M, const ManifoldPath& path,
                               const DrivingPath& w, const CameronMartinVector& h) {
  return flow_and_ito_derivative(M, path, w, &h, nullptr);
}

TangentPath derivative_flow(const EmbeddedManifold& M, const ManifoldPath& path,
                            const DrivingPath& w, const Vec& v0) {
  return flow_and_ito_derivative(M, path, w, nullptr, &v0);
}

void solve_with_derivatives(const EmbeddedManifold& M, const Vec& x0, const DrivingPath& w,
                            const CameronMartinVector* h1, const CameronMartinVector* h2,
                            ManifoldPath& path, TangentPath* v1, TangentPath* v2) {
  run_solver(M, x0, w, h1, h2, nullptr, path, v1, v2);
}

}  // namespace pathlab
