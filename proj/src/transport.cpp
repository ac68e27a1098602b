#include "pathlab/transport.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "pathlab/errors.hpp"

namespace pathlab {

namespace {

// out (m x p) = projector (m x m) times frame (m x p), then re-orthonormalize
// the columns. Throws if the frame loses rank.
void transport_frame(const Mat& P, const double* src, double* dst, int m, int p,
                     const char* what) {
  Mat W(m, p);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int q = 0; q < m; ++q) s += P(i, q) * src[q * p + j];
      W(i, j) = s;
    }
  if (gram_schmidt(W, 1e-6) != p) throw StepSizeError(what);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < p; ++j) dst[i * p + j] = W(i, j);
}

// implicit midpoint factor pair for dC/dt = -(1/2) R C on one step:
// C+ = (I + z)^{-1} (I - z) C  with z = dt (R_k + R_{k+1}) / 8, the midpoint
// average of R entering as dt R_mid / 4 on each side
void damping_step(const Mat& Rk, const Mat& Rk1, double dt, const double* C,
                  const double* Cinv, double* Cout, double* Cinvout, int n) {
  if (n == 0) return;
  Mat z = 0.125 * dt * (Rk + Rk1);
  Mat I = Mat::identity(n);
  Mat fwd = solve_lu(I + z, I - z);     // (I+z)^{-1}(I-z)
  Mat bwd = solve_lu(I - z, I + z);     // exact inverse factor
  Mat Cm(n, n), Cim(n, n);
  std::memcpy(Cm.data(), C, sizeof(double) * n * n);
  std::memcpy(Cim.data(), Cinv, sizeof(double) * n * n);
  Mat Cn = fwd * Cm;
  Mat Cin = Cim * bwd;
  std::memcpy(Cout, Cn.data(), sizeof(double) * n * n);
  std::memcpy(Cinvout, Cin.data(), sizeof(double) * n * n);
}

}  // namespace

FramedPath compute_transports(std::shared_ptr<const EmbeddedManifold> M,
                              const ManifoldPath& path) {
  const int m = M->ambient_dim();
  const int n = M->intrinsic_dim();
  const int lam = wedge_dim(n);
  const int N = path.grid.N;
  if (path.m != m) throw std::invalid_argument("path dimension does not match the manifold");

  FramedPath fp;
  fp.manifold = M;
  fp.base = path;
  fp.m = m;
  fp.n = n;
  fp.lam = lam;
  fp.frames.assign(static_cast<std::size_t>(N + 1) * m * n, 0.0);
  fp.normal_frames.assign(static_cast<std::size_t>(N + 1) * m * (m - n), 0.0);
  fp.damped.assign(static_cast<std::size_t>(N + 1) * n * n, 0.0);
  fp.damped_inv.assign(static_cast<std::size_t>(N + 1) * n * n, 0.0);
  fp.damped2.assign(static_cast<std::size_t>(N + 1) * lam * lam, 0.0);
  fp.damped2_inv.assign(static_cast<std::size_t>(N + 1) * lam * lam, 0.0);
  fp.curv_frame.assign(static_cast<std::size_t>(N + 1) * lam * lam, 0.0);

  // frames by project-and-reorthonormalize along the nodes
  {
    Mat E0 = M->tangent_frame(path.node_vec(0));
    Mat F0 = M->normal_frame(path.node_vec(0));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) fp.frames[i * n + j] = E0(i, j);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m - n; ++j) fp.normal_frames[i * (m - n) + j] = F0(i, j);
  }
  for (int k = 0; k < N; ++k) {
    Mat X(m, m);
    M->tangent_projector(path.node(k + 1), X.data());
    transport_frame(X, fp.E(k), fp.frames.data() + static_cast<std::size_t>(k + 1) * m * n, m, n,
                    "parallel transport: tangent frame collapsed; increase N");
    Mat K(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) K(i, j) = (i == j ? 1.0 : 0.0) - X(i, j);
    transport_frame(K, fp.F(k),
                    fp.normal_frames.data() + static_cast<std::size_t>(k + 1) * m * (m - n), m,
                    m - n, "kernel transport: normal frame collapsed; increase N");
  }

  // per-node curvature in the transported frames
  std::vector<Mat> ric_hat(N + 1), weitz_hat(N + 1);
  for (int k = 0; k <= N; ++k) {
    CurvaturePackage pkg = curvature_package(*M, path.node_vec(k));
    Mat Ek = fp.E_mat(k);
    // Ric in E_k coordinates
    Mat R(n, n);
    for (int a = 0; a < n; ++a) {
      Vec col(m);
      for (int i = 0; i < m; ++i) col[i] = Ek(i, a);
      Vec rc = pkg.apply_ric_ambient(col);
      for (int b = 0; b < n; ++b) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += Ek(i, b) * rc[i];
        R(b, a) = s;
      }
    }
    ric_hat[k] = R;
    // wedge-frame operators
    Mat Wz(lam, lam), Cv(lam, lam);
    for (int col = 0, a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b, ++col) {
        Mat G(m, m);
        for (int p = 0; p < m; ++p)
          for (int q = 0; q < m; ++q) G(p, q) = Ek(p, a) * Ek(q, b) - Ek(p, b) * Ek(q, a);
        Vec wz = wedge_coords(Ek, pkg.apply_wedge_op_ambient(pkg.weitzenbock2, G));
        Vec cv = wedge_coords(Ek, pkg.apply_wedge_op_ambient(pkg.curv_op, G));
        for (int r = 0; r < lam; ++r) { Wz(r, col) = wz[r]; Cv(r, col) = cv[r]; }
      }
    weitz_hat[k] = Wz;
    std::memcpy(fp.curv_frame.data() + static_cast<std::size_t>(k) * lam * lam, Cv.data(),
                sizeof(double) * lam * lam);
  }

  // damping recursions
  {
    Mat I = Mat::identity(n);
    std::memcpy(fp.damped.data(), I.data(), sizeof(double) * n * n);
    std::memcpy(fp.damped_inv.data(), I.data(), sizeof(double) * n * n);
    if (lam > 0) {
      Mat I2 = Mat::identity(lam);
      std::memcpy(fp.damped2.data(), I2.data(), sizeof(double) * lam * lam);
      std::memcpy(fp.damped2_inv.data(), I2.data(), sizeof(double) * lam * lam);
    }
  }
  const double dt = path.grid.dt();
  for (int k = 0; k < N; ++k) {
    damping_step(ric_hat[k], ric_hat[k + 1], dt, fp.C(k), fp.Cinv(k),
                 fp.damped.data() + static_cast<std::size_t>(k + 1) * n * n,
                 fp.damped_inv.data() + static_cast<std::size_t>(k + 1) * n * n, n);
    if (lam > 0) {
      damping_step(weitz_hat[k], weitz_hat[k + 1], dt, fp.C2(k), fp.C2inv(k),
                   fp.damped2.data() + static_cast<std::size_t>(k + 1) * lam * lam,
                   fp.damped2_inv.data() + static_cast<std::size_t>(k + 1) * lam * lam, lam);
    }
  }
  return fp;
}

Mat FramedPath::E_mat(int k) const {
  Mat E(m, n);
  std::memcpy(E.data(), this->E(k), sizeof(double) * m * n);
  return E;
}

Mat FramedPath::F_mat(int k) const {
  Mat F(m, m - n);
  std::memcpy(F.data(), this->F(k), sizeof(double) * m * (m - n));
  return F;
}

Mat FramedPath::par(int k) const { return E_mat(k) * E_mat(0).transposed(); }

Mat FramedPath::tilde_par(int k) const {
  return E_mat(k) * E_mat(0).transposed() + F_mat(k) * F_mat(0).transposed();
}

Mat FramedPath::W(int k) const {
  Mat C(n, n);
  std::memcpy(C.data(), this->C(k), sizeof(double) * n * n);
  return E_mat(k) * C * E_mat(0).transposed();
}

Mat FramedPath::Winv(int k) const {
  Mat Ci(n, n);
  std::memcpy(Ci.data(), this->Cinv(k), sizeof(double) * n * n);
  return E_mat(0) * Ci * E_mat(k).transposed();
}

void FramedPath::apply_par(int k, const double* u, double* out) const {
  double c[16];
  const double* E0 = E(0);
  const double* Ek = E(k);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += E0[i * n + j] * u[i];
    c[j] = s;
  }
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += Ek[i * n + j] * c[j];
    out[i] = s;
  }
}

void FramedPath::apply_par_inv(int k, const double* u, double* out) const {
  double c[16];
  const double* E0 = E(0);
  const double* Ek = E(k);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += Ek[i * n + j] * u[i];
    c[j] = s;
  }
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += E0[i * n + j] * c[j];
    out[i] = s;
  }
}

void FramedPath::apply_W(int k, const double* u, double* out) const {
  double c[16], oc[16];
  const double* E0 = E(0);
  const double* Ek = E(k);
  const double* Ck = C(k);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += E0[i * n + j] * u[i];
    c[j] = s;
  }
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += Ck[i * n + j] * c[j];
    oc[i] = s;
  }
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += Ek[i * n + j] * oc[j];
    out[i] = s;
  }
}

void FramedPath::apply_Winv(int k, const double* u, double* out) const {
  double c[16], oc[16];
  const double* E0 = E(0);
  const double* Ek = E(k);
  const double* Cik = Cinv(k);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += Ek[i * n + j] * u[i];
    c[j] = s;
  }
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += Cik[i * n + j] * c[j];
    oc[i] = s;
  }
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += E0[i * n + j] * oc[j];
    out[i] = s;
  }
}

void FramedPath::apply_tilde(int k, const double* u, double* out) const {
  double t[8];
  apply_par(k, u, out);
  const double* F0 = F(0);
  const double* Fk = F(k);
  const int p = m - n;
  double c[16];
  for (int j = 0; j < p; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += F0[i * p + j] * u[i];
    c[j] = s;
  }
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < p; ++j) s += Fk[i * p + j] * c[j];
    t[i] = s;
  }
  for (int i = 0; i < m; ++i) out[i] += t[i];
}

void FramedPath::apply_tilde_inv(int k, const double* u, double* out) const {
  double t[8];
  apply_par_inv(k, u, out);
  const double* F0 = F(0);
  const double* Fk = F(k);
  const int p = m - n;
  double c[16];
  for (int j = 0; j < p; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += Fk[i * p + j] * u[i];
    c[j] = s;
  }
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < p; ++j) s += F0[i * p + j] * c[j];
    t[i] = s;
  }
  for (int i = 0; i < m; ++i) out[i] += t[i];
}

Mat FramedPath::apply_W2(int k, const Mat& G0) const {
  if (lam == 0) return Mat(m, m);
  Vec c = wedge_coords(E_mat(0), G0);
  Mat C2k(lam, lam);
  std::memcpy(C2k.data(), C2(k), sizeof(double) * lam * lam);
  return wedge_from_coords(E_mat(k), C2k.apply(c));
}

Mat FramedPath::apply_W2inv(int k, const Mat& Gk) const {
  if (lam == 0) return Mat(m, m);
  Vec c = wedge_coords(E_mat(k), Gk);
  Mat C2ik(lam, lam);
  std::memcpy(C2ik.data(), C2inv(k), sizeof(double) * lam * lam);
  return wedge_from_coords(E_mat(0), C2ik.apply(c));
}

Mat FramedPath::apply_par2(int k, const Mat& G0) const {
  if (lam == 0) return Mat(m, m);
  Vec c = wedge_coords(E_mat(0), G0);
  return wedge_from_coords(E_mat(k), c);
}

Mat FramedPath::apply_curv_op(int k, const Mat& Gk) const {
  if (lam == 0) return Mat(m, m);
  Mat Ek = E_mat(k);
  Vec c = wedge_coords(Ek, Gk);
  Mat R(lam, lam);
  std::memcpy(R.data(), Rhat(k), sizeof(double) * lam * lam);
  return wedge_from_coords(Ek, R.apply(c));
}

TangentPath damped_integral(const FramedPath& fp, const Vec& u) {
  const int m = fp.m, n = fp.n, N = fp.N();
  if (static_cast<int>(u.size()) != N * m)
    throw std::invalid_argument("damped_integral: derivative sequence has wrong size");
  const double dt = fp.dt();
  TangentPath out;
  out.grid = fp.base.grid;
  out.m = m;
  out.v.assign(static_cast<std::size_t>(N + 1) * m, 0.0);
  Vec acc(n, 0.0);  // coordinates over E_0
  for (int k = 0; k < N; ++k) {
    // v_k = E_k C_k acc before adding step k; node 0 is zero
    // accumulate C_j^{-1} E_j^T u_j dt
    const double* Ej = fp.E(k);
    const double* Cij = fp.Cinv(k);
    double c[16], oc[16];
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += Ej[i * n + j] * u[static_cast<std::size_t>(k) * m + i];
      c[j] = s;
    }
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += Cij[i * n + j] * c[j];
      oc[i] = s;
    }
    for (int i = 0; i < n; ++i) acc[i] += oc[i] * dt;
    // write node k+1
    const double* Ek1 = fp.E(k + 1);
    const double* Ck1 = fp.C(k + 1);
    double wc[16];
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += Ck1[i * n + j] * acc[j];
      wc[i] = s;
    }
    double* vk1 = out.node(k + 1);
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += Ek1[i * n + j] * wc[j];
      vk1[i] = s;
    }
  }
  return out;
}

Vec dd_dt(const FramedPath& fp, const TangentPath& v) {
  const int m = fp.m, n = fp.n, N = fp.N();
  if (v.grid != fp.base.grid || v.m != m)
    throw std::invalid_argument("dd_dt: tangent path on a different grid");
  if (norm(v.node_vec(0)) > 1e-12)
    throw std::domain_error("dd_dt: tangent path must start at zero");
  const double dt = fp.dt();
  Vec out(static_cast<std::size_t>(N) * m, 0.0);
  Vec prev(n, 0.0);  // C_k^{-1} E_k^T v_k
  for (int k = 0; k < N; ++k) {
    const double* Ek1 = fp.E(k + 1);
    const double* Cik1 = fp.Cinv(k + 1);
    double c[16], cur[16];
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      const double* vk1 = v.node(k + 1);
      for (int i = 0; i < m; ++i) s += Ek1[i * n + j] * vk1[i];
      c[j] = s;
    }
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += Cik1[i * n + j] * c[j];
      cur[i] = s;
    }
    // u_k = E_k C_k (cur - prev) / dt
    double diff[16], wc[16];
    for (int i = 0; i < n; ++i) diff[i] = (cur[i] - prev[i]) / dt;
    const double* Ck = fp.C(k);
    const double* Ek = fp.E(k);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += Ck[i * n + j] * diff[j];
      wc[i] = s;
    }
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += Ek[i * n + j] * wc[j];
      out[static_cast<std::size_t>(k) * m + i] = s;
    }
    for (int i = 0; i < n; ++i) prev[i] = cur[i];
  }
  return out;
}

}  // namespace pathlab
