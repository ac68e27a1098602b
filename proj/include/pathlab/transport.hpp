#pragma once

#include <memory>

#include "pathlab/geometry.hpp"
#include "pathlab/paths.hpp"

namespace pathlab {

// Per-path transport data. Frames are stored per node and the damped
// transports as coordinate matrices relative to the node frames:
//
//   //_k      = E_k E_0^T                      (Levi-Civita, zero on normals)
//   W_k       = E_k C_k E_0^T                  (damped transport)
//   W_k^{-1}  = E_0 Cinv_k E_k^T               (inverse on tangent fibers)
//   //~_k     = E_k E_0^T + F_k F_0^T          (kernel/complement transport)
//
// E_k is the orthonormal tangent frame transported by project-and-
// reorthonormalize, F_k the same on the normal bundle. C_k solves the
// damping equation dC/dt = -Ric C / 2 in frame coordinates (implicit
// midpoint); Cinv_k is updated by the inverse factor of the same step, so
// W W^{-1} = X(x_0) holds to machine precision. The two-vector transport
// W2 follows the same scheme on wedge coordinates with the Weitzenboeck
// curvature.
struct FramedPath {
  std::shared_ptr<const EmbeddedManifold> manifold;
  ManifoldPath base;
  int m = 0, n = 0, lam = 0;

  Vec frames;        // (N+1) x m x n
  Vec normal_frames; // (N+1) x m x (m-n)
  Vec damped;        // (N+1) x n x n        C_k
  Vec damped_inv;    // (N+1) x n x n        C_k^{-1}
  Vec damped2;       // (N+1) x lam x lam    C2_k
  Vec damped2_inv;   // (N+1) x lam x lam
  Vec curv_frame;    // (N+1) x lam x lam    curvature operator in node wedge frame

  int N() const { return base.grid.N; }
  double dt() const { return base.grid.dt(); }

  const double* E(int k) const { return frames.data() + static_cast<std::size_t>(k) * m * n; }
  const double* F(int k) const {
    return normal_frames.data() + static_cast<std::size_t>(k) * m * (m - n);
  }
  const double* C(int k) const { return damped.data() + static_cast<std::size_t>(k) * n * n; }
  const double* Cinv(int k) const {
    return damped_inv.data() + static_cast<std::size_t>(k) * n * n;
  }
  const double* C2(int k) const {
    return damped2.data() + static_cast<std::size_t>(k) * lam * lam;
  }
  const double* C2inv(int k) const {
    return damped2_inv.data() + static_cast<std::size_t>(k) * lam * lam;
  }
  const double* Rhat(int k) const {
    return curv_frame.data() + static_cast<std::size_t>(k) * lam * lam;
  }

  Mat E_mat(int k) const;
  Mat F_mat(int k) const;

  // m x m matrix forms of the transports (maps extended by zero on normals)
  Mat par(int k) const;        // //_k
  Mat tilde_par(int k) const;  // //~_k, orthogonal on R^m
  Mat W(int k) const;
  Mat Winv(int k) const;

  // appliers (ambient in, ambient out)
  void apply_par(int k, const double* u, double* out) const;
  void apply_par_inv(int k, const double* u, double* out) const;
  void apply_W(int k, const double* u, double* out) const;
  void apply_Winv(int k, const double* u, double* out) const;
  void apply_tilde(int k, const double* u, double* out) const;
  void apply_tilde_inv(int k, const double* u, double* out) const;

  // two-vector transports on antisymmetric ambient matrices at x_0 / x_k
  Mat apply_W2(int k, const Mat& G0) const;
  Mat apply_W2inv(int k, const Mat& Gk) const;
  Mat apply_par2(int k, const Mat& G0) const;
  // curvature operator at node k applied to an antisymmetric matrix at x_k
  Mat apply_curv_op(int k, const Mat& Gk) const;
};

FramedPath compute_transports(std::shared_ptr<const EmbeddedManifold> M,
                              const ManifoldPath& path);

// Damped integral: v_k = W_k sum_{j<k} W_j^{-1} u_j dt for a derivative
// sequence u_0..u_{N-1} given at left endpoints (tangent at x_j).
TangentPath damped_integral(const FramedPath& fp, const Vec& u /* N x m */);

// Exact discrete inverse of damped_integral: for a tangent path v with
// v_0 = 0 returns the derivative sequence (N x m, left endpoints) with
// damped_integral(dd_dt(v)) == v to machine precision.
Vec dd_dt(const FramedPath& fp, const TangentPath& v);

}  // namespace pathlab
