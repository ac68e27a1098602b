#include "pathlab/hspace.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "pathlab/errors.hpp"
#include "pathlab/simd/kernels.hpp"

namespace pathlab {

TangentPath filtered_derivative(const FramedPath& fp, const CameronMartinVector& h) {
  const int m = fp.m, N = fp.N();
  if (h.grid != fp.base.grid || h.m != m)
    throw std::invalid_argument("filtered_derivative: grid mismatch");
  // X(x_j) hdot_j at left endpoints, then the damped integral
  Vec u(static_cast<std::size_t>(N) * m, 0.0);
  for (int k = 0; k < N; ++k) {
    // tangential part via the frame: E_k E_k^T hdot
    const double* Ek = fp.E(k);
    const double* hd = h.step(k);
    double c[16];
    for (int j = 0; j < fp.n; ++j) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += Ek[i * fp.n + j] * hd[i];
      c[j] = s;
    }
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < fp.n; ++j) s += Ek[i * fp.n + j] * c[j];
      u[static_cast<std::size_t>(k) * m + i] = s;
    }
  }
  return damped_integral(fp, u);
}

double h1_inner(const FramedPath& fp, const TangentPath& u1, const TangentPath& u2) {
  Vec d1 = dd_dt(fp, u1);
  Vec d2 = dd_dt(fp, u2);
  return simd::dot(d1.data(), d2.data(), d1.size()) * fp.dt();
}

double h1_norm(const FramedPath& fp, const TangentPath& u) {
  return std::sqrt(h1_inner(fp, u, u));
}

CameronMartinVector to_cameron_martin(const FramedPath& fp, const TangentPath& v) {
  if (norm(v.node_vec(0)) > 1e-12)
    throw std::domain_error("to_cameron_martin: tangent path must start at zero");
  CameronMartinVector h;
  h.grid = fp.base.grid;
  h.m = fp.m;
  h.hdot = dd_dt(fp, v);  // Y(x) = X(x)^T is the inclusion; Dv is already tangent
  return h;
}

// ---------------------------------------------------------------------------
// two-vectors

void TwoVectorOnPath::allocate(const TimeGrid& g, int m_) {
  grid = g;
  m = m_;
  tri.assign(tri_pairs(g.N) * m_ * m_, 0.0);
}

Mat TwoVectorOnPath::value(int s, int t) const {
  Mat out(m, m);
  if (s <= t) {
    std::memcpy(out.data(), block(s, t), sizeof(double) * m * m);
  } else {
    const double* b = block(t, s);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out(i, j) = -b[j * m + i];
  }
  return out;
}

double TwoVectorOnPath::max_block_abs() const {
  double best = 0.0;
  for (double v : tri) best = std::max(best, std::fabs(v));
  return best;
}

double tv_inner(const TwoVectorOnPath& A, const TwoVectorOnPath& B) {
  if (A.grid != B.grid || A.m != B.m) throw std::invalid_argument("tv_inner: shape mismatch");
  const double w = A.grid.dt() * A.grid.dt();
  return w * simd::dot(A.tri.data(), B.tri.data(), A.tri.size());
}

double tv_norm(const TwoVectorOnPath& A) { return std::sqrt(tv_inner(A, A)); }

TwoVectorOnPath wedge(const TangentPath& u, const TangentPath& w) {
  if (u.grid != w.grid || u.m != w.m) throw std::invalid_argument("wedge: grid mismatch");
  TwoVectorOnPath V;
  V.allocate(u.grid, u.m);
  const int m = u.m, N = u.grid.N;
  for (int s = 0; s <= N; ++s) {
    const double* us = u.node(s);
    const double* ws = w.node(s);
    for (int t = s; t <= N; ++t) {
      const double* ut = u.node(t);
      const double* wt = w.node(t);
      double* blk = V.block(s, t);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) blk[i * m + j] = us[i] * wt[j] - ws[i] * ut[j];
    }
  }
  return V;
}

namespace {

// Jt_s = [W2_s sum_{r<s} W2_r^{-1} curv_op(V_rr) dr] (W_s^{-1})^T from the
// diagonal blocks of V. Output (N+1) m x m matrices.
Vec q_diagonal_factor(const FramedPath& fp, const TwoVectorOnPath& V) {
  const int m = fp.m, lam = fp.lam, N = fp.N();
  const double dt = fp.dt();
  Vec jt(static_cast<std::size_t>(N + 1) * m * m, 0.0);
  if (lam == 0) return jt;
  Vec acc(lam, 0.0);  // wedge coordinates at x_0 of int W2^{-1} curv(V_rr) dr
  for (int s = 0; s <= N; ++s) {
    if (s > 0) {
      const int r = s - 1;
      Mat Vrr(m, m);
      std::memcpy(Vrr.data(), V.block(r, r), sizeof(double) * m * m);
      Mat RV = fp.apply_curv_op(r, Vrr);
      Vec c = wedge_coords(fp.E_mat(r), RV);
      // W2_r^{-1} in coordinates
      const double* C2i = fp.C2inv(r);
      for (int i = 0; i < lam; ++i) {
        double sum = 0.0;
        for (int j = 0; j < lam; ++j) sum += C2i[i * lam + j] * c[j];
        acc[i] += sum * dt;
      }
    }
    // J_s = W2_s acc (ambient antisymmetric at x_s)
    const double* C2s = fp.C2(s);
    Vec oc(lam, 0.0);
    for (int i = 0; i < lam; ++i) {
      double sum = 0.0;
      for (int j = 0; j < lam; ++j) sum += C2s[i * lam + j] * acc[j];
      oc[i] = sum;
    }
    Mat J = wedge_from_coords(fp.E_mat(s), oc);
    // Jt_s = J W_s^{-T}; W_s^{-1} = E_0 Cinv_s E_s^T
    Mat Winv = fp.Winv(s);
    Mat Jt = J * Winv.transposed();
    std::memcpy(jt.data() + static_cast<std::size_t>(s) * m * m, Jt.data(),
                sizeof(double) * m * m);
  }
  return jt;
}

}  // namespace

TwoVectorOnPath q_map(const FramedPath& fp, const TwoVectorOnPath& V) {
  const int m = fp.m, N = fp.N();
  if (V.grid != fp.base.grid || V.m != m) throw std::invalid_argument("q_map: grid mismatch");
  TwoVectorOnPath Q;
  Q.allocate(V.grid, m);
  if (fp.lam == 0) return Q;
  Vec jt = q_diagonal_factor(fp, V);
  // Q(s,t) = Jt_s W_t^T
  std::vector<Mat> Wt(N + 1);
  for (int t = 0; t <= N; ++t) Wt[t] = fp.W(t).transposed();
  for (int s = 0; s <= N; ++s) {
    const double* Js = jt.data() + static_cast<std::size_t>(s) * m * m;
    for (int t = s; t <= N; ++t) {
      const Mat& W = Wt[t];
      double* blk = Q.block(s, t);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double sum = 0.0;
          for (int q = 0; q < m; ++q) sum += Js[i * m + q] * W(q, j);
          blk[i * m + j] = sum;
        }
    }
  }
  return Q;
}

H2BasisElement make_h2_basis_element(const FramedPath& fp, const TangentPath& u,
                                     const TangentPath& w) {
  H2BasisElement b;
  b.u = u;
  b.w = w;
  const int m = fp.m, N = fp.N();
  // diagonal of the wedge feeds the damped curvature integral
  TwoVectorOnPath Vdiag;
  Vdiag.allocate(u.grid, m);
  for (int s = 0; s <= N; ++s) {
    const double* us = u.node(s);
    const double* ws = w.node(s);
    double* blk = Vdiag.block(s, s);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) blk[i * m + j] = us[i] * ws[j] - ws[i] * us[j];
  }
  b.jt = q_diagonal_factor(fp, Vdiag);
  return b;
}

void materialize(const FramedPath& fp, const H2BasisElement& b, TwoVectorOnPath& out) {
  const int m = fp.m, N = fp.N();
  out.allocate(fp.base.grid, m);
  std::vector<Mat> Wt(N + 1);
  for (int t = 0; t <= N; ++t) Wt[t] = fp.W(t).transposed();
  for (int s = 0; s <= N; ++s) {
    const double* us = b.u.node(s);
    const double* ws = b.w.node(s);
    const double* Js = b.jt.data() + static_cast<std::size_t>(s) * m * m;
    for (int t = s; t <= N; ++t) {
      const double* ut = b.u.node(t);
      const double* wt = b.w.node(t);
      const Mat& W = Wt[t];
      double* blk = out.block(s, t);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          double sum = us[i] * wt[j] - ws[i] * ut[j];
          for (int q = 0; q < m; ++q) sum += Js[i * m + q] * W(q, j);
          blk[i * m + j] = sum;
        }
      }
    }
  }
}

std::vector<CameronMartinVector> cm_fit_basis(const TimeGrid& grid, int m, int hats) {
  // hat profiles phi_j centered at the interior knots of `hats` + 1 equal
  // subintervals, sampled at left endpoints; directions are ambient axes
  std::vector<CameronMartinVector> basis;
  const int N = grid.N;
  for (int j = 1; j <= hats; ++j) {
    const double center = grid.T * j / (hats + 1);
    const double width = grid.T / (hats + 1);
    for (int i = 0; i < m; ++i) {
      CameronMartinVector h;
      h.grid = grid;
      h.m = m;
      h.hdot.assign(static_cast<std::size_t>(N) * m, 0.0);
      for (int k = 0; k < N; ++k) {
        const double t = grid.t(k);
        const double w = std::max(0.0, 1.0 - std::fabs(t - center) / width);
        h.step(k)[i] = w;
      }
      basis.push_back(std::move(h));
    }
  }
  return basis;
}

std::vector<H2BasisElement> h2_fit_basis(const FramedPath& fp, int basis_size, int hats) {
  if (basis_size < 1) throw std::invalid_argument("h2_fit_basis: basis_size >= 1 required");
  auto cms = cm_fit_basis(fp.base.grid, fp.m, hats);
  std::vector<TangentPath> us;
  us.reserve(cms.size());
  for (const auto& h : cms) us.push_back(filtered_derivative(fp, h));
  std::vector<H2BasisElement> basis;
  for (std::size_t a = 0; a < us.size() && static_cast<int>(basis.size()) < basis_size; ++a) {
    for (std::size_t b = a + 1; b < us.size() && static_cast<int>(basis.size()) < basis_size; ++b) {
      basis.push_back(make_h2_basis_element(fp, us[a], us[b]));
    }
  }
  if (static_cast<int>(basis.size()) < basis_size)
    throw std::invalid_argument("h2_fit_basis: not enough wedge pairs for basis_size");
  return basis;
}

H2FitResult h2_residual_with_basis(const FramedPath& fp, const TwoVectorOnPath& observed,
                                   const std::vector<H2BasisElement>& basis) {
  const int nb = static_cast<int>(basis.size());
  Mat G(nb, nb);
  Vec rhs(nb, 0.0);
  TwoVectorOnPath Bi, Bj;
  for (int i = 0; i < nb; ++i) {
    materialize(fp, basis[i], Bi);
    rhs[i] = tv_inner(observed, Bi);
    for (int j = 0; j <= i; ++j) {
      materialize(fp, basis[j], Bj);
      const double g = tv_inner(Bi, Bj);
      G(i, j) = g;
      G(j, i) = g;
    }
  }
  Vec evals;
  Mat evecs;
  jacobi_eigen_sym(G, evals, evecs);
  const double emin = evals.front(), emax = evals.back();
  if (emin <= 0.0 || emax / emin > 1e10)
    throw DegenerateBasisError("h2_residual: fitting basis Gram matrix is degenerate");
  Mat L = cholesky(G);
  Vec coeff = solve_cholesky(L, rhs);

  H2FitResult res;
  res.coefficients = coeff;
  res.gram_condition = emax / emin;
  res.observed_norm = tv_norm(observed);
  // explicit residual; the quadratic-form shortcut cancels catastrophically
  // when the fit is near-exact
  TwoVectorOnPath resid = observed;
  for (int i = 0; i < nb; ++i) {
    materialize(fp, basis[i], Bi);
    simd::axpy(-coeff[i], Bi.tri.data(), resid.tri.data(), resid.tri.size());
  }
  res.residual = res.observed_norm > 0.0 ? tv_norm(resid) / res.observed_norm : 0.0;
  return res;
}

H2FitResult h2_residual(const FramedPath& fp, const TwoVectorOnPath& observed, int basis_size,
                        int hats) {
  return h2_residual_with_basis(fp, observed, h2_fit_basis(fp, basis_size, hats));
}

}  // namespace pathlab
