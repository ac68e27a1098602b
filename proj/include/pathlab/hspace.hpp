#pragma once

#include <cstdint>
#include <vector>

#include "pathlab/transport.hpp"

namespace pathlab {

// Solution of the filtered derivative equation along the framed path:
//   v_k = W_k sum_{j<k} W_j^{-1} X(x_j) hdot_j dt.
// This is the conditional expectation of the H-derivative of the solution
// map given the path, computed as a deterministic ODE.
TangentPath filtered_derivative(const FramedPath& fp, const CameronMartinVector& h);

// Inner product of tangent paths with u(0) = 0 through the damped
// derivative: sum_j <Du1_j, Du2_j> dt.
double h1_inner(const FramedPath& fp, const TangentPath& u1, const TangentPath& u2);
double h1_norm(const FramedPath& fp, const TangentPath& u);

// Right inverse of filtered_derivative: hdot_j = Y(x_j) (Dv)_j with
// Y(x) = X(x)^T the inclusion. filtered_derivative(to_cameron_martin(v)) == v
// for tangent paths v with v_0 = 0, to machine precision.
CameronMartinVector to_cameron_martin(const FramedPath& fp, const TangentPath& v);

// Two-vector along a path: blocks V_{(s,t)} in T_{x_s} M (x) T_{x_t} M,
// stored for s <= t and extended by the symmetry V_{(t,s)} = -V_{(s,t)}^T.
struct TwoVectorOnPath {
  TimeGrid grid;
  int m = 0;
  Vec tri;  // triangle blocks, m*m each, pairs (s,t), s <= t, row-of-s order

  static std::size_t tri_pairs(int N) {
    return static_cast<std::size_t>(N + 1) * (N + 2) / 2;
  }
  std::size_t pair_index(int s, int t) const {
    // s <= t; offset of row s plus column (t - s)
    const std::size_t Np1 = static_cast<std::size_t>(grid.N) + 1;
    return (static_cast<std::size_t>(s) * (2 * Np1 - s + 1)) / 2 + (t - s);
  }
  double* block(int s, int t) { return tri.data() + pair_index(s, t) * m * m; }
  const double* block(int s, int t) const { return tri.data() + pair_index(s, t) * m * m; }
  // value with symmetry extension; returns an owned matrix
  Mat value(int s, int t) const;

  void allocate(const TimeGrid& g, int m_);
  double max_block_abs() const;
};

// Frobenius inner product over the (s,t) triangle with weight dt^2. The
// continuum greatest-cross-norm topology is not discretely computable; this
// grid surrogate is the fitting geometry used throughout.
double tv_inner(const TwoVectorOnPath& A, const TwoVectorOnPath& B);
double tv_norm(const TwoVectorOnPath& A);

// Wedge of two tangent paths: (u ^ w)_{(s,t)} = u_s w_t^T - w_s u_t^T.
TwoVectorOnPath wedge(const TangentPath& u, const TangentPath& w);

// Q(V)_{(s,t)} = (1 (x) W^s_t) W2_s sum_{r<s} W2_r^{-1} curv_op(V_{(r,r)}) dr
// for s <= t; vanishes on flat instances and at s = 0.
TwoVectorOnPath q_map(const FramedPath& fp, const TwoVectorOnPath& V);

// A basis element V + Q(V) for V the wedge of two filtered derivatives,
// kept in factored form: the two tangent paths and the per-node matrix
// Jt_s = [W2_s int_0^s W2^{-1} curv_op(V_rr) dr] W_s^{-T}, so that
// B(s,t) = u_s w_t^T - w_s u_t^T + Jt_s W_t^T.
struct H2BasisElement {
  TangentPath u, w;
  Vec jt;  // (N+1) x m x m
};

H2BasisElement make_h2_basis_element(const FramedPath& fp, const TangentPath& u,
                                     const TangentPath& w);
// materialize into a dense triangle buffer
void materialize(const FramedPath& fp, const H2BasisElement& b, TwoVectorOnPath& out);

// Cameron-Martin fitting basis: hat-function time profiles times coordinate
// directions. Profiles are hats on `hats` equal subintervals of [0,T].
std::vector<CameronMartinVector> cm_fit_basis(const TimeGrid& grid, int m, int hats);

// Basis {V_i + Q(V_i)} from wedges of filtered derivatives of cm_fit_basis,
// in deterministic pair order, truncated to basis_size.
std::vector<H2BasisElement> h2_fit_basis(const FramedPath& fp, int basis_size, int hats = 3);

struct H2FitResult {
  Vec coefficients;
  double residual = 0.0;       // relative L2 residual over the (s,t) grid
  double observed_norm = 0.0;
  double gram_condition = 0.0;
};

// Least-squares projection of `observed` onto span{V_i + Q(V_i)}.
H2FitResult h2_residual(const FramedPath& fp, const TwoVectorOnPath& observed, int basis_size,
                        int hats = 3);
H2FitResult h2_residual_with_basis(const FramedPath& fp, const TwoVectorOnPath& observed,
                                   const std::vector<H2BasisElement>& basis);

}  // namespace pathlab
