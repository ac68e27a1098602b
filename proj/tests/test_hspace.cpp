#include <doctest.h>

#include <cmath>

#include "pathlab/errors.hpp"
#include "pathlab/hspace.hpp"
#include "pathlab/rng.hpp"
#include "pathlab/sde.hpp"

using namespace pathlab;

namespace {

struct Setup {
  std::shared_ptr<const EmbeddedManifold> M;
  DrivingPath w;
  ManifoldPath path;
  FramedPath fp;
};

Setup make_setup(ManifoldKind kind, int dim, int N, std::uint64_t seed) {
  Setup s;
  s.M = construct_manifold(kind, dim);
  Vec x0(s.M->ambient_dim(), 0.0);
  x0[0] = 1.0;
  if (kind == ManifoldKind::CliffordTorus) x0 = Vec{std::sqrt(0.5), 0, std::sqrt(0.5), 0};
  s.w = sample_driving_path(s.M->ambient_dim(), TimeGrid{1.0, N}, seed);
  s.path = solve_gradient_sde(*s.M, x0, s.w);
  s.fp = compute_transports(s.M, s.path);
  return s;
}

CameronMartinVector random_h(const TimeGrid& g, int m, std::uint64_t seed) {
  CameronMartinVector h;
  h.grid = g;
  h.m = m;
  h.hdot.assign(static_cast<std::size_t>(g.N) * m, 0.0);
  CounterRng rng(seed);
  rng.fill_normals(0, 0, h.hdot.data(), h.hdot.size());
  return h;
}

}  // namespace

TEST_CASE("filtered derivative: zero direction, linear structure") {
  Setup s = make_setup(ManifoldKind::Sphere, 2, 300, 51);
  CameronMartinVector h0;
  h0.grid = s.w.grid;
  h0.m = 3;
  h0.hdot.assign(900, 0.0);
  CHECK(filtered_derivative(s.fp, h0).sup_norm() == 0.0);

  CameronMartinVector h1 = random_h(s.w.grid, 3, 52);
  CameronMartinVector h2 = random_h(s.w.grid, 3, 53);
  CameronMartinVector hc = h1;
  for (std::size_t i = 0; i < hc.hdot.size(); ++i)
    hc.hdot[i] = 1.5 * h1.hdot[i] - 2.0 * h2.hdot[i];
  TangentPath v1 = filtered_derivative(s.fp, h1);
  TangentPath v2 = filtered_derivative(s.fp, h2);
  TangentPath vc = filtered_derivative(s.fp, hc);
  double worst = 0;
  for (std::size_t i = 0; i < vc.v.size(); ++i)
    worst = std::max(worst, std::fabs(vc.v[i] - 1.5 * v1.v[i] + 2.0 * v2.v[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("circle filtered derivative reduces to undamped transport") {
  Setup s = make_setup(ManifoldKind::Circle, 1, 250, 55);
  CameronMartinVector h = random_h(s.w.grid, 2, 56);
  TangentPath v = filtered_derivative(s.fp, h);
  // Ric = 0: v_k = //_k sum_{j<k} //_j^{-1} X(x_j) hdot_j dt
  const double dt = s.w.grid.dt();
  Vec acc(2, 0.0);
  double worst = 0;
  for (int k = 0; k < s.fp.N(); ++k) {
    double back[8], fwd[8];
    Vec xh = s.M->apply_tangent(s.path.node_vec(k), Vec(h.step(k), h.step(k) + 2));
    s.fp.apply_par_inv(k, xh.data(), back);
    for (int i = 0; i < 2; ++i) acc[i] += back[i] * dt;
    s.fp.apply_par(k + 1, acc.data(), fwd);
    for (int i = 0; i < 2; ++i)
      worst = std::max(worst, std::fabs(fwd[i] - v.node(k + 1)[i]));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("cameron-martin isometry of the filtered derivative is machine-exact") {
  for (auto kind : {ManifoldKind::Sphere, ManifoldKind::CliffordTorus}) {
    Setup s = make_setup(kind, 2, 400, 57);
    const int m = s.M->ambient_dim();
    for (int trial = 0; trial < 25; ++trial) {
      CameronMartinVector h = random_h(s.w.grid, m, 58 + trial);
      TangentPath v = filtered_derivative(s.fp, h);
      double proj2 = 0;
      for (int k = 0; k < s.w.grid.N; ++k) {
        Vec xh = s.M->apply_tangent(s.path.node_vec(k), Vec(h.step(k), h.step(k) + m));
        proj2 += dot(xh, xh) * s.w.grid.dt();
      }
      CHECK(std::fabs(h1_norm(s.fp, v) - std::sqrt(proj2)) < 1e-10);
    }
  }
}

TEST_CASE("submersion: filtered_derivative o to_cameron_martin is the identity") {
  Setup s = make_setup(ManifoldKind::Sphere, 2, 350, 61);
  for (int trial = 0; trial < 25; ++trial) {
    CameronMartinVector h = random_h(s.w.grid, 3, 62 + trial);
    TangentPath v = filtered_derivative(s.fp, h);
    CameronMartinVector hb = to_cameron_martin(s.fp, v);
    TangentPath v2 = filtered_derivative(s.fp, hb);
    double worst = 0;
    for (std::size_t i = 0; i < v.v.size(); ++i)
      worst = std::max(worst, std::fabs(v.v[i] - v2.v[i]));
    CHECK(worst < 1e-12);
  }
  // to_cameron_martin o filtered_derivative projects hdot tangentially
  CameronMartinVector h = random_h(s.w.grid, 3, 99);
  CameronMartinVector hp = to_cameron_martin(s.fp, filtered_derivative(s.fp, h));
  double worst = 0;
  for (int k = 0; k < s.w.grid.N; ++k) {
    Vec xh = s.M->apply_tangent(s.path.node_vec(k), Vec(h.step(k), h.step(k) + 3));
    for (int i = 0; i < 3; ++i)
      worst = std::max(worst, std::fabs(hp.step(k)[i] - xh[i]));
  }
  CHECK(worst < 1e-10);
  // zero path maps to zero direction
  TangentPath z;
  z.grid = s.w.grid;
  z.m = 3;
  z.v.assign(static_cast<std::size_t>(s.w.grid.N + 1) * 3, 0.0);
  CHECK(max_abs(to_cameron_martin(s.fp, z).hdot) == 0.0);
}

TEST_CASE("adjoint identity between the H and H1 pairings") {
  Setup s = make_setup(ManifoldKind::Sphere, 2, 300, 63);
  for (int trial = 0; trial < 25; ++trial) {
    CameronMartinVector h = random_h(s.w.grid, 3, 64 + trial);
    CameronMartinVector h2 = random_h(s.w.grid, 3, 164 + trial);
    TangentPath v = filtered_derivative(s.fp, h2);
    const double lhs = h1_inner(s.fp, filtered_derivative(s.fp, h), v);
    const double rhs = cm_inner(h, to_cameron_martin(s.fp, v));
    CHECK(std::fabs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("h1 inner product is symmetric bilinear positive") {
  Setup s = make_setup(ManifoldKind::Sphere, 2, 200, 65);
  CameronMartinVector ha = random_h(s.w.grid, 3, 66);
  CameronMartinVector hb = random_h(s.w.grid, 3, 67);
  TangentPath a = filtered_derivative(s.fp, ha);
  TangentPath b = filtered_derivative(s.fp, hb);
  CHECK(h1_inner(s.fp, a, b) == doctest::Approx(h1_inner(s.fp, b, a)));
  CHECK(h1_inner(s.fp, a, a) > 0.0);
  TangentPath z;
  z.grid = s.w.grid;
  z.m = 3;
  z.v.assign(static_cast<std::size_t>(s.w.grid.N + 1) * 3, 0.0);
  CHECK(h1_inner(s.fp, z, z) == 0.0);
  TangentPath bad = z;
  bad.v[1] = 0.5;
  CHECK_THROWS_AS(h1_inner(s.fp, bad, a), std::domain_error);
}

TEST_CASE("two-vector storage honors the symmetry extension") {
  Setup s = make_setup(ManifoldKind::Sphere, 2, 60, 71);
  TangentPath u = filtered_derivative(s.fp, random_h(s.w.grid, 3, 72));
  TangentPath w = filtered_derivative(s.fp, random_h(s.w.grid, 3, 73));
  TwoVectorOnPath V = wedge(u, w);
  Mat a = V.value(10, 40);
  Mat b = V.value(40, 10);
  CHECK(max_abs(a + b.transposed()) < 1e-14);
  Mat Xs = s.M->tangent_projector_mat(s.path.node_vec(10));
  Mat Xt = s.M->tangent_projector_mat(s.path.node_vec(40));
  CHECK(max_abs(Xs * a * Xt - a) < 1e-8);
}

TEST_CASE("q_map vanishes on flat instances and at s = 0") {
  Setup s = make_setup(ManifoldKind::CliffordTorus, 2, 120, 75);
  TangentPath u = filtered_derivative(s.fp, random_h(s.w.grid, 4, 76));
  TangentPath w = filtered_derivative(s.fp, random_h(s.w.grid, 4, 77));
  TwoVectorOnPath V = wedge(u, w);
  TwoVectorOnPath Q = q_map(s.fp, V);
  CHECK(Q.max_block_abs() < 1e-10 * std::max(1.0, V.max_block_abs()));

  Setup ss = make_setup(ManifoldKind::Sphere, 2, 120, 78);
  TangentPath us = filtered_derivative(ss.fp, random_h(ss.w.grid, 3, 79));
  TangentPath ws = filtered_derivative(ss.fp, random_h(ss.w.grid, 3, 80));
  TwoVectorOnPath Vs = wedge(us, ws);
  TwoVectorOnPath Qs = q_map(ss.fp, Vs);
  CHECK(Qs.max_block_abs() > 1e-6);  // curvature genuinely contributes
  for (int t = 0; t <= 120; t += 20) CHECK(max_abs(Qs.value(0, t)) == 0.0);
}

TEST_CASE("q_map is linear") {
  Setup s = make_setup(ManifoldKind::Sphere, 2, 100, 81);
  TangentPath u0 = filtered_derivative(s.fp, random_h(s.w.grid, 3, 82));
  TangentPath u1 = filtered_derivative(s.fp, random_h(s.w.grid, 3, 83));
  TangentPath u2 = filtered_derivative(s.fp, random_h(s.w.grid, 3, 84));
  TwoVectorOnPath A = wedge(u0, u1);
  TwoVectorOnPath B = wedge(u1, u2);
  TwoVectorOnPath C = A;
  for (std::size_t i = 0; i < C.tri.size(); ++i) C.tri[i] = 0.7 * A.tri[i] + 1.9 * B.tri[i];
  TwoVectorOnPath QA = q_map(s.fp, A);
  TwoVectorOnPath QB = q_map(s.fp, B);
  TwoVectorOnPath QC = q_map(s.fp, C);
  double worst = 0;
  for (std::size_t i = 0; i < QC.tri.size(); ++i)
    worst = std::max(worst, std::fabs(QC.tri[i] - 0.7 * QA.tri[i] - 1.9 * QB.tri[i]));
  CHECK(worst < 1e-12 * std::max(1.0, QA.max_block_abs() + QB.max_block_abs()));
}

TEST_CASE("factored basis elements match wedge plus q_map") {
  Setup s = make_setup(ManifoldKind::Sphere, 2, 80, 85);
  TangentPath u = filtered_derivative(s.fp, random_h(s.w.grid, 3, 86));
  TangentPath w = filtered_derivative(s.fp, random_h(s.w.grid, 3, 87));
  TwoVectorOnPath V = wedge(u, w);
  TwoVectorOnPath Q = q_map(s.fp, V);
  H2BasisElement b = make_h2_basis_element(s.fp, u, w);
  TwoVectorOnPath B;
  materialize(s.fp, b, B);
  double worst = 0;
  for (std::size_t i = 0; i < B.tri.size(); ++i)
    worst = std::max(worst, std::fabs(B.tri[i] - V.tri[i] - Q.tri[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("exact membership is fitted with negligible residual") {
  Setup s = make_setup(ManifoldKind::Sphere, 2, 100, 88);
  auto basis = h2_fit_basis(s.fp, 6, 2);
  TwoVectorOnPath B0, B3;
  materialize(s.fp, basis[0], B0);
  materialize(s.fp, basis[3], B3);
  TwoVectorOnPath obs = B0;
  for (std::size_t i = 0; i < obs.tri.size(); ++i) obs.tri[i] = B0.tri[i] - 0.4 * B3.tri[i];
  H2FitResult fit = h2_residual_with_basis(s.fp, obs, basis);
  CHECK(fit.residual < 1e-10);
  CHECK(fit.coefficients[0] == doctest::Approx(1.0));
  CHECK(fit.coefficients[3] == doctest::Approx(-0.4));
}

TEST_CASE("flat wedge is fitted exactly (q = 0)") {
  Setup s = make_setup(ManifoldKind::CliffordTorus, 2, 100, 89);
  auto cms = cm_fit_basis(s.w.grid, 4, 2);
  TangentPath u = filtered_derivative(s.fp, cms[0]);
  TangentPath w = filtered_derivative(s.fp, cms[1]);
  TwoVectorOnPath obs = wedge(u, w);
  H2FitResult fit = h2_residual(s.fp, obs, 6, 2);
  CHECK(fit.residual < 1e-10);
}

TEST_CASE("degenerate fitting bases are rejected") {
  Setup s = make_setup(ManifoldKind::Sphere, 2, 60, 90);
  TangentPath u = filtered_derivative(s.fp, random_h(s.w.grid, 3, 91));
  TangentPath w = filtered_derivative(s.fp, random_h(s.w.grid, 3, 92));
  std::vector<H2BasisElement> basis;
  basis.push_back(make_h2_basis_element(s.fp, u, w));
  basis.push_back(make_h2_basis_element(s.fp, u, w));  // duplicate
  TwoVectorOnPath obs = wedge(u, w);
  CHECK_THROWS_AS(h2_residual_with_basis(s.fp, obs, basis), DegenerateBasisError);
}
