#include <doctest.h>

#include <cmath>

#include "pathlab/cylinder.hpp"
#include "pathlab/rng.hpp"

using namespace pathlab;

namespace {

struct Setup {
  std::shared_ptr<const EmbeddedManifold> M;
  DrivingPath w;
  ManifoldPath path;
  FramedPath fp;
};

Setup make_setup(int N, std::uint64_t seed) {
  Setup s;
  s.M = construct_manifold(ManifoldKind::Sphere, 2);
  s.w = sample_driving_path(3, TimeGrid{1.0, N}, seed);
  s.path = solve_gradient_sde(*s.M, Vec{1.0, 0.0, 0.0}, s.w);
  s.fp = compute_transports(s.M, s.path);
  return s;
}

CylinderFunction linear_fn(int t_idx, const Vec& c) {
  CylinderFunction f;
  f.times = {t_idx};
  CylMonomial mono;
  mono.factors.push_back({0, c});
  f.terms.push_back(mono);
  return f;
}

CylinderFunction product_fn(int t1, int t2, const Vec& c, const Vec& d) {
  CylinderFunction f;
  f.times = {t1, t2};
  CylMonomial mono;
  mono.factors.push_back({0, c});
  mono.factors.push_back({1, d});
  f.terms.push_back(mono);
  return f;
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

CylinderVectorField field(const Vec& c, const Vec& e, const Vec& d, int N) {
  CylinderVectorField V;
  V.c = c;
  V.e = e;
  V.d = d;
  V.psi.assign(N + 1, 1.0);
  return V;
}

}  // namespace

TEST_CASE("monomial evaluation and gradients") {
  CylinderFunction f = product_fn(2, 5, Vec{1.0, 0.0, 0.0}, Vec{0.0, 2.0, 0.0});
  std::vector<Vec> pts = {Vec{0.5, 0.1, 0.2}, Vec{0.3, 0.7, -0.1}};
  CHECK(f.eval(pts) == doctest::Approx(0.5 * 1.4));
  Vec g0 = f.grad(0, pts, 3);
  CHECK(g0[0] == doctest::Approx(1.4));
  CHECK(g0[1] == doctest::Approx(0.0));
  Vec g1 = f.grad(1, pts, 3);
  CHECK(g1[1] == doctest::Approx(1.0));
}

TEST_CASE("d_function is the exact differential") {
  Setup s = make_setup(64, 301);
  CylinderFunction f = product_fn(10, 50, Vec{0.2, -1.0, 0.4}, Vec{0.9, 0.3, -0.5});
  CylinderOneForm df = d_function(f);
  // pair df with a tangent path and compare against a finite difference of f
  // along a curve of paths
  TangentPath v;
  v.grid = s.w.grid;
  v.m = 3;
  v.v.assign(static_cast<std::size_t>(s.w.grid.N + 1) * 3, 0.0);
  CounterRng rng(302);
  for (int k = 0; k <= s.w.grid.N; ++k) {
    Vec t = s.M->random_tangent(s.path.node_vec(k), rng, 1, k);
    for (int i = 0; i < 3; ++i) v.node(k)[i] = t[i];
  }
  const double a = df.apply(s.path, v);
  auto pts = f.values_at(s.path);
  const double delta = 1e-6;
  std::vector<Vec> pp = pts, pm = pts;
  for (int slot = 0; slot < 2; ++slot)
    for (int i = 0; i < 3; ++i) {
      pp[slot][i] += delta * v.node(f.times[slot])[i];
      pm[slot][i] -= delta * v.node(f.times[slot])[i];
    }
  const double fd = (f.eval(pp) - f.eval(pm)) / (2 * delta);
  CHECK(a == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("one-form action sees only tangential coefficient parts") {
  Setup s = make_setup(64, 303);
  const int t = 20;
  CylinderOneForm phi;
  phi.times = {t};
  OneFormTerm term;
  term.leg = 0;
  term.c = Vec{0.3, 0.4, -0.2};
  phi.terms.push_back(term);
  // add a normal component at the evaluation point
  CylinderOneForm phi2 = phi;
  Vec normal = s.M->apply_normal(s.path.node_vec(t), Vec{1.0, 1.0, 1.0});
  for (int i = 0; i < 3; ++i) phi2.terms[0].c[i] += 2.0 * normal[i];
  TangentPath v;
  v.grid = s.w.grid;
  v.m = 3;
  v.v.assign(static_cast<std::size_t>(s.w.grid.N + 1) * 3, 0.0);
  CounterRng rng(304);
  Vec tv = s.M->random_tangent(s.path.node_vec(t), rng, 1, 0);
  for (int i = 0; i < 3; ++i) v.node(t)[i] = tv[i];
  CHECK(phi.apply(s.path, v) == doctest::Approx(phi2.apply(s.path, v)));
}

TEST_CASE("exterior derivative of exact forms vanishes") {
  Setup s = make_setup(96, 305);
  CounterRng rng(306);
  double worst = 0;
  for (int trial = 0; trial < 12; ++trial) {
    double raw[8];
    rng.fill_normals(1, trial * 8, raw, 8);
    CylinderFunction f =
        product_fn(5 + trial, 50 + trial, Vec{raw[0], raw[1], raw[2]}, Vec{raw[3], raw[4], raw[5]});
    CylinderOneForm df = d_function(f);
    CylinderVectorField V1 = field(Vec{raw[6], raw[7], raw[0]}, Vec{0.5 * raw[1], 0, raw[2]},
                                   Vec{raw[3], raw[4], 0.0}, s.w.grid.N);
    CylinderVectorField V2 = field(Vec{raw[2], -raw[5], raw[1]}, Vec{raw[0], raw[4], 0},
                                   Vec{0.0, raw[6], raw[7]}, s.w.grid.N);
    worst = std::max(worst, std::fabs(d_oneform_fields(*s.M, df, s.path, V1, V2)));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("palais formula is antisymmetric and matches the tensorial evaluator") {
  Setup s = make_setup(96, 307);
  CounterRng rng(308);
  double raw[8];
  rng.fill_normals(1, 0, raw, 8);
  // a non-closed one-form: coefficient modulated by another evaluation point
  CylinderOneForm phi;
  phi.times = {15, 70};
  OneFormTerm term;
  term.leg = 1;
  term.c = Vec{raw[0], raw[1], raw[2]};
  term.scal.factors.push_back({0, Vec{raw[3], raw[4], raw[5]}});
  phi.terms.push_back(term);
  CylinderVectorField V1 = field(Vec{0.3, -0.6, 0.2}, Vec{0.1, 0.0, 0.4}, Vec{1.0, 0.2, 0.0},
                                 s.w.grid.N);
  CylinderVectorField V2 = field(Vec{-0.8, 0.1, 0.5}, Vec{0.0, 0.3, 0.1}, Vec{0.4, 0.0, 0.9},
                                 s.w.grid.N);
  const double d12 = d_oneform_fields(*s.M, phi, s.path, V1, V2);
  const double d21 = d_oneform_fields(*s.M, phi, s.path, V2, V1);
  CHECK(std::fabs(d12 + d21) < 1e-12);
  CHECK(std::fabs(d12) > 1e-8);  // genuinely non-closed
  TangentPath tv1 = V1.along(*s.M, s.path);
  TangentPath tv2 = V2.along(*s.M, s.path);
  CHECK(d_oneform_wedge(phi, s.path, tv1, tv2) == doctest::Approx(d12).epsilon(1e-10));
  // and through a materialized two-vector
  TwoVectorOnPath W = wedge(tv1, tv2);
  CHECK(d_oneform_two_vector(phi, s.path, W) == doctest::Approx(d12).epsilon(1e-10));
}

TEST_CASE("h_gradient of a constant is zero") {
  Setup s = make_setup(48, 309);
  CylinderFunction f;
  f.times = {10};
  CylMonomial mono;
  mono.coeff = 3.7;  // constant monomial, no factors
  f.terms.push_back(mono);
  HGradient g = h_gradient(s.fp, f);
  CHECK(norm(g.grads[0]) == 0.0);
  CHECK(g.h1_riesz.sup_norm() == 0.0);
  CHECK(max_abs(g.h_dual.hdot) == 0.0);
}

TEST_CASE("h_gradient of a linear coordinate function") {
  Setup s = make_setup(48, 311);
  const Vec c{0.0, 1.0, 0.0};
  CylinderFunction f = linear_fn(s.w.grid.N, c);
  HGradient g = h_gradient(s.fp, f);
  Vec expect = s.M->apply_tangent(s.path.node_vec(s.w.grid.N), c);
  CHECK(norm(g.grads[0] - expect) < 1e-14);
}

TEST_CASE("h_dual pairing equals the filtered-direction derivative") {
  Setup s = make_setup(200, 313);
  CounterRng rng(314);
  for (int trial = 0; trial < 5; ++trial) {
    double raw[8];
    rng.fill_normals(1, trial * 8, raw, 8);
    CylinderFunction f =
        product_fn(30 + trial, 150 + trial, Vec{raw[0], raw[1], raw[2]}, Vec{raw[3], raw[4], raw[5]});
    HGradient g = h_gradient(s.fp, f);
    CameronMartinVector h = random_h(s.w.grid, 3, 315 + trial);
    const double via_dual = cm_inner(g.h_dual, h);
    const double via_apply = g.apply(filtered_derivative(s.fp, h));
    CHECK(via_dual == doctest::Approx(via_apply).epsilon(1e-11));
    // and the H1 Riesz representative gives the same pairing
    const double via_riesz = h1_inner(s.fp, g.h1_riesz, filtered_derivative(s.fp, h));
    CHECK(via_riesz == doctest::Approx(via_apply).epsilon(1e-11));
  }
}

TEST_CASE("chain rule against a finite difference of the solution map") {
  Setup s = make_setup(500, 317);
  CounterRng rng(318);
  const double eps = 1e-4;
  double worst = 0;
  for (int trial = 0; trial < 5; ++trial) {
    double raw[8];
    rng.fill_normals(1, trial * 8, raw, 8);
    CylinderFunction f =
        product_fn(100 + trial, 400 + trial, Vec{raw[0], raw[1], raw[2]}, Vec{raw[3], raw[4], raw[5]});
    CameronMartinVector h = random_h(s.w.grid, 3, 319 + trial);
    HGradient g = h_gradient(s.fp, f);
    TangentPath v = ito_map_derivative(*s.M, s.path, s.w, h);
    const double analytic = g.apply(v);
    DrivingPath wp = s.w;
    for (std::size_t i = 0; i < wp.inc.size(); ++i)
      wp.inc[i] += eps * h.hdot[i] * s.w.grid.dt();
    ManifoldPath pe = solve_gradient_sde(*s.M, Vec{1.0, 0.0, 0.0}, wp);
    const double fd = (f.eval(pe) - f.eval(s.path)) / eps;
    worst = std::max(worst, std::fabs(fd - analytic) / std::max(1.0, std::fabs(analytic)));
  }
  CHECK(worst < 1e-2);
}

TEST_CASE("pullbacks of functions and one-forms") {
  Setup s = make_setup(128, 321);
  CylinderFunction f = linear_fn(100, Vec{0.0, 0.0, 1.0});
  CHECK(pullback_function(f, s.path) == doctest::Approx(s.path.node(100)[2]));

  CylinderOneForm zero;
  zero.times = {64};
  OneFormPullback pbz = pullback_oneform(*s.M, zero, s.path, s.w, s.fp);
  CameronMartinVector h = random_h(s.w.grid, 3, 322);
  CHECK(pbz.raw(h) == 0.0);
  CHECK(pbz.filtered(h) == 0.0);

  CylinderOneForm df = d_function(f);
  OneFormPullback pb = pullback_oneform(*s.M, df, s.path, s.w, s.fp);
  HGradient g = h_gradient(s.fp, f);
  CHECK(pb.filtered(h) == doctest::Approx(cm_inner(g.h_dual, h)).epsilon(1e-12));
  CHECK(pb.raw(h) ==
        doctest::Approx(g.apply(ito_map_derivative(*s.M, s.path, s.w, h))).epsilon(1e-12));
}

TEST_CASE("wiener divergence of a constant coefficient is the paley-wiener sum") {
  Setup s = make_setup(64, 323);
  CylinderFunction one;
  one.times = {1};
  CylMonomial mono;
  mono.coeff = 1.0;
  one.terms.push_back(mono);
  CameronMartinVector h = random_h(s.w.grid, 3, 324);
  const double div = wiener_divergence(*s.M, one, h, s.w, s.path, s.fp);
  double pw = 0;
  for (int k = 0; k < s.w.grid.N; ++k)
    for (int i = 0; i < 3; ++i) pw += h.step(k)[i] * s.w.step(k)[i];
  CHECK(div == doctest::Approx(pw));
}
