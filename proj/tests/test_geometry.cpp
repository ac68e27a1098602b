#include <doctest.h>

#include <cmath>

#include "pathlab/errors.hpp"
#include "pathlab/geometry.hpp"
#include "pathlab/rng.hpp"

using namespace pathlab;

namespace {

Vec col(const Mat& M, int j) {
  Vec v(M.rows());
  for (int i = 0; i < M.rows(); ++i) v[i] = M(i, j);
  return v;
}

// central finite difference of y -> X(y)e along the geodesic through x with
// velocity v, projected back to the tangent space at x
Vec nabla_X_fd(const EmbeddedManifold& M, const Vec& x, const Vec& v, const Vec& e,
               double delta = 1e-5) {
  const int m = M.ambient_dim();
  Vec yp(m), ym(m);
  M.geodesic(x.data(), v.data(), delta, yp.data());
  M.geodesic(x.data(), v.data(), -delta, ym.data());
  Mat Xp(m, m), Xm(m, m);
  M.tangent_projector(yp.data(), Xp.data());
  M.tangent_projector(ym.data(), Xm.data());
  Vec d(m);
  for (int i = 0; i < m; ++i) {
    double s = 0;
    for (int j = 0; j < m; ++j) s += (Xp(i, j) - Xm(i, j)) * e[j];
    d[i] = s / (2 * delta);
  }
  return M.apply_tangent(x, d);
}

// second fundamental form from finite differences of the projector field
Vec alpha_fd(const EmbeddedManifold& M, const Vec& x, const Vec& u, const Vec& v,
             double delta = 1e-5) {
  const int m = M.ambient_dim();
  Vec yp(m), ym(m);
  M.geodesic(x.data(), u.data(), delta, yp.data());
  M.geodesic(x.data(), u.data(), -delta, ym.data());
  Mat Xp(m, m), Xm(m, m);
  M.tangent_projector(yp.data(), Xp.data());
  M.tangent_projector(ym.data(), Xm.data());
  Vec d(m);
  for (int i = 0; i < m; ++i) {
    double s = 0;
    for (int j = 0; j < m; ++j) s += (Xp(i, j) - Xm(i, j)) * v[j];
    d[i] = s / (2 * delta);
  }
  return M.apply_normal(x, d);
}

}  // namespace

TEST_CASE("manifold construction") {
  auto s2 = construct_manifold(ManifoldKind::Sphere, 2);
  CHECK(s2->ambient_dim() == 3);
  CHECK(s2->intrinsic_dim() == 2);
  auto c = construct_manifold(ManifoldKind::Circle, 1);
  CHECK(c->ambient_dim() == 2);
  auto t = construct_manifold(ManifoldKind::CliffordTorus, 2);
  CHECK(t->ambient_dim() == 4);
  CHECK(t->codim() == 2);
  CHECK_THROWS_AS(construct_manifold(ManifoldKind::Sphere, 0), std::invalid_argument);
  CHECK_THROWS_AS(construct_manifold(ManifoldKind::Circle, 2), std::invalid_argument);
  CHECK_THROWS_AS(construct_manifold(ManifoldKind::CliffordTorus, 3), std::invalid_argument);
}

TEST_CASE("projector examples") {
  auto s2 = construct_manifold(ManifoldKind::Sphere, 2);
  TangentFrameData fd = projections(*s2, Vec{0.0, 0.0, 1.0});
  CHECK(fd.X(0, 0) == doctest::Approx(1.0));
  CHECK(fd.X(1, 1) == doctest::Approx(1.0));
  CHECK(fd.X(2, 2) == doctest::Approx(0.0));
  CHECK(std::fabs(fd.X(0, 1)) < 1e-15);

  auto c = construct_manifold(ManifoldKind::Circle, 1);
  TangentFrameData fc = projections(*c, Vec{1.0, 0.0});
  CHECK(fc.X(0, 0) == doctest::Approx(0.0));
  CHECK(fc.X(1, 1) == doctest::Approx(1.0));

  CHECK_THROWS_AS(projections(*s2, Vec{0.0, 0.0, 1.5}), std::domain_error);
}

TEST_CASE("projector identities on random points") {
  CounterRng rng(5);
  for (auto kind : {ManifoldKind::Sphere, ManifoldKind::Circle, ManifoldKind::CliffordTorus}) {
    auto M = construct_manifold(kind, kind == ManifoldKind::Circle ? 1 : 2);
    const int m = M->ambient_dim();
    for (int trial = 0; trial < 1000; ++trial) {
      Vec x = M->random_point(rng, 1, trial);
      CHECK(M->constraint_norm(x) < 1e-12);
      Vec x2 = M->project(x);
      double drift = 0;
      for (int i = 0; i < m; ++i) drift = std::max(drift, std::fabs(x2[i] - x[i]));
      CHECK(drift < 1e-12);  // idempotent retraction
      TangentFrameData fd = projections(*M, x);
      CHECK(max_abs(fd.X * fd.X - fd.X) < 1e-10);
      CHECK(max_abs(fd.X - fd.X.transposed()) < 1e-10);
      CHECK(max_abs(fd.X + fd.K - Mat::identity(m)) < 1e-10);
      CHECK(max_abs(fd.X * fd.K) < 1e-10);
      if (trial >= 50) continue;
      double tr = 0;
      for (int i = 0; i < m; ++i) tr += fd.X(i, i);
      CHECK(tr == doctest::Approx(M->intrinsic_dim()).epsilon(1e-10));
    }
  }
}

TEST_CASE("nabla_X examples on the sphere") {
  auto s2 = construct_manifold(ManifoldKind::Sphere, 2);
  Vec x{0.0, 0.0, 1.0};
  Vec v{1.0, 0.0, 0.0};
  Vec e{0.0, 0.0, 1.0};
  Vec r = nabla_X(*s2, x, v, e);
  CHECK(r[0] == doctest::Approx(-1.0));
  CHECK(std::fabs(r[1]) < 1e-14);
  CHECK(std::fabs(r[2]) < 1e-14);

  // tangent e gives zero; zero v gives zero
  Vec et{0.3, -0.2, 0.0};
  CHECK(max_abs(nabla_X(*s2, x, v, et)) < 1e-14);
  CHECK(max_abs(nabla_X(*s2, x, Vec{0, 0, 0}, e)) < 1e-14);

  CHECK_THROWS_AS(nabla_X(*s2, x, Vec{0.0, 0.0, 0.5}, e), std::domain_error);
}

TEST_CASE("nabla_X matches the finite-difference oracle") {
  CounterRng rng(6);
  for (auto kind : {ManifoldKind::Sphere, ManifoldKind::Circle, ManifoldKind::CliffordTorus}) {
    auto M = construct_manifold(kind, kind == ManifoldKind::Circle ? 1 : 2);
    const int m = M->ambient_dim();
    for (int trial = 0; trial < 100; ++trial) {
      Vec x = M->random_point(rng, 2, trial);
      Vec v = M->random_tangent(x, rng, 3, trial);
      Vec e(m);
      rng.fill_normals(4, trial * 8, e.data(), m);
      Vec a = nabla_X(*M, x, v, e);
      Vec b = nabla_X_fd(*M, x, v, e);
      double scale = std::max(1e-8, norm(a));
      CHECK(norm(a - b) / scale < 1e-6);
      // shape-operator form: <A(v, K_x e), z> = <alpha(v, z), K_x e>
      Vec ke = M->apply_normal(x, e);
      Mat E = M->tangent_frame(x);
      for (int j = 0; j < M->intrinsic_dim(); ++j) {
        Vec z = col(E, j);
        Vec al(m);
        M->second_fundamental(x.data(), v.data(), z.data(), al.data());
        CHECK(dot(a, z) == doctest::Approx(dot(al, ke)).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("curvature packages") {
  CounterRng rng(7);
  SUBCASE("sphere(2) has Ric = identity and unit curvature operator") {
    auto M = construct_manifold(ManifoldKind::Sphere, 2);
    Vec x = M->random_point(rng, 1, 0);
    CurvaturePackage pkg = curvature_package(*M, x);
    CHECK(max_abs(pkg.ric_sharp - Mat::identity(2)) < 1e-8);
    CHECK(pkg.curv_op.rows() == 1);
    CHECK(pkg.curv_op(0, 0) == doctest::Approx(1.0));
    CHECK(max_abs(pkg.weitzenbock2) < 1e-10);
  }
  SUBCASE("sphere(n) has Ric = (n-1) I") {
    for (int n : {3, 4}) {
      auto M = construct_manifold(ManifoldKind::Sphere, n);
      Vec x = M->random_point(rng, 2, n);
      CurvaturePackage pkg = curvature_package(*M, x);
      Mat expect = Mat::identity(n);
      expect *= static_cast<double>(n - 1);
      CHECK(max_abs(pkg.ric_sharp - expect) < 1e-8);
      // weitzenbock on 2-vectors of the round sphere: 2(n-2) identity
      Mat w2 = Mat::identity(wedge_dim(n));
      w2 *= 2.0 * (n - 2);
      CHECK(max_abs(pkg.weitzenbock2 - w2) < 1e-8);
    }
  }
  SUBCASE("flat instances carry zero curvature data") {
    for (auto kind : {ManifoldKind::Circle, ManifoldKind::CliffordTorus}) {
      auto M = construct_manifold(kind, kind == ManifoldKind::Circle ? 1 : 2);
      Vec x = M->random_point(rng, 3, 1);
      CurvaturePackage pkg = curvature_package(*M, x);
      CHECK(max_abs(pkg.ric_sharp) < 1e-10);
      if (pkg.lam() > 0) {
        CHECK(max_abs(pkg.curv_op) < 1e-10);
        CHECK(max_abs(pkg.weitzenbock2) < 1e-10);
      }
    }
  }
  SUBCASE("curvature operator is symmetric") {
    auto M = construct_manifold(ManifoldKind::Sphere, 3);
    for (int trial = 0; trial < 20; ++trial) {
      Vec x = M->random_point(rng, 4, trial);
      CurvaturePackage pkg = curvature_package(*M, x);
      CHECK(max_abs(pkg.curv_op - pkg.curv_op.transposed()) < 1e-10);
      CHECK(max_abs(pkg.weitzenbock2 - pkg.weitzenbock2.transposed()) < 1e-10);
    }
  }
  SUBCASE("gauss assembly agrees with finite differences of the projector") {
    auto M = construct_manifold(ManifoldKind::Sphere, 2);
    Vec x = M->random_point(rng, 5, 0);
    CurvaturePackage pkg = curvature_package(*M, x);
    Mat E = pkg.frame;
    // reassemble Ric from the fd second fundamental form
    Mat ric(2, 2);
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        double s = 0;
        for (int i = 0; i < 2; ++i) {
          Vec a_il = alpha_fd(*M, x, col(E, i), col(E, i));
          Vec a_jk = alpha_fd(*M, x, col(E, j), col(E, k));
          Vec a_ik = alpha_fd(*M, x, col(E, i), col(E, k));
          Vec a_jl = alpha_fd(*M, x, col(E, j), col(E, i));
          s += dot(a_il, a_jk) - dot(a_ik, a_jl);
        }
        ric(j, k) = s;
      }
    CHECK(max_abs(ric - pkg.ric_sharp) < 1e-6);
  }
}

TEST_CASE("retraction rejects points outside its domain") {
  auto s2 = construct_manifold(ManifoldKind::Sphere, 2);
  Vec origin{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(s2->project(origin), StepSizeError);
  auto t = construct_manifold(ManifoldKind::CliffordTorus, 2);
  Vec block_zero{0.0, 0.0, 0.5, 0.5};
  CHECK_THROWS_AS(t->project(block_zero), StepSizeError);
}

TEST_CASE("wedge coordinate round trip") {
  CounterRng rng(8);
  auto M = construct_manifold(ManifoldKind::Sphere, 3);
  Vec x = M->random_point(rng, 1, 9);
  Mat E = M->tangent_frame(x);
  Vec lam(wedge_dim(3));
  rng.fill_normals(2, 0, lam.data(), lam.size());
  Mat G = wedge_from_coords(E, lam);
  CHECK(max_abs(G + G.transposed()) < 1e-14);  // antisymmetric
  Vec back = wedge_coords(E, G);
  for (std::size_t i = 0; i < lam.size(); ++i) CHECK(back[i] == doctest::Approx(lam[i]));
}
