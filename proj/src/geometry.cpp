#include "pathlab/geometry.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "pathlab/errors.hpp"

namespace pathlab {

std::string to_string(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::Sphere: return "sphere";
    case ManifoldKind::Circle: return "circle";
    case ManifoldKind::CliffordTorus: return "clifford-torus";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// base-class conveniences

Vec EmbeddedManifold::constraint(const Vec& x) const {
  Vec out(codim());
  constraint(x.data(), out.data());
  return out;
}

Vec EmbeddedManifold::project(Vec y) const {
  project(y.data());
  return y;
}

double EmbeddedManifold::constraint_norm(const Vec& x) const {
  return max_abs(constraint(x));
}

Vec EmbeddedManifold::apply_tangent(const Vec& x, const Vec& e) const {
  Mat X(m_, m_);
  tangent_projector(x.data(), X.data());
  return X.apply(e);
}

Vec EmbeddedManifold::apply_normal(const Vec& x, const Vec& e) const {
  Vec t = apply_tangent(x, e);
  Vec out(m_);
  for (int i = 0; i < m_; ++i) out[i] = e[i] - t[i];
  return out;
}

Mat EmbeddedManifold::tangent_projector_mat(const Vec& x) const {
  Mat X(m_, m_);
  tangent_projector(x.data(), X.data());
  return X;
}

Mat EmbeddedManifold::tangent_frame(const Vec& x) const {
  Mat X = tangent_projector_mat(x);
  // project the ambient axes and orthonormalize; deterministic given x
  Mat cand(m_, m_);
  for (int j = 0; j < m_; ++j)
    for (int i = 0; i < m_; ++i) cand(i, j) = X(i, j);
  int rank = gram_schmidt(cand, 1e-7);
  if (rank != n_) throw std::runtime_error("tangent_frame: projector rank != intrinsic dim");
  Mat E(m_, n_);
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i < m_; ++i) E(i, j) = cand(i, j);
  return E;
}

Mat EmbeddedManifold::normal_frame(const Vec& x) const {
  Mat X = tangent_projector_mat(x);
  Mat cand(m_, m_);
  for (int j = 0; j < m_; ++j) {
    for (int i = 0; i < m_; ++i) cand(i, j) = (i == j ? 1.0 : 0.0) - X(i, j);
  }
  int rank = gram_schmidt(cand, 1e-7);
  if (rank != codim()) throw std::runtime_error("normal_frame: rank != codimension");
  Mat F(m_, codim());
  for (int j = 0; j < codim(); ++j)
    for (int i = 0; i < m_; ++i) F(i, j) = cand(i, j);
  return F;
}

Vec EmbeddedManifold::random_point(const CounterRng& rng, std::uint64_t stream,
                                   std::uint64_t block) const {
  Vec y(m_);
  rng.fill_normals(stream, block * 16, y.data(), m_);
  for (double& v : y) v += 0.05;  // avoid the measure-zero retraction singularities
  project(y.data());
  return y;
}

Vec EmbeddedManifold::random_tangent(const Vec& x, const CounterRng& rng, std::uint64_t stream,
                                     std::uint64_t block) const {
  Vec w(m_);
  rng.fill_normals(stream, block * 16 + 8, w.data(), m_);
  return apply_tangent(x, w);
}

Vec EmbeddedManifold::require_on_manifold(const Vec& x) const {
  if (static_cast<int>(x.size()) != m_)
    throw std::invalid_argument("point has wrong ambient dimension");
  if (constraint_norm(x) > kOnManifoldTol)
    throw std::domain_error("point is not on the manifold");
  return project(x);
}

// ---------------------------------------------------------------------------
// Sphere(n) in R^{n+1}, unit radius. Circle is the n = 1 instance.

namespace {

class SphereManifold final : public EmbeddedManifold {
 public:
  SphereManifold(ManifoldKind kind, int n) : EmbeddedManifold(kind, n + 1, n) {}

  void constraint(const double* x, double* out) const override {
    double s = 0.0;
    for (int i = 0; i < ambient_dim(); ++i) s += x[i] * x[i];
    out[0] = s - 1.0;
  }

  void project(double* y) const override {
    double s = 0.0;
    for (int i = 0; i < ambient_dim(); ++i) s += y[i] * y[i];
    s = std::sqrt(s);
    if (s < 1e-12) throw StepSizeError("sphere retraction: point at the origin; increase N");
    for (int i = 0; i < ambient_dim(); ++i) y[i] /= s;
  }

  void dproject(const double* y, const double* w, double* out) const override {
    const int m = ambient_dim();
    double s2 = 0.0, yw = 0.0;
    for (int i = 0; i < m; ++i) { s2 += y[i] * y[i]; yw += y[i] * w[i]; }
    const double r = std::sqrt(s2);
    for (int i = 0; i < m; ++i) out[i] = w[i] / r - y[i] * yw / (r * s2);
  }

  void tangent_projector(const double* y, double* X) const override {
    const int m = ambient_dim();
    double s2 = 0.0;
    for (int i = 0; i < m; ++i) s2 += y[i] * y[i];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) X[i * m + j] = (i == j ? 1.0 : 0.0) - y[i] * y[j] / s2;
  }

  void dX(const double* y, const double* w, const double* e, double* out) const override {
    const int m = ambient_dim();
    double s2 = 0.0, ye = 0.0, we = 0.0, yw = 0.0;
    for (int i = 0; i < m; ++i) {
      s2 += y[i] * y[i];
      ye += y[i] * e[i];
      we += w[i] * e[i];
      yw += y[i] * w[i];
    }
    for (int i = 0; i < m; ++i)
      out[i] = -(w[i] * ye + y[i] * we) / s2 + 2.0 * yw * ye * y[i] / (s2 * s2);
  }

  void second_fundamental(const double* x, const double* u, const double* v,
                          double* out) const override {
    const int m = ambient_dim();
    double uv = 0.0;
    for (int i = 0; i < m; ++i) uv += u[i] * v[i];
    for (int i = 0; i < m; ++i) out[i] = -uv * x[i];
  }

  void geodesic(const double* x, const double* v, double t, double* out) const override {
    const int m = ambient_dim();
    double nv = 0.0;
    for (int i = 0; i < m; ++i) nv += v[i] * v[i];
    nv = std::sqrt(nv);
    if (nv == 0.0) { std::memcpy(out, x, m * sizeof(double)); return; }
    const double c = std::cos(nv * t), s = std::sin(nv * t) / nv;
    for (int i = 0; i < m; ++i) out[i] = c * x[i] + s * v[i];
  }
};

// ---------------------------------------------------------------------------
// Clifford torus in R^4: two circles of radius 1/sqrt(2); induced metric flat.

class CliffordTorusManifold final : public EmbeddedManifold {
 public:
  CliffordTorusManifold() : EmbeddedManifold(ManifoldKind::CliffordTorus, 4, 2) {}

  static constexpr double kR2 = 0.5;  // squared block radius

  void constraint(const double* x, double* out) const override {
    out[0] = x[0] * x[0] + x[1] * x[1] - kR2;
    out[1] = x[2] * x[2] + x[3] * x[3] - kR2;
  }

  void project(double* y) const override {
    for (int b = 0; b < 2; ++b) {
      double* yb = y + 2 * b;
      const double r = std::hypot(yb[0], yb[1]);
      if (r < 1e-12) throw StepSizeError("torus retraction: block at the origin; increase N");
      const double f = std::sqrt(kR2) / r;
      yb[0] *= f;
      yb[1] *= f;
    }
  }

  void dproject(const double* y, const double* w, double* out) const override {
    const double a = std::sqrt(kR2);
    for (int b = 0; b < 2; ++b) {
      const double* yb = y + 2 * b;
      const double* wb = w + 2 * b;
      double* ob = out + 2 * b;
      const double s2 = yb[0] * yb[0] + yb[1] * yb[1];
      const double r = std::sqrt(s2);
      const double yw = yb[0] * wb[0] + yb[1] * wb[1];
      ob[0] = a * (wb[0] / r - yb[0] * yw / (r * s2));
      ob[1] = a * (wb[1] / r - yb[1] * yw / (r * s2));
    }
  }

  void tangent_projector(const double* y, double* X) const override {
    for (int i = 0; i < 16; ++i) X[i] = 0.0;
    for (int b = 0; b < 2; ++b) {
      const double* yb = y + 2 * b;
      const double s2 = yb[0] * yb[0] + yb[1] * yb[1];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          X[(2 * b + i) * 4 + (2 * b + j)] = (i == j ? 1.0 : 0.0) - yb[i] * yb[j] / s2;
    }
  }

  void dX(const double* y, const double* w, const double* e, double* out) const override {
    for (int b = 0; b < 2; ++b) {
      const double* yb = y + 2 * b;
      const double* wb = w + 2 * b;
      const double* eb = e + 2 * b;
      double* ob = out + 2 * b;
      const double s2 = yb[0] * yb[0] + yb[1] * yb[1];
      const double ye = yb[0] * eb[0] + yb[1] * eb[1];
      const double we = wb[0] * eb[0] + wb[1] * eb[1];
      const double yw = yb[0] * wb[0] + yb[1] * wb[1];
      for (int i = 0; i < 2; ++i)
        ob[i] = -(wb[i] * ye + yb[i] * we) / s2 + 2.0 * yw * ye * yb[i] / (s2 * s2);
    }
  }

  void second_fundamental(const double* x, const double* u, const double* v,
                          double* out) const override {
    for (int b = 0; b < 2; ++b) {
      const double* xb = x + 2 * b;
      const double* ub = u + 2 * b;
      const double* vb = v + 2 * b;
      double* ob = out + 2 * b;
      const double uv = ub[0] * vb[0] + ub[1] * vb[1];
      ob[0] = -uv * xb[0] / kR2;
      ob[1] = -uv * xb[1] / kR2;
    }
  }

  void geodesic(const double* x, const double* v, double t, double* out) const override {
    const double a = std::sqrt(kR2);
    for (int b = 0; b < 2; ++b) {
      const double* xb = x + 2 * b;
      const double* vb = v + 2 * b;
      double* ob = out + 2 * b;
      const double nv = std::hypot(vb[0], vb[1]);
      if (nv == 0.0) { ob[0] = xb[0]; ob[1] = xb[1]; continue; }
      const double th = nv * t / a;
      const double c = std::cos(th), s = std::sin(th) * a / nv;
      ob[0] = c * xb[0] + s * vb[0];
      ob[1] = c * xb[1] + s * vb[1];
    }
  }
};

}  // namespace

std::shared_ptr<const EmbeddedManifold> construct_manifold(ManifoldKind kind, int n) {
  switch (kind) {
    case ManifoldKind::Sphere:
      if (n < 1) throw std::invalid_argument("sphere dimension must be >= 1");
      return std::make_shared<SphereManifold>(ManifoldKind::Sphere, n);
    case ManifoldKind::Circle:
      if (n != 1) throw std::invalid_argument("circle has intrinsic dimension 1");
      return std::make_shared<SphereManifold>(ManifoldKind::Circle, 1);
    case ManifoldKind::CliffordTorus:
      if (n != 2) throw std::invalid_argument("clifford torus has intrinsic dimension 2");
      return std::make_shared<CliffordTorusManifold>();
  }
  throw std::invalid_argument("unknown manifold kind");
}

// ---------------------------------------------------------------------------
// point operations

TangentFrameData projections(const EmbeddedManifold& M, const Vec& x0) {
  Vec x = M.require_on_manifold(x0);
  const int m = M.ambient_dim();
  TangentFrameData out;
  out.base_point = x;
  out.X = Mat(m, m);
  M.tangent_projector(x.data(), out.X.data());
  out.K = Mat(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out.K(i, j) = (i == j ? 1.0 : 0.0) - out.X(i, j);
  return out;
}

Vec nabla_X(const EmbeddedManifold& M, const Vec& x0, const Vec& v, const Vec& e) {
  Vec x = M.require_on_manifold(x0);
  Vec vt = M.apply_tangent(x, v);
  double vn = norm(v);
  if (vn > 0 && norm(v - vt) > kOnManifoldTol * std::max(1.0, vn))
    throw std::domain_error("nabla_X: direction is not tangent");
  Vec d(M.ambient_dim());
  M.dX(x.data(), vt.data(), e.data(), d.data());
  return M.apply_tangent(x, d);
}

// ---------------------------------------------------------------------------
// curvature via the Gauss equation

int wedge_dim(int n) { return n * (n - 1) / 2; }

namespace {

// accumulate w * (tau_a ^ tau_b) into wedge coordinates (pairs i<j)
void add_wedge(Vec& coeff, int n, int a, int b, double w) {
  if (a == b || w == 0.0) return;
  int i = a, j = b;
  double s = w;
  if (i > j) { std::swap(i, j); s = -s; }
  // index of (i,j) among pairs in lexicographic order
  int idx = i * n - i * (i + 1) / 2 + (j - i - 1);
  coeff[idx] += s;
}

}  // namespace

CurvaturePackage curvature_package(const EmbeddedManifold& M, const Vec& x0) {
  Vec x = M.require_on_manifold(x0);
  const int m = M.ambient_dim();
  const int n = M.intrinsic_dim();
  const int lam = wedge_dim(n);

  CurvaturePackage pkg;
  pkg.base_point = x;
  pkg.frame = M.tangent_frame(x);

  // second fundamental form on frame pairs
  std::vector<Vec> alpha(static_cast<std::size_t>(n) * n, Vec(m));
  Vec u(m), v(m);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      for (int q = 0; q < m; ++q) { u[q] = pkg.frame(q, i); v[q] = pkg.frame(q, j); }
      Vec a(m);
      M.second_fundamental(x.data(), u.data(), v.data(), a.data());
      alpha[i * n + j] = a;
      alpha[j * n + i] = a;
    }
  }
  auto alpha_dot = [&](int a, int b, int c, int d) {
    return dot(alpha[a * n + b], alpha[c * n + d]);
  };
  // R[i][j][k][l] = <R(t_i,t_j)t_k, t_l> from the Gauss equation
  auto R = [&](int i, int j, int k, int l) {
    return alpha_dot(i, l, j, k) - alpha_dot(i, k, j, l);
  };

  pkg.ric_sharp = Mat(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += R(i, j, k, i);
      pkg.ric_sharp(j, k) = s;
    }

  pkg.curv_op = Mat(lam, lam);
  {
    int col = 0;
    for (int k = 0; k < n; ++k)
      for (int l = k + 1; l < n; ++l, ++col) {
        int rowp = 0;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j, ++rowp)
            pkg.curv_op(rowp, col) = R(k, l, j, i);
      }
  }

  // weitzenbock2 = Ric ^ 1 + 1 ^ Ric - 2 curv_op
  pkg.weitzenbock2 = Mat(lam, lam);
  {
    int col = 0;
    for (int k = 0; k < n; ++k)
      for (int l = k + 1; l < n; ++l, ++col) {
        Vec coeff(lam, 0.0);
        for (int a = 0; a < n; ++a) {
          add_wedge(coeff, n, a, l, pkg.ric_sharp(a, k));
          add_wedge(coeff, n, k, a, pkg.ric_sharp(a, l));
        }
        for (int r = 0; r < lam; ++r)
          pkg.weitzenbock2(r, col) = coeff[r] - 2.0 * pkg.curv_op(r, col);
      }
  }
  return pkg;
}

Vec CurvaturePackage::apply_ric_ambient(const Vec& u) const {
  const int m = frame.rows(), nn = frame.cols();
  Vec c(nn, 0.0);
  for (int j = 0; j < nn; ++j)
    for (int i = 0; i < m; ++i) c[j] += frame(i, j) * u[i];
  Vec rc = ric_sharp.apply(c);
  Vec out(m, 0.0);
  for (int j = 0; j < nn; ++j)
    for (int i = 0; i < m; ++i) out[i] += frame(i, j) * rc[j];
  return out;
}

Vec wedge_coords(const Mat& E, const Mat& G) {
  const int m = E.rows(), n = E.cols();
  const int lam = wedge_dim(n);
  // hat(G) = E^T G E, coords are its strict upper triangle
  Mat GE(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int q = 0; q < m; ++q) s += G(i, q) * E(q, j);
      GE(i, j) = s;
    }
  Vec lamv(lam);
  int idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++idx) {
      double s = 0.0;
      for (int q = 0; q < m; ++q) s += E(q, i) * GE(q, j);
      lamv[idx] = s;
    }
  return lamv;
}

Mat wedge_from_coords(const Mat& E, const Vec& lamv) {
  const int m = E.rows(), n = E.cols();
  Mat G(m, m);
  int idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++idx) {
      const double w = lamv[idx];
      if (w == 0.0) continue;
      for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q)
          G(p, q) += w * (E(p, i) * E(q, j) - E(p, j) * E(q, i));
    }
  return G;
}

Mat CurvaturePackage::apply_wedge_op_ambient(const Mat& op, const Mat& G) const {
  Vec c = wedge_coords(frame, G);
  Vec oc = op.apply(c);
  return wedge_from_coords(frame, oc);
}

}  // namespace pathlab
