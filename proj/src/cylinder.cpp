#include "pathlab/cylinder.hpp"

#include <cmath>
#include <stdexcept>

namespace pathlab {

double CylMonomial::eval(const std::vector<Vec>& pts) const {
  double v = coeff;
  for (const auto& f : factors) v *= dot(pts[f.slot], f.d);
  return v;
}

Vec CylMonomial::grad(int slot, const std::vector<Vec>& pts, int m) const {
  Vec g(m, 0.0);
  for (std::size_t q = 0; q < factors.size(); ++q) {
    if (factors[q].slot != slot) continue;
    double w = coeff;
    for (std::size_t r = 0; r < factors.size(); ++r) {
      if (r == q) continue;
      w *= dot(pts[factors[r].slot], factors[r].d);
    }
    axpy(w, factors[q].d, g);
  }
  return g;
}

std::vector<Vec> CylinderFunction::values_at(const ManifoldPath& path) const {
  std::vector<Vec> pts;
  pts.reserve(times.size());
  for (int k : times) {
    if (k < 0 || k > path.grid.N) throw std::out_of_range("cylinder time outside the grid");
    pts.push_back(path.node_vec(k));
  }
  return pts;
}

double CylinderFunction::eval(const std::vector<Vec>& pts) const {
  double v = 0.0;
  for (const auto& t : terms) v += t.eval(pts);
  return v;
}

double CylinderFunction::eval(const ManifoldPath& path) const { return eval(values_at(path)); }

Vec CylinderFunction::grad(int slot, const std::vector<Vec>& pts, int m) const {
  Vec g(m, 0.0);
  for (const auto& t : terms) {
    Vec tg = t.grad(slot, pts, m);
    axpy(1.0, tg, g);
  }
  return g;
}

std::vector<Vec> CylinderOneForm::values_at(const ManifoldPath& path) const {
  std::vector<Vec> pts;
  pts.reserve(times.size());
  for (int k : times) {
    if (k < 0 || k > path.grid.N) throw std::out_of_range("cylinder time outside the grid");
    pts.push_back(path.node_vec(k));
  }
  return pts;
}

double CylinderOneForm::apply(const ManifoldPath& path, const TangentPath& v) const {
  if (v.grid != path.grid) throw std::invalid_argument("one-form: tangent path grid mismatch");
  auto pts = values_at(path);
  double s = 0.0;
  for (const auto& term : terms) {
    const double w = term.scal.eval(pts);
    const double* vt = v.node(times[term.leg]);
    double c = 0.0;
    for (std::size_t i = 0; i < term.c.size(); ++i) c += term.c[i] * vt[i];
    s += w * c;
  }
  return s;
}

Vec CylinderOneForm::coeff(int leg, const std::vector<Vec>& pts, int m) const {
  Vec a(m, 0.0);
  for (const auto& term : terms) {
    if (term.leg != leg) continue;
    axpy(term.scal.eval(pts), term.c, a);
  }
  return a;
}

Mat CylinderOneForm::dcoeff(int leg, int slot, const std::vector<Vec>& pts, int m) const {
  Mat D(m, m);
  for (const auto& term : terms) {
    if (term.leg != leg) continue;
    Vec g = term.scal.grad(slot, pts, m);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) D(p, q) += term.c[p] * g[q];
  }
  return D;
}

CylinderOneForm d_function(const CylinderFunction& f) {
  CylinderOneForm phi;
  phi.times = f.times;
  for (const auto& mono : f.terms) {
    for (std::size_t q = 0; q < mono.factors.size(); ++q) {
      OneFormTerm term;
      term.leg = mono.factors[q].slot;
      term.c = mono.factors[q].d;
      term.scal.coeff = mono.coeff;
      for (std::size_t r = 0; r < mono.factors.size(); ++r)
        if (r != q) term.scal.factors.push_back(mono.factors[r]);
      phi.terms.push_back(std::move(term));
    }
  }
  return phi;
}

Vec CylinderVectorField::value(const EmbeddedManifold& M, int k, const Vec& x) const {
  Vec g = c;
  if (!e.empty()) axpy(dot(x, d), e, g);
  Vec out = M.apply_tangent(x, g);
  for (double& v : out) v *= psi[k];
  return out;
}

Vec CylinderVectorField::dvalue(const EmbeddedManifold& M, int k, const Vec& x,
                                const Vec& w) const {
  Vec g = c;
  if (!e.empty()) axpy(dot(x, d), e, g);
  Vec out(x.size(), 0.0);
  M.dX(x.data(), w.data(), g.data(), out.data());
  if (!e.empty()) {
    Vec xe = M.apply_tangent(x, e);
    axpy(dot(w, d), xe, out);
  }
  for (double& v : out) v *= psi[k];
  return out;
}

TangentPath CylinderVectorField::along(const EmbeddedManifold& M, const ManifoldPath& path) const {
  TangentPath v;
  v.grid = path.grid;
  v.m = path.m;
  v.v.assign(static_cast<std::size_t>(path.grid.N + 1) * path.m, 0.0);
  for (int k = 0; k <= path.grid.N; ++k) {
    Vec val = value(M, k, path.node_vec(k));
    for (int i = 0; i < path.m; ++i) v.node(k)[i] = val[i];
  }
  return v;
}

double d_oneform_fields(const EmbeddedManifold& M, const CylinderOneForm& phi,
                        const ManifoldPath& path, const CylinderVectorField& V1,
                        const CylinderVectorField& V2) {
  auto pts = phi.values_at(path);
  const int m = path.m;
  const int k = static_cast<int>(phi.times.size());
  std::vector<Vec> v1(k), v2(k);
  for (int i = 0; i < k; ++i) {
    v1[i] = V1.value(M, phi.times[i], pts[i]);
    v2[i] = V2.value(M, phi.times[i], pts[i]);
  }
  double total = 0.0;
  // L_{V1}[phi(V2)] - L_{V2}[phi(V1)]: coefficient-map derivatives plus the
  // derivatives of the field values through their evaluation points
  for (int i = 0; i < k; ++i) {
    Vec ai = phi.coeff(i, pts, m);
    for (int j = 0; j < k; ++j) {
      Mat Dji = phi.dcoeff(i, j, pts, m);
      total += dot(Dji.apply(v1[j]), v2[i]);
      total -= dot(Dji.apply(v2[j]), v1[i]);
    }
    total += dot(ai, V2.dvalue(M, phi.times[i], pts[i], v1[i]));
    total -= dot(ai, V1.dvalue(M, phi.times[i], pts[i], v2[i]));
    // minus phi([V1, V2])
    Vec bracket = V2.dvalue(M, phi.times[i], pts[i], v1[i]) -
                  V1.dvalue(M, phi.times[i], pts[i], v2[i]);
    total -= dot(ai, bracket);
  }
  return total;
}

double d_oneform_two_vector(const CylinderOneForm& phi, const ManifoldPath& path,
                            const TwoVectorOnPath& W) {
  if (W.grid != path.grid) throw std::invalid_argument("d_oneform: two-vector grid mismatch");
  auto pts = phi.values_at(path);
  const int m = path.m;
  const int k = static_cast<int>(phi.times.size());
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      Mat Dji = phi.dcoeff(i, j, pts, m);
      Mat blk = W.value(phi.times[j], phi.times[i]);  // W_{(t_j, t_i)}
      // <D, W^T>_F
      for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) total += Dji(p, q) * blk(q, p);
    }
  }
  return total;
}

double d_oneform_wedge(const CylinderOneForm& phi, const ManifoldPath& path,
                       const TangentPath& u, const TangentPath& w) {
  auto pts = phi.values_at(path);
  const int m = path.m;
  const int k = static_cast<int>(phi.times.size());
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    const double* vi_u = u.node(phi.times[i]);
    const double* vi_w = w.node(phi.times[i]);
    for (int j = 0; j < k; ++j) {
      Mat Dji = phi.dcoeff(i, j, pts, m);
      const double* vj_u = u.node(phi.times[j]);
      const double* vj_w = w.node(phi.times[j]);
      for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q)
          total += Dji(p, q) * (vj_u[q] * vi_w[p] - vj_w[q] * vi_u[p]);
    }
  }
  return total;
}

double HGradient::apply(const TangentPath& v) const {
  double s = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double* vt = v.node(times[i]);
    for (std::size_t q = 0; q < grads[i].size(); ++q) s += grads[i][q] * vt[q];
  }
  return s;
}

Vec riesz_sequence(const FramedPath& fp, const std::vector<int>& times,
                   const std::vector<Vec>& grads) {
  const int m = fp.m, N = fp.N();
  // (Dg)_j = (W_j^{-1})^T sum_{i: t_i > j} W_{t_i}^T grad_i
  Vec seq(static_cast<std::size_t>(N) * m, 0.0);
  Vec suffix(m, 0.0);
  int next = static_cast<int>(times.size()) - 1;
  for (int j = N - 1; j >= 0; --j) {
    while (next >= 0 && times[next] > j) {
      // W^T u = E_0 C^T E_k^T u
      const double* Ek = fp.E(times[next]);
      const double* Ck = fp.C(times[next]);
      double cc[16], oc[16];
      for (int a = 0; a < fp.n; ++a) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += Ek[i * fp.n + a] * grads[next][i];
        cc[a] = s;
      }
      for (int a = 0; a < fp.n; ++a) {
        double s = 0.0;
        for (int b = 0; b < fp.n; ++b) s += Ck[b * fp.n + a] * cc[b];
        oc[a] = s;
      }
      const double* E0 = fp.E(0);
      for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int a = 0; a < fp.n; ++a) s += E0[i * fp.n + a] * oc[a];
        suffix[i] += s;
      }
      --next;
    }
    // (W_j^{-1})^T suffix = E_j Cinv_j^T E_0^T suffix
    const double* E0 = fp.E(0);
    const double* Ej = fp.E(j);
    const double* Cij = fp.Cinv(j);
    double cc[16], oc[16];
    for (int a = 0; a < fp.n; ++a) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += E0[i * fp.n + a] * suffix[i];
      cc[a] = s;
    }
    for (int a = 0; a < fp.n; ++a) {
      double s = 0.0;
      for (int b = 0; b < fp.n; ++b) s += Cij[b * fp.n + a] * cc[b];
      oc[a] = s;
    }
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int a = 0; a < fp.n; ++a) s += Ej[i * fp.n + a] * oc[a];
      seq[static_cast<std::size_t>(j) * m + i] = s;
    }
  }
  return seq;
}

Vec oneform_riesz_sequence(const FramedPath& fp, const CylinderOneForm& phi) {
  auto pts = phi.values_at(fp.base);
  std::vector<Vec> grads(phi.times.size());
  for (std::size_t leg = 0; leg < phi.times.size(); ++leg) {
    Vec a = phi.coeff(static_cast<int>(leg), pts, fp.m);
    grads[leg] = fp.manifold->apply_tangent(pts[leg], a);
  }
  return riesz_sequence(fp, phi.times, grads);
}

HGradient h_gradient(const FramedPath& fp, const CylinderFunction& f) {
  const int m = fp.m;
  HGradient out;
  out.times = f.times;
  auto pts = f.values_at(fp.base);
  const int k = f.arity();
  out.grads.resize(k);
  for (int i = 0; i < k; ++i) {
    Vec g = f.grad(i, pts, m);
    out.grads[i] = fp.manifold->apply_tangent(pts[i], g);
  }
  Vec seq = riesz_sequence(fp, out.times, out.grads);
  out.h1_riesz = damped_integral(fp, seq);
  out.h_dual.grid = fp.base.grid;
  out.h_dual.m = m;
  out.h_dual.hdot = std::move(seq);  // already tangent at each node
  return out;
}

double pullback_function(const CylinderFunction& f, const ManifoldPath& path) {
  return f.eval(path);
}

double OneFormPullback::raw(const CameronMartinVector& h) const {
  TangentPath v = ito_map_derivative(*M, *path, *driver, h);
  return phi->apply(*path, v);
}

double OneFormPullback::filtered(const CameronMartinVector& h) const {
  TangentPath v = filtered_derivative(*framed, h);
  return phi->apply(*path, v);
}

OneFormPullback pullback_oneform(const EmbeddedManifold& M, const CylinderOneForm& phi,
                                 const ManifoldPath& path, const DrivingPath& w,
                                 const FramedPath& fp) {
  OneFormPullback pb;
  pb.M = &M;
  pb.phi = &phi;
  pb.path = &path;
  pb.driver = &w;
  pb.framed = &fp;
  return pb;
}

double wiener_divergence(const EmbeddedManifold& M, const CylinderFunction& lambda,
                         const CameronMartinVector& h, const DrivingPath& w,
                         const ManifoldPath& path, const FramedPath& fp) {
  const double lam = lambda.eval(path);
  double pw = 0.0;
  for (int k = 0; k < w.grid.N; ++k) {
    const double* hd = h.step(k);
    const double* db = w.step(k);
    for (int i = 0; i < w.m; ++i) pw += hd[i] * db[i];
  }
  HGradient g = h_gradient(fp, lambda);
  TangentPath v = ito_map_derivative(M, path, w, h);
  return lam * pw - g.apply(v);
}

}  // namespace pathlab
