#include "pathlab/galerkin.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "pathlab/errors.hpp"

namespace pathlab {

namespace {

std::vector<int> anchor_nodes(const TimeGrid& g, int anchors) {
  std::vector<int> idx;
  for (int a = 1; a <= anchors; ++a) idx.push_back(g.N * a / anchors);
  return idx;
}

std::vector<CylinderFunction> build_function_basis(const GalerkinConfig& cfg, int m) {
  const auto anchors = anchor_nodes(cfg.grid, cfg.anchors);
  std::vector<CylinderFunction> basis;
  auto axis = [&](int i) {
    Vec d(m, 0.0);
    d[i] = 1.0;
    return d;
  };
  // singles <e_i, sigma(t_a)>
  for (int a = 0; a < static_cast<int>(anchors.size()); ++a) {
    for (int i = 0; i < m; ++i) {
      if (static_cast<int>(basis.size()) >= cfg.function_basis) return basis;
      CylinderFunction f;
      f.times = {anchors[a]};
      CylMonomial mono;
      mono.factors.push_back({0, axis(i)});
      f.terms.push_back(mono);
      basis.push_back(std::move(f));
    }
  }
  // pairs <e_i, sigma(t_a)> <e_j, sigma(t_b)>, a < b
  for (int a = 0; a < static_cast<int>(anchors.size()); ++a) {
    for (int b = a + 1; b < static_cast<int>(anchors.size()); ++b) {
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          if (static_cast<int>(basis.size()) >= cfg.function_basis) return basis;
          CylinderFunction f;
          f.times = {anchors[a], anchors[b]};
          CylMonomial mono;
          mono.factors.push_back({0, axis(i)});
          mono.factors.push_back({1, axis(j)});
          f.terms.push_back(mono);
          basis.push_back(std::move(f));
        }
      }
    }
  }
  if (static_cast<int>(basis.size()) < cfg.function_basis)
    throw std::invalid_argument("galerkin: function basis larger than available candidates");
  return basis;
}

std::vector<CylinderOneForm> build_oneform_basis(const GalerkinConfig& cfg, int m) {
  const auto anchors = anchor_nodes(cfg.grid, cfg.anchors);
  std::vector<CylinderOneForm> basis;
  auto axis = [&](int i) {
    Vec d(m, 0.0);
    d[i] = 1.0;
    return d;
  };
  // coordinate covectors <e_i, v(t_a)>; these are closed, so they feed the
  // exact/harmonic side
  for (int a = 0; a < static_cast<int>(anchors.size()); ++a) {
    for (int i = 0; i < m; ++i) {
      if (static_cast<int>(basis.size()) >= cfg.oneform_basis) return basis;
      CylinderOneForm phi;
      phi.times = {anchors[a]};
      OneFormTerm term;
      term.leg = 0;
      term.c = axis(i);
      phi.terms.push_back(std::move(term));
      basis.push_back(std::move(phi));
    }
  }
  // modulated covectors <sigma(t_b), e_j> <e_i, v(t_a)>, b != a; not closed,
  // so the d1 side of the complex is populated as well
  for (int a = 0; a < static_cast<int>(anchors.size()); ++a) {
    for (int b = 0; b < static_cast<int>(anchors.size()); ++b) {
      if (a == b) continue;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          if (static_cast<int>(basis.size()) >= cfg.oneform_basis) return basis;
          CylinderOneForm phi;
          phi.times = {std::min(anchors[a], anchors[b]), std::max(anchors[a], anchors[b])};
          const int leg = anchors[a] <= anchors[b] ? 0 : 1;
          const int mod = 1 - leg;
          OneFormTerm term;
          term.leg = leg;
          term.c = axis(i);
          term.scal.factors.push_back({mod, axis(j)});
          phi.terms.push_back(std::move(term));
          basis.push_back(std::move(phi));
        }
      }
    }
  }
  if (static_cast<int>(basis.size()) < cfg.oneform_basis)
    throw std::invalid_argument("galerkin: one-form basis larger than available candidates");
  return basis;
}

}  // namespace

GalerkinSystem assemble_galerkin(const GalerkinConfig& cfg) {
  const int nmax = std::max(cfg.function_basis, std::max(cfg.oneform_basis, cfg.twovector_basis));
  if (cfg.function_basis < 1 || cfg.oneform_basis < 1 || cfg.twovector_basis < 1)
    throw std::invalid_argument("galerkin: basis sizes must be >= 1");
  if (cfg.samples < nmax * nmax)
    throw std::invalid_argument("galerkin: samples must be >= (largest basis size)^2");

  auto M = construct_manifold(cfg.kind, cfg.dim);
  const int m = M->ambient_dim();

  GalerkinSystem sys;
  sys.config = cfg;
  sys.function_basis = build_function_basis(cfg, m);
  sys.oneform_basis = build_oneform_basis(cfg, m);
  const int n0 = cfg.function_basis;
  const int n1 = cfg.oneform_basis;
  const int n2 = cfg.twovector_basis;
  sys.G0 = Mat(n0, n0);
  sys.G1 = Mat(n1, n1);
  sys.G2 = Mat(n2, n2);
  sys.D = Mat(n1, n0);
  sys.D1 = Mat(n2, n1);

  std::vector<CylinderOneForm> dfs;
  dfs.reserve(n0);
  for (const auto& f : sys.function_basis) dfs.push_back(d_function(f));

  // one shared ensemble; accumulation order is the path index
  Vec x0(m, 0.0);
  x0[0] = 1.0;
  if (cfg.kind == ManifoldKind::CliffordTorus) {
    x0.assign(m, 0.0);
    x0[0] = x0[2] = std::sqrt(0.5);
  }

  std::vector<TwoVectorOnPath> psi(n2);
  TwoVectorOnPath scratch;
  for (int p = 0; p < cfg.samples; ++p) {
    DrivingPath w = sample_driving_path(m, cfg.grid, cfg.seed + static_cast<std::uint64_t>(p));
    ManifoldPath path = solve_gradient_sde(*M, x0, w);
    FramedPath fp = compute_transports(M, path);

    // function values and H-space Riesz data
    Vec fv(n0);
    std::vector<HGradient> dfg(n0);
    for (int a = 0; a < n0; ++a) {
      fv[a] = sys.function_basis[a].eval(path);
      dfg[a] = h_gradient(fp, sys.function_basis[a]);
    }
    std::vector<Vec> phi_seq(n1);  // damped-derivative sequences of the 1-form Riesz reps
    for (int i = 0; i < n1; ++i) phi_seq[i] = oneform_riesz_sequence(fp, sys.oneform_basis[i]);

    // test two-vectors V + Q(V)
    auto basis = h2_fit_basis(fp, n2, cfg.hats);
    for (int b = 0; b < n2; ++b) {
      materialize(fp, basis[b], scratch);
      psi[b] = scratch;
    }

    const double dt = cfg.grid.dt();
    for (int a = 0; a < n0; ++a)
      for (int b = 0; b <= a; ++b) {
        const double v = fv[a] * fv[b];
        sys.G0(a, b) += v;
        if (a != b) sys.G0(b, a) += v;
      }
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j <= i; ++j) {
        const double v = dot(phi_seq[i], phi_seq[j]) * dt;
        sys.G1(i, j) += v;
        if (i != j) sys.G1(j, i) += v;
      }
    for (int i = 0; i < n1; ++i)
      for (int a = 0; a < n0; ++a)
        sys.D(i, a) += dot(phi_seq[i], dfg[a].h_dual.hdot) * dt;
    for (int b = 0; b < n2; ++b)
      for (int g = 0; g <= b; ++g) {
        const double v = tv_inner(psi[b], psi[g]);
        sys.G2(b, g) += v;
        if (b != g) sys.G2(g, b) += v;
      }
    for (int b = 0; b < n2; ++b)
      for (int i = 0; i < n1; ++i)
        sys.D1(b, i) += d_oneform_two_vector(sys.oneform_basis[i], path, psi[b]);
  }

  const double inv = 1.0 / cfg.samples;
  sys.G0 *= inv;
  sys.G1 *= inv;
  sys.G2 *= inv;
  sys.D *= inv;
  sys.D1 *= inv;
  return sys;
}

namespace {

double condition_sym(const Mat& A, const char* what) {
  Vec ev;
  Mat V;
  jacobi_eigen_sym(A, ev, V);
  if (ev.front() <= 0.0 || ev.back() / ev.front() > 1e10)
    throw DegenerateBasisError(std::string(what) + ": Gram matrix condition exceeds 1e10");
  return ev.back() / ev.front();
}

// G1-orthonormalize the columns of S; returns the m x r matrix of kept columns
Mat metric_orthonormalize(const Mat& S, const Mat& G1, double tol = 1e-10) {
  const int n = S.rows(), c = S.cols();
  Mat Q(n, c);
  int r = 0;
  double scale = 0.0;
  for (int j = 0; j < c; ++j) {
    Vec col(n);
    for (int i = 0; i < n; ++i) col[i] = S(i, j);
    const double nn = std::sqrt(dot(col, G1.apply(col)));
    scale = std::max(scale, nn);
  }
  if (scale == 0.0) return Mat(n, 0);
  for (int j = 0; j < c; ++j) {
    Vec col(n);
    for (int i = 0; i < n; ++i) col[i] = S(i, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < r; ++k) {
        Vec qk(n);
        for (int i = 0; i < n; ++i) qk[i] = Q(i, k);
        const double p = dot(qk, G1.apply(col));
        axpy(-p, qk, col);
      }
    }
    const double nn = std::sqrt(std::max(0.0, dot(col, G1.apply(col))));
    if (nn > tol * scale) {
      for (int i = 0; i < n; ++i) Q(i, r) = col[i] / nn;
      ++r;
    }
  }
  Mat out(n, r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < n; ++i) out(i, j) = Q(i, j);
  return out;
}

Mat projector_from_basis(const Mat& Q, const Mat& G1) {
  // P = Q Q^T G1
  return Q * Q.transposed() * G1;
}

}  // namespace

HodgeDecomposition hodge_decompose(const GalerkinSystem& sys) {
  const int n1 = sys.G1.rows();
  condition_sym(sys.G0, "hodge: G0");
  condition_sym(sys.G1, "hodge: G1");
  condition_sym(sys.G2, "hodge: G2");

  HodgeDecomposition out;
  const Mat G1inv = inverse(sys.G1);
  const Mat S = G1inv * sys.D;  // exact coefficient range
  const Mat Qd = metric_orthonormalize(S, sys.G1);
  out.P_exact = projector_from_basis(Qd, sys.G1);

  // enforce d o d = 0 at matrix level: strip the exact range from D1
  Mat D1p = sys.D1 - sys.D1 * out.P_exact;
  {
    Mat defect = D1p * G1inv * sys.D;
    out.complex_defect = max_abs(defect);
  }

  const Mat Tcols = G1inv * D1p.transposed();  // coexact candidate range
  const Mat Qc = metric_orthonormalize(Tcols, sys.G1);
  out.P_coexact = projector_from_basis(Qc, sys.G1);
  out.P_harmonic = Mat::identity(n1) - out.P_exact - out.P_coexact;
  out.cross_projector = max_abs(out.P_exact * out.P_coexact);

  // Laplacian quadratic form: up part through the test two-vector geometry,
  // down part through the function geometry
  const Mat G2L = cholesky(sys.G2);
  const Mat A_up = D1p.transposed() * solve_cholesky(G2L, D1p);
  const Mat G0L = cholesky(sys.G0);
  const Mat A_down = sys.D * solve_cholesky(G0L, sys.D.transposed());
  Mat A = A_up + A_down;
  // measure the symmetry defect, then symmetrize
  double asym = 0.0;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n1; ++j) asym = std::max(asym, std::fabs(A(i, j) - A(j, i)));
  out.asymmetry = asym;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < i; ++j) {
      const double v = 0.5 * (A(i, j) + A(j, i));
      A(i, j) = A(j, i) = v;
    }
  out.delta1 = G1inv * A;

  // generalized spectrum via the Cholesky reduction of G1
  const Mat L = cholesky(sys.G1);
  const Mat Linv = solve_lu(L, Mat::identity(n1));
  Mat Atil = Linv * A * Linv.transposed();
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < i; ++j) {
      const double v = 0.5 * (Atil(i, j) + Atil(j, i));
      Atil(i, j) = Atil(j, i) = v;
    }
  Mat V;
  jacobi_eigen_sym(Atil, out.eigenvalues, V);
  return out;
}

void write_galerkin_json(const GalerkinSystem& sys, std::ostream& os) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["manifold"] = to_string(sys.config.kind);
  j["dim"] = sys.config.dim;
  j["T"] = sys.config.grid.T;
  j["N"] = sys.config.grid.N;
  j["samples"] = sys.config.samples;
  j["seed"] = sys.config.seed;
  j["basis"] = {{"functions", sys.config.function_basis},
                {"oneforms", sys.config.oneform_basis},
                {"twovectors", sys.config.twovector_basis},
                {"anchors", sys.config.anchors},
                {"hats", sys.config.hats}};
  auto mat = [](const Mat& M) {
    nlohmann::json m;
    m["rows"] = M.rows();
    m["cols"] = M.cols();
    std::vector<double> a(M.data(), M.data() + static_cast<std::size_t>(M.rows()) * M.cols());
    m["data"] = a;  // row-major
    return m;
  };
  j["G0"] = mat(sys.G0);
  j["G1"] = mat(sys.G1);
  j["G2"] = mat(sys.G2);
  j["D"] = mat(sys.D);
  j["D1"] = mat(sys.D1);
  os << j.dump(2) << "\n";
}

void write_spectrum_csv(const HodgeDecomposition& dec, std::ostream& os) {
  os << "index,eigenvalue\n";
  os.precision(17);
  for (std::size_t i = 0; i < dec.eigenvalues.size(); ++i)
    os << i << "," << dec.eigenvalues[i] << "\n";
}

}  // namespace pathlab
