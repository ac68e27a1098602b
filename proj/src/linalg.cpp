#include "pathlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pathlab {

Mat Mat::transposed() const {
  Mat T(c_, r_);
  for (int i = 0; i < r_; ++i)
    for (int j = 0; j < c_; ++j) T(j, i) = (*this)(i, j);
  return T;
}

Mat& Mat::operator+=(const Mat& o) {
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& o) {
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& v : a_) v *= s;
  return *this;
}

Vec Mat::apply(const Vec& x) const {
  Vec y(r_, 0.0);
  for (int i = 0; i < r_; ++i) {
    const double* ai = row(i);
    double s = 0.0;
    for (int j = 0; j < c_; ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vec Mat::apply_transposed(const Vec& x) const {
  Vec y(c_, 0.0);
  for (int i = 0; i < r_; ++i) {
    const double* ai = row(i);
    for (int j = 0; j < c_; ++j) y[j] += ai[j] * x[i];
  }
  return y;
}

Mat operator*(const Mat& A, const Mat& B) {
  Mat C(A.rows(), B.cols());
  for (int i = 0; i < A.rows(); ++i) {
    for (int k = 0; k < A.cols(); ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      const double* bk = B.row(k);
      double* ci = C.row(i);
      for (int j = 0; j < B.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return C;
}

Mat operator+(Mat A, const Mat& B) { A += B; return A; }
Mat operator-(Mat A, const Mat& B) { A -= B; return A; }
Mat operator*(double s, Mat A) { A *= s; return A; }

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vec operator*(double s, Vec v) {
  for (double& x : v) x *= s;
  return v;
}

Vec operator+(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

Vec operator-(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

Mat outer(const Vec& a, const Vec& b) {
  Mat M(static_cast<int>(a.size()), static_cast<int>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) M(static_cast<int>(i), static_cast<int>(j)) = a[i] * b[j];
  return M;
}

double frobenius(const Mat& A) {
  double s = 0.0;
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) s += A(i, j) * A(i, j);
  return std::sqrt(s);
}

double max_abs(const Mat& A) {
  double s = 0.0;
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) s = std::max(s, std::fabs(A(i, j)));
  return s;
}

double max_abs(const Vec& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::fabs(x));
  return s;
}

Mat solve_lu(Mat A, Mat B) {
  const int n = A.rows();
  if (A.cols() != n || B.rows() != n) throw std::invalid_argument("solve_lu: shape mismatch");
  std::vector<int> piv(n);
  std::iota(piv.begin(), piv.end(), 0);
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::fabs(A(k, k));
    for (int i = k + 1; i < n; ++i) {
      if (std::fabs(A(i, k)) > best) { best = std::fabs(A(i, k)); p = i; }
    }
    if (best < 1e-300) throw std::runtime_error("solve_lu: singular matrix");
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(A(k, j), A(p, j));
      for (int j = 0; j < B.cols(); ++j) std::swap(B(k, j), B(p, j));
    }
    const double inv = 1.0 / A(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double f = A(i, k) * inv;
      if (f == 0.0) continue;
      A(i, k) = f;
      for (int j = k + 1; j < n; ++j) A(i, j) -= f * A(k, j);
      for (int j = 0; j < B.cols(); ++j) B(i, j) -= f * B(k, j);
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    const double inv = 1.0 / A(k, k);
    for (int j = 0; j < B.cols(); ++j) {
      double s = B(k, j);
      for (int i = k + 1; i < n; ++i) s -= A(k, i) * B(i, j);
      B(k, j) = s * inv;
    }
  }
  return B;
}

Mat inverse(const Mat& A) { return solve_lu(A, Mat::identity(A.rows())); }

Mat cholesky(const Mat& A) {
  const int n = A.rows();
  Mat L(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = A(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
  return L;
}

Mat solve_cholesky(const Mat& L, Mat B) {
  const int n = L.rows();
  for (int j = 0; j < B.cols(); ++j) {
    for (int i = 0; i < n; ++i) {
      double s = B(i, j);
      for (int k = 0; k < i; ++k) s -= L(i, k) * B(k, j);
      B(i, j) = s / L(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = B(i, j);
      for (int k = i + 1; k < n; ++k) s -= L(k, i) * B(k, j);
      B(i, j) = s / L(i, i);
    }
  }
  return B;
}

Vec solve_cholesky(const Mat& L, const Vec& b) {
  Mat B(static_cast<int>(b.size()), 1);
  for (std::size_t i = 0; i < b.size(); ++i) B(static_cast<int>(i), 0) = b[i];
  Mat X = solve_cholesky(L, std::move(B));
  Vec x(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) x[i] = X(static_cast<int>(i), 0);
  return x;
}

void jacobi_eigen_sym(Mat A, Vec& evals, Mat& evecs) {
  const int n = A.rows();
  evecs = Mat::identity(n);
  const int max_sweeps = 128;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (off < 1e-300) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = evecs(k, p), vkq = evecs(k, q);
          evecs(k, p) = c * vkp - s * vkq;
          evecs(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  evals.assign(n, 0.0);
  for (int i = 0; i < n; ++i) evals[i] = A(i, i);
  // sort ascending, permuting eigenvector columns alongside
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return evals[a] < evals[b]; });
  Vec ev(n);
  Mat V(n, n);
  for (int j = 0; j < n; ++j) {
    ev[j] = evals[order[j]];
    for (int i = 0; i < n; ++i) V(i, j) = evecs(i, order[j]);
  }
  evals = std::move(ev);
  evecs = std::move(V);
}

int gram_schmidt(Mat& A, double rank_tol) {
  const int m = A.rows(), n = A.cols();
  double scale = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += A(i, j) * A(i, j);
    scale = std::max(scale, std::sqrt(s));
  }
  if (scale == 0.0) return 0;
  int rank = 0;
  for (int j = 0; j < n; ++j) {
    // orthogonalize column j against the accepted columns, twice for stability
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < rank; ++k) {
        double p = 0.0;
        for (int i = 0; i < m; ++i) p += A(i, k) * A(i, j);
        for (int i = 0; i < m; ++i) A(i, j) -= p * A(i, k);
      }
    }
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += A(i, j) * A(i, j);
    s = std::sqrt(s);
    if (s > rank_tol * scale) {
      const double inv = 1.0 / s;
      if (j != rank) {
        for (int i = 0; i < m; ++i) { A(i, rank) = A(i, j); A(i, j) = 0.0; }
      }
      for (int i = 0; i < m; ++i) A(i, rank) *= inv;
      ++rank;
    } else {
      for (int i = 0; i < m; ++i) A(i, j) = 0.0;
    }
  }
  for (int j = rank; j < n; ++j)
    for (int i = 0; i < m; ++i) A(i, j) = 0.0;
  return rank;
}

}  // namespace pathlab
