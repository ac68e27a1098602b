#pragma once

#include <cstddef>
#include <vector>

namespace pathlab {

using Vec = std::vector<double>;

// Dense row-major matrix, sized for the small systems appearing here
// (per-node frames, Gram matrices, Galerkin blocks).
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0)
      : r_(rows), c_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}

  static Mat identity(int n) {
    Mat I(n, n);
    for (int i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  bool empty() const { return a_.empty(); }

  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * c_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * c_ + j]; }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }
  double* row(int i) { return a_.data() + static_cast<std::size_t>(i) * c_; }
  const double* row(int i) const { return a_.data() + static_cast<std::size_t>(i) * c_; }

  Mat transposed() const;

  Mat& operator+=(const Mat& o);
  Mat& operator-=(const Mat& o);
  Mat& operator*=(double s);

  Vec apply(const Vec& x) const;          // y = A x
  Vec apply_transposed(const Vec& x) const;  // y = A^T x

 private:
  int r_ = 0, c_ = 0;
  Vec a_;
};

Mat operator*(const Mat& A, const Mat& B);
Mat operator+(Mat A, const Mat& B);
Mat operator-(Mat A, const Mat& B);
Mat operator*(double s, Mat A);

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
void axpy(double alpha, const Vec& x, Vec& y);
Vec operator*(double s, Vec v);
Vec operator+(Vec a, const Vec& b);
Vec operator-(Vec a, const Vec& b);

Mat outer(const Vec& a, const Vec& b);
double frobenius(const Mat& A);
double max_abs(const Mat& A);
double max_abs(const Vec& v);

// Solve A X = B by LU with partial pivoting. Throws on singular A.
Mat solve_lu(Mat A, Mat B);
Mat inverse(const Mat& A);

// Cholesky factor L (lower) of a symmetric positive definite A.
Mat cholesky(const Mat& A);
Mat solve_cholesky(const Mat& L, Mat B);        // A X = B given A = L L^T
Vec solve_cholesky(const Mat& L, const Vec& b);

// Cyclic Jacobi eigensolver for symmetric A. Eigenvalues ascending,
// eigenvectors as columns of V.
void jacobi_eigen_sym(Mat A, Vec& evals, Mat& evecs);

// In-place modified Gram-Schmidt on the columns of A. Returns the rank found;
// columns past the rank are zeroed. Columns with projected norm below
// rank_tol (relative to the largest input column) are dropped.
int gram_schmidt(Mat& A, double rank_tol = 1e-10);

}  // namespace pathlab
