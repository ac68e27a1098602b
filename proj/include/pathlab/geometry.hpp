#pragma once

#include <memory>
#include <string>

#include "pathlab/linalg.hpp"
#include "pathlab/rng.hpp"

namespace pathlab {

enum class ManifoldKind { Sphere, Circle, CliffordTorus };

std::string to_string(ManifoldKind k);

// Tolerance for accepting a nominally on-manifold input; points within it are
// retracted by the nearest-point projection, points beyond it are rejected.
inline constexpr double kOnManifoldTol = 1e-8;

// Orthogonal projections at a point: X onto the tangent space, K onto the
// normal space, with X + K = I.
struct TangentFrameData {
  Mat X;  // m x m projector onto T_x M
  Mat K;  // m x m projector onto nu_x M
  Vec base_point;
};

// Curvature data at a point, expressed in an orthonormal tangent frame.
// `frame` has the frame vectors as columns (m x n); two-vector operators act
// on wedge coordinates indexed by frame pairs (i,j), i<j, in lexicographic
// order.
//
// Sign conventions, fixed once for the whole project:
//   R(u,v)w = nabla_u nabla_v w - nabla_v nabla_u w - nabla_{[u,v]} w,
//   <curv_op(u ^ v), w ^ z> = <R(u,v)z, w>,
// so the curvature operator of the unit 2-sphere is +1 on its (single)
// wedge direction. The Weitzenboeck operator on 2-vectors is
//   weitzenbock2(u ^ v) = Ric u ^ v + u ^ Ric v - 2 curv_op(u ^ v),
// which vanishes on flat instances and on Sphere(2).
struct CurvaturePackage {
  Vec base_point;
  Mat frame;         // m x n orthonormal tangent frame
  Mat ric_sharp;     // n x n, frame coordinates
  Mat curv_op;       // lam x lam, lam = n(n-1)/2
  Mat weitzenbock2;  // lam x lam

  int n() const { return frame.cols(); }
  int lam() const { return curv_op.rows(); }

  Vec apply_ric_ambient(const Vec& u) const;
  // Apply a wedge-coordinate operator to an antisymmetric ambient matrix.
  Mat apply_wedge_op_ambient(const Mat& op, const Mat& G) const;
};

// Compact manifold isometrically embedded in R^m. Points and tangent vectors
// are ambient m-vectors throughout; there are no charts. The projector field
// and the nearest-point retraction are extended analytically to a
// neighbourhood of M so they can be differentiated exactly.
class EmbeddedManifold {
 public:
  virtual ~EmbeddedManifold() = default;

  ManifoldKind kind() const { return kind_; }
  int ambient_dim() const { return m_; }
  int intrinsic_dim() const { return n_; }
  int codim() const { return m_ - n_; }

  virtual void constraint(const double* x, double* out) const = 0;  // m-n values
  virtual void project(double* y) const = 0;                        // nearest-point retraction
  virtual void dproject(const double* y, const double* w, double* out) const = 0;
  virtual void tangent_projector(const double* y, double* X) const = 0;  // extended field
  // derivative of y -> X(y) e in ambient direction w, at y near M
  virtual void dX(const double* y, const double* w, const double* e, double* out) const = 0;
  // second fundamental form alpha(u,v) in nu_x M, for x on M and u,v tangent
  virtual void second_fundamental(const double* x, const double* u, const double* v,
                                  double* out) const = 0;
  // geodesic exp_x(t v) for test oracles
  virtual void geodesic(const double* x, const double* v, double t, double* out) const = 0;

  // convenience wrappers
  Vec constraint(const Vec& x) const;
  Vec project(Vec y) const;
  double constraint_norm(const Vec& x) const;
  Vec apply_tangent(const Vec& x, const Vec& e) const;   // X(x) e
  Vec apply_normal(const Vec& x, const Vec& e) const;    // K(x) e
  Mat tangent_projector_mat(const Vec& x) const;
  // deterministic orthonormal frames at x: tangent (m x n) and normal (m x (m-n))
  Mat tangent_frame(const Vec& x) const;
  Mat normal_frame(const Vec& x) const;
  Vec random_point(const CounterRng& rng, std::uint64_t stream, std::uint64_t block) const;
  Vec random_tangent(const Vec& x, const CounterRng& rng, std::uint64_t stream,
                     std::uint64_t block) const;

  // Validates x against kOnManifoldTol and returns the retracted point.
  Vec require_on_manifold(const Vec& x) const;

 protected:
  EmbeddedManifold(ManifoldKind kind, int m, int n) : kind_(kind), m_(m), n_(n) {}

 private:
  ManifoldKind kind_;
  int m_, n_;
};

std::shared_ptr<const EmbeddedManifold> construct_manifold(ManifoldKind kind, int n);

TangentFrameData projections(const EmbeddedManifold& M, const Vec& x);

// nabla_v X (e): tangential part of the derivative of y -> X(y) e along v,
// equal to the shape-operator pairing A(v, K_x e).
Vec nabla_X(const EmbeddedManifold& M, const Vec& x, const Vec& v, const Vec& e);

CurvaturePackage curvature_package(const EmbeddedManifold& M, const Vec& x);

// Wedge-coordinate helpers shared by transport and the two-vector calculus.
int wedge_dim(int n);
// coords of an antisymmetric matrix G (m x m) in the wedge frame of E (m x n)
Vec wedge_coords(const Mat& E, const Mat& G);
// inverse: antisymmetric ambient matrix from wedge coordinates
Mat wedge_from_coords(const Mat& E, const Vec& lam);

}  // namespace pathlab
