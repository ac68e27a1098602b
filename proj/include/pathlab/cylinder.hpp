#pragma once

#include <vector>

#include "pathlab/hspace.hpp"
#include "pathlab/noise.hpp"
#include "pathlab/sde.hpp"

namespace pathlab {

// Scalar factor <y_{slot}, d> of a cylinder monomial; `slot` indexes the
// evaluation times of the owning object.
struct LinearFactor {
  int slot = 0;
  Vec d;
};

// c * prod_q <y_{slot_q}, d_q>
struct CylMonomial {
  double coeff = 1.0;
  std::vector<LinearFactor> factors;

  double eval(const std::vector<Vec>& pts) const;
  // gradient with respect to slot, ambient vector
  Vec grad(int slot, const std::vector<Vec>& pts, int m) const;
};

// Smooth cylindrical function F(sigma(t_1), ..., sigma(t_k)) given by a
// polynomial in linear forms of the evaluation points; all derivatives are
// symbolic, so the finite-difference checks have no modelling error.
struct CylinderFunction {
  std::vector<int> times;  // node indices, strictly increasing
  std::vector<CylMonomial> terms;

  int arity() const { return static_cast<int>(times.size()); }
  std::vector<Vec> values_at(const ManifoldPath& path) const;
  double eval(const std::vector<Vec>& pts) const;
  double eval(const ManifoldPath& path) const;
  Vec grad(int slot, const std::vector<Vec>& pts, int m) const;
};

// One term of a cylinder 1-form: <c, v_{t_leg}> scaled by a monomial in the
// evaluation points.
struct OneFormTerm {
  int leg = 0;
  Vec c;
  CylMonomial scal;  // coeff and factors; may be the constant monomial
};

struct CylinderOneForm {
  std::vector<int> times;
  std::vector<OneFormTerm> terms;

  std::vector<Vec> values_at(const ManifoldPath& path) const;
  // action on a tangent path (only tangential parts of the coefficients act)
  double apply(const ManifoldPath& path, const TangentPath& v) const;
  // coefficient a_leg at the evaluation points (ambient)
  Vec coeff(int leg, const std::vector<Vec>& pts, int m) const;
  // (D_slot a_leg)_{pq} = d (a_leg)_p / d (y_slot)_q
  Mat dcoeff(int leg, int slot, const std::vector<Vec>& pts, int m) const;
};

// Exact exterior derivative of a cylinder function.
CylinderOneForm d_function(const CylinderFunction& f);

// Cylinder vector field V_t(sigma) = psi(t) X(sigma_t) (c + e <sigma_t, d>),
// smooth in the path through the evaluation point at each time.
struct CylinderVectorField {
  Vec c;
  Vec e;  // empty for a constant section
  Vec d;
  Vec psi;  // (N+1) time weights

  Vec value(const EmbeddedManifold& M, int k, const Vec& x) const;
  // derivative of the value map at time k in ambient direction w
  Vec dvalue(const EmbeddedManifold& M, int k, const Vec& x, const Vec& w) const;
  TangentPath along(const EmbeddedManifold& M, const ManifoldPath& path) const;
};

// d(phi)(V1 ^ V2) evaluated with the Lie-bracket formula on cylinder fields;
// agrees with the tensorial evaluator below to rounding.
double d_oneform_fields(const EmbeddedManifold& M, const CylinderOneForm& phi,
                        const ManifoldPath& path, const CylinderVectorField& V1,
                        const CylinderVectorField& V2);

// Tensorial evaluation of d(phi) on a two-vector.
double d_oneform_two_vector(const CylinderOneForm& phi, const ManifoldPath& path,
                            const TwoVectorOnPath& W);
// same on a single wedge of tangent paths (avoids materializing the grid)
double d_oneform_wedge(const CylinderOneForm& phi, const ManifoldPath& path,
                       const TangentPath& u, const TangentPath& w);

// H-space gradient data of a cylinder function along a framed path.
struct HGradient {
  std::vector<int> times;
  std::vector<Vec> grads;      // tangentially projected d_i F
  TangentPath h1_riesz;        // Riesz representative in the damped geometry
  CameronMartinVector h_dual;  // pulled-back H-form: h -> df(filtered_derivative(h))

  double apply(const TangentPath& v) const;  // df(v) = sum <grad_i, v_{t_i}>
};

HGradient h_gradient(const FramedPath& fp, const CylinderFunction& f);

// Damped-derivative sequence (N x m, left endpoints) of the Riesz
// representative of v -> sum_i <g_i, v_{t_i}> in the damped geometry.
Vec riesz_sequence(const FramedPath& fp, const std::vector<int>& times,
                   const std::vector<Vec>& grads);
// same for the action of a cylinder 1-form along the framed path
Vec oneform_riesz_sequence(const FramedPath& fp, const CylinderOneForm& phi);

// Pullbacks through the solution map. For functions the pullback is
// evaluation along the solved path; for 1-forms both the raw pullback
// h -> phi(TI(h)) and the filtered pullback h -> phi(filtered_derivative(h))
// are exposed.
double pullback_function(const CylinderFunction& f, const ManifoldPath& path);

struct OneFormPullback {
  const EmbeddedManifold* M = nullptr;
  const CylinderOneForm* phi = nullptr;
  const ManifoldPath* path = nullptr;
  const DrivingPath* driver = nullptr;
  const FramedPath* framed = nullptr;

  double raw(const CameronMartinVector& h) const;
  double filtered(const CameronMartinVector& h) const;
};

OneFormPullback pullback_oneform(const EmbeddedManifold& M, const CylinderOneForm& phi,
                                 const ManifoldPath& path, const DrivingPath& w,
                                 const FramedPath& fp);

// Divergence of the elementary H-vector field lambda(x_.(omega)) h on Wiener
// space: lambda * sum_k <hdot_k, dB_k> - d(lambda o I)(h).
double wiener_divergence(const EmbeddedManifold& M, const CylinderFunction& lambda,
                         const CameronMartinVector& h, const DrivingPath& w,
                         const ManifoldPath& path, const FramedPath& fp);

}  // namespace pathlab
