#pragma once

#include "pathlab/geometry.hpp"
#include "pathlab/paths.hpp"

namespace pathlab {

// Wiener path with increments ~ N(0, dt I_m), deterministic in (m, grid, seed).
DrivingPath sample_driving_path(int m, const TimeGrid& grid, std::uint64_t seed);

// Stratonovich Heun step with nearest-point retraction:
//   x* = x + X(x) dB,   x' = project(x + (X(x) + X(x*)) dB / 2).
// Every node is retracted, so the manifold constraint holds exactly per step.
ManifoldPath solve_gradient_sde(const EmbeddedManifold& M, const Vec& x0, const DrivingPath& w);

// Derivative of the discrete solution map along the solved path. The tangent
// recursion is the exact differential of the Heun-with-retraction step, so a
// finite difference of the solver matches it to O(eps) with no discretization
// gap. With h present and v0 = 0 this is the H-derivative of the solution map
// in direction h; with h absent it is the derivative flow applied to v0.
TangentPath flow_and_ito_derivative(const EmbeddedManifold& M, const ManifoldPath& path,
                                    const DrivingPath& w, const CameronMartinVector* h,
                                    const Vec* v0 = nullptr);

TangentPath ito_map_derivative(const EmbeddedManifold& M, const ManifoldPath& path,
                               const DrivingPath& w, const CameronMartinVector& h);

TangentPath derivative_flow(const EmbeddedManifold& M, const ManifoldPath& path,
                            const DrivingPath& w, const Vec& v0);

// One pass producing the path plus the H-derivatives for up to two
// Cameron-Martin directions; the Monte Carlo loops use this to share the
// projector evaluations between channels.
void solve_with_derivatives(const EmbeddedManifold& M, const Vec& x0, const DrivingPath& w,
                            const CameronMartinVector* h1, const CameronMartinVector* h2,
                            ManifoldPath& path, TangentPath* v1, TangentPath* v2);

}  // namespace pathlab
