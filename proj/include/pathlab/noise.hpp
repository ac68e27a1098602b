#pragma once

#include <cstdint>
#include <functional>

#include "pathlab/hspace.hpp"
#include "pathlab/sde.hpp"
#include "pathlab/transport.hpp"

namespace pathlab {

// Split of the driving increments along a solved path into the part that
// generates the path (btilde, valued in Ker X(x_0)^perp = T_{x_0} M) and the
// redundant part (beta, valued in Ker X(x_0)):
//   dB_k = //~_k dbtilde_k + //~_k dbeta_k,
// with the transports evaluated at the left node. The split is orthogonal,
// so recomposition is exact.
struct NoiseDecomposition {
  TimeGrid grid;
  int m = 0, n = 0;
  Vec btilde;         // N x m, ambient vectors in T_{x0} M
  Vec beta;           // N x m, ambient vectors in Ker X(x0)
  Vec btilde_coords;  // N x n, coordinates in the E_0 frame
  Vec beta_coords;    // N x (m-n), coordinates in the F_0 frame

  const double* btilde_step(int k) const { return btilde.data() + static_cast<std::size_t>(k) * m; }
  const double* beta_step(int k) const { return beta.data() + static_cast<std::size_t>(k) * m; }
};

NoiseDecomposition decompose_noise(const FramedPath& fp, const DrivingPath& w);

// Rebuild a driver from the decomposition with the given redundant
// coordinates (N x (m-n), F_0 frame). With d.beta_coords this returns the
// original driver exactly.
DrivingPath recompose(const FramedPath& fp, const NoiseDecomposition& d, const Vec& beta_coords);

// Fresh i.i.d. redundant increments ~ N(0, dt I) on Ker X(x_0); btilde and
// the transports of the original framed path are kept. Deterministic in
// (seed, sample_index).
DrivingPath resample_redundant(const FramedPath& fp, const NoiseDecomposition& d,
                               std::uint64_t seed, std::uint64_t sample_index = 0);

struct McStats {
  Vec mean;
  Vec stderr_of_mean;
  int samples = 0;
};

using PathFunctional = std::function<Vec(const DrivingPath& resampled, const FramedPath& framed)>;

// Sample mean and component-wise standard error of `functional` over
// resampled drivers sharing btilde. The reduction order is fixed by the
// sample index, so results do not depend on scheduling. A functional failure
// is rethrown with the offending sample index in the message.
McStats conditional_expectation_mc(std::shared_ptr<const EmbeddedManifold> M, const Vec& x0,
                                   const DrivingPath& w, const PathFunctional& functional,
                                   int samples, std::uint64_t seed);
McStats conditional_expectation_mc(const FramedPath& fp, const NoiseDecomposition& d,
                                   const PathFunctional& functional, int samples,
                                   std::uint64_t seed);

// Monte Carlo mean of the conditional two-vector
//   E{ TI(h1)_s ^ TI(h2)_t | path }
// over redundant-noise resamples, accumulated on the full (s,t) triangle.
// The per-sample outer products are accumulated through the batched
// C += A^T B kernel. The mean is projected fiberwise onto the tangent
// spaces of the pinned path; the pre-projection defect (relative, worst
// block) is reported through `tangency_defect` when non-null.
TwoVectorOnPath conditional_wedge_mean(const EmbeddedManifold& M, const FramedPath& fp,
                                       const NoiseDecomposition& d,
                                       const CameronMartinVector& h1,
                                       const CameronMartinVector& h2, int samples,
                                       std::uint64_t seed, double* tangency_defect = nullptr);

}  // namespace pathlab
