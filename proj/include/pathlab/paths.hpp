#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pathlab/linalg.hpp"

namespace pathlab {

struct TimeGrid {
  double T = 1.0;
  int N = 2;

  double dt() const { return T / N; }
  double t(int k) const { return T * k / N; }
  bool operator==(const TimeGrid& o) const { return T == o.T && N == o.N; }
  bool operator!=(const TimeGrid& o) const { return !(*this == o); }
};

void require_grid(const TimeGrid& g);  // throws unless T > 0 and N >= 2

// Discretized R^m Wiener path: Gaussian increments on a uniform grid,
// with the generating seed recorded.
struct DrivingPath {
  TimeGrid grid;
  int m = 0;
  std::uint64_t seed = 0;
  Vec inc;  // N x m, increment k at [k*m, (k+1)*m)

  double* step(int k) { return inc.data() + static_cast<std::size_t>(k) * m; }
  const double* step(int k) const { return inc.data() + static_cast<std::size_t>(k) * m; }
  Vec cumulative(int k) const;  // B_{t_k} = sum of increments before k
};

// Solved path on the manifold.
struct ManifoldPath {
  TimeGrid grid;
  int m = 0;
  Vec nodes;  // (N+1) x m

  double* node(int k) { return nodes.data() + static_cast<std::size_t>(k) * m; }
  const double* node(int k) const { return nodes.data() + static_cast<std::size_t>(k) * m; }
  Vec node_vec(int k) const { return Vec(node(k), node(k) + m); }
};

// Cameron-Martin direction: piecewise-constant derivative on grid steps.
struct CameronMartinVector {
  TimeGrid grid;
  int m = 0;
  Vec hdot;  // N x m

  double* step(int k) { return hdot.data() + static_cast<std::size_t>(k) * m; }
  const double* step(int k) const { return hdot.data() + static_cast<std::size_t>(k) * m; }
  double h_norm_sq() const;  // sum |hdot_k|^2 dt
};

double cm_inner(const CameronMartinVector& a, const CameronMartinVector& b);

// Vector field along a path, stored as ambient vectors per node.
struct TangentPath {
  TimeGrid grid;
  int m = 0;
  Vec v;  // (N+1) x m

  double* node(int k) { return v.data() + static_cast<std::size_t>(k) * m; }
  const double* node(int k) const { return v.data() + static_cast<std::size_t>(k) * m; }
  Vec node_vec(int k) const { return Vec(node(k), node(k) + m); }
  double sup_norm() const;
};

// CSV export with columns t, x1..xm.
void write_path_csv(const ManifoldPath& path, std::ostream& os);

// Halve the resolution of a driver by summing adjacent increments (the
// Brownian-tree coarsening used by refinement studies). N must be even.
DrivingPath coarsen(const DrivingPath& w);

}  // namespace pathlab
