#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "pathlab/cylinder.hpp"

namespace pathlab {

struct GalerkinConfig {
  ManifoldKind kind = ManifoldKind::Sphere;
  int dim = 2;
  TimeGrid grid{1.0, 200};
  int function_basis = 6;   // products of <= 2 coordinate evaluations
  int oneform_basis = 12;   // coordinate covectors plus modulated covectors
  int twovector_basis = 6;  // test elements V + Q(V)
  int anchors = 2;          // evaluation times j T / anchors, j = 1..anchors
  int hats = 2;             // hat profiles for the H1 fitting directions
  int samples = 256;        // shared path ensemble (common random numbers)
  std::uint64_t seed = 1;
};

// Finite-rank Galerkin data assembled by Monte Carlo over one shared path
// ensemble. G0/G1/G2 are the Gram matrices of the function, 1-form and test
// two-vector bases; D pairs exterior derivatives of basis functions with the
// 1-form basis and D1 pairs exterior derivatives of basis 1-forms with the
// test two-vectors. d o d = 0 is enforced at matrix level by projecting D1
// onto the annihilator of the exact coefficient range (see hodge_decompose).
struct GalerkinSystem {
  GalerkinConfig config;
  std::vector<CylinderFunction> function_basis;
  std::vector<CylinderOneForm> oneform_basis;
  Mat G0;  // n0 x n0
  Mat G1;  // n1 x n1
  Mat G2;  // n2 x n2
  Mat D;   // n1 x n0
  Mat D1;  // n2 x n1 (raw pairings, before the complex-structure projection)
};

GalerkinSystem assemble_galerkin(const GalerkinConfig& cfg);

struct HodgeDecomposition {
  Vec eigenvalues;       // generalized spectrum of the 1-form Laplacian
  Mat delta1;            // operator matrix on 1-form coefficients
  double asymmetry = 0;  // G1-symmetry defect before symmetrization
  Mat P_exact;           // projector onto the image of d (coefficient space)
  Mat P_coexact;         // projector onto the image of d1^*
  Mat P_harmonic;        // complement projector = kernel of the Laplacian
  double cross_projector = 0;  // |P_exact P_coexact|
  double complex_defect = 0;   // |D1 G1^{-1} D| after enforcement
};

HodgeDecomposition hodge_decompose(const GalerkinSystem& sys);

void write_galerkin_json(const GalerkinSystem& sys, std::ostream& os);
void write_spectrum_csv(const HodgeDecomposition& dec, std::ostream& os);

}  // namespace pathlab
