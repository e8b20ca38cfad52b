#pragma once

#include "qcat/quantize.hpp"

#include <optional>

namespace qcat {

struct Propagator {
  HilbertSpaceSpec space;
  MatC U;
  SymplecticMatrix linear;
  std::optional<KickHamiltonian> kick;
  double unitarity_residual = 0.0;  // ||U*U - Id||_F, checked < 1e-10

  VecC apply(const VecC& v) const { return U * v; }
  VecC apply_inverse(const VecC& v) const { return U.adjoint() * v; }
};

struct Spectrum {
  std::vector<double> eigenphases;  // sorted in [0, 2 pi)
  MatC eigenvectors;                // column k pairs with eigenphases[k]
  double max_residual = 0.0;        // worst ||U psi - e^{i theta} psi||
  double orthonormality = 0.0;      // ||V*V - Id||_max
};

// Gauss-sum kernel propagator for an integer symplectic matrix.
// Requires the checkerboard parity (ab and cd even), b != 0 and gcd(b,N)=1.
Propagator metaplectic(const HilbertSpaceSpec& space, const SymplecticMatrix& S);

// exp(-2 pi i N Op_N(p)); diagonal closed form for position kicks, conjugated
// diagonal for momentum kicks, hermitian eigendecomposition otherwise.
TorusOperator kick_operator(const HilbertSpaceSpec& space,
                            const KickHamiltonian& p);

// Quantization of kappa = g^1 after the linear map: U = kick * metaplectic.
Propagator propagator(const HilbertSpaceSpec& space, const MapSpec& spec);

Spectrum eigensystem(const Propagator& prop, double residual_tol = 1e-8);

// Smallest P <= max_p with U^P = phase * Id, if any.
std::optional<int> quantum_period(const Propagator& prop, int max_p,
                                  double tol = 1e-8);

// Largest singular value by power iteration on A*A. Deterministic seeded
// start vector.
double operator_norm(const MatC& A, double rel_tol = 1e-10, int max_iter = 2000);

struct EgorovOptions {
  int grid = 1024;        // pullback sampling grid (power of two)
  int cutoff = 160;       // keep re-expanded frequencies |m|,|n| <= cutoff
  double drop = 1e-15;    // drop coefficients below drop * max
};

struct EgorovResidual {
  double residual = 0.0;
  double tail_mass = 0.0;  // re-expansion l1 mass beyond the cutoff
  bool truncated = false;
};

// ||U^{-t} Op_N(f) U^{t} - Op_N(f o kappa^t)||. The pullback is exact
// frequency transport for linear maps and grid re-expansion for kicked maps.
EgorovResidual egorov_residual(const HilbertSpaceSpec& space, const MapSpec& spec,
                               const TrigSymbol& f, int t,
                               const EgorovOptions& opts = {});

// f o kappa^t as a trig polynomial (the classical side of the Egorov check).
TrigSymbol pullback_symbol(const MapSpec& spec, const TrigSymbol& f, int t,
                           const EgorovOptions& opts, double* tail_mass);

}  // namespace qcat
