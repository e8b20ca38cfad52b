#pragma once

#include "qcat/classical.hpp"
#include "qcat/common.hpp"

#include <Eigen/Dense>

#include <map>

namespace qcat {

using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;

// Dimension N with hbar = 1/(2 pi N), d = 1.
struct HilbertSpaceSpec {
  int N = 1;

  explicit HilbertSpaceSpec(int N_) : N(N_) {
    if (N < 1) throw ConfigError("Hilbert space dimension must be >= 1");
  }
  double hbar() const { return 1.0 / (TWO_PI * N); }
};

// Position-basis matrix plus verified structure tags.
struct TorusOperator {
  MatC M;
  bool hermitian = false;
  bool unitary = false;

  static TorusOperator plain(MatC m) { return {std::move(m), false, false}; }
  static TorusOperator make_hermitian(MatC m, double tol = 1e-10);
  static TorusOperator make_unitary(MatC m, double tol = 1e-10);

  int dim() const { return int(M.rows()); }
};

// Finite Fourier sum f = sum c_{m,n} e^{2 pi i (m x + n xi)}.
struct TrigSymbol {
  std::map<std::pair<int, int>, cplx> c;

  static TrigSymbol constant(double v);
  static TrigSymbol monomial(int m, int n, cplx coeff = 1.0);
  static TrigSymbol cosine_x(int k, double amplitude);   // amplitude*cos(2 pi k x)
  static TrigSymbol cosine_xi(int k, double amplitude);

  bool is_real(double tol = 1e-12) const;
  double coeff_abs_sum() const;
  cplx value(const TorusPoint& p) const;
  // f mapsto f ∘ S: frequency (m,n) -> S^T (m,n), coefficients unchanged.
  TrigSymbol pullback_linear(const SymplecticMatrix& S) const;
  int max_frequency() const;
};

// Op_N(e^{2 pi i (m x + n xi)}): e_j -> e^{i pi m n / N} e^{2 pi i m (j-n)/N} e_{j-n}.
TorusOperator translation_operator(const HilbertSpaceSpec& space, int m, int n);

// Weyl quantization of a trig polynomial; hermitian tag iff the symbol is real.
TorusOperator op_N(const HilbertSpaceSpec& space, const TrigSymbol& f);

cplx expectation(const VecC& psi, const TorusOperator& A);

// Entries N^{-1/2} e^{-2 pi i jk/N}.
TorusOperator dft(const HilbertSpaceSpec& space);

VecC basis_state(const HilbertSpaceSpec& space, int j);
VecC uniform_superposition(const HilbertSpaceSpec& space);
VecC random_state(const HilbertSpaceSpec& space, std::uint64_t seed);

// Normalized periodized Gaussian of width sqrt(hbar) centered at p.
VecC coherent_state(const HilbertSpaceSpec& space, const TorusPoint& p);

// |<coherent(grid), psi>|^2 on a res x res grid (row = x index, col = xi
// index), normalized to total 1.
std::vector<double> husimi(const HilbertSpaceSpec& space, const VecC& psi,
                           int resolution);

}  // namespace qcat
