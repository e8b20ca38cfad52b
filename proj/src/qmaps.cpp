#include "qcat/qmaps.hpp"
#include "qcat/fft.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

namespace qcat {

namespace {

long long gcd_ll(long long a, long long b) {
  a = std::llabs(a);
  b = std::llabs(b);
  while (b) {
    long long t = a % b;
    a = b;
    b = t;
  }
  return a;
}

double unitarity_defect(const MatC& U) {
  MatC g = U.adjoint() * U;
  g.diagonal().array() -= 1.0;
  return g.norm();  // Frobenius, an upper bound on the operator norm
}

}  // namespace

Propagator metaplectic(const HilbertSpaceSpec& space, const SymplecticMatrix& S) {
  S.validate();
  if (!S.checkerboard())
    throw ConfigError("matrix fails the checkerboard parity (ab and cd must be even)");
  if (S.b == 0)
    throw ConfigError("kernel path needs b != 0; factor the map instead");
  if (gcd_ll(S.b, space.N) != 1)
    throw ConfigError("kernel path needs gcd(b, N) = 1, got b = " +
                      std::to_string(S.b) + ", N = " + std::to_string(space.N));

  const int N = space.N;
  const long long a = S.a, b = S.b, d = S.d;
  const long long nb = std::llabs(b);
  MatC M(N, N);
  for (int jp = 0; jp < N; ++jp) {
    for (int j = 0; j < N; ++j) {
      cplx s = 0.0;
      for (long long r = 0; r < nb; ++r) {
        // Quadratic phase of the periodized continuum kernel; the image sum
        // over r mod b makes the matrix unitary for |b| > 1.
        long long jr = j + r * N;
        double ph = PI * (double(d) * jp * jp - 2.0 * double(jp) * double(jr) +
                          double(a) * double(jr) * double(jr)) /
                    (double(N) * double(b));
        s += std::exp(cplx(0.0, ph));
      }
      M(jp, j) = s;
    }
  }
  double colnorm = M.col(0).norm();
  if (colnorm == 0.0) throw NumericError("degenerate Gauss-sum column");
  M /= colnorm;

  Propagator prop{space, std::move(M), S, std::nullopt, 0.0};
  prop.unitarity_residual = unitarity_defect(prop.U);
  if (prop.unitarity_residual > 1e-10)
    throw NumericError("metaplectic propagator fails unitarity: " +
                       std::to_string(prop.unitarity_residual));
  return prop;
}

TorusOperator kick_operator(const HilbertSpaceSpec& space,
                            const KickHamiltonian& p) {
  p.validate();
  const int N = space.N;
  auto diagonal_phase = [&](bool momentum) {
    VecC d(N);
    for (int j = 0; j < N; ++j) {
      TorusPoint q = momentum ? TorusPoint(0.0, double(j) / N)
                              : TorusPoint(double(j) / N, 0.0);
      d(j) = std::exp(cplx(0.0, -TWO_PI * N * p.value(q)));
    }
    return d;
  };
  MatC K;
  switch (p.form) {
    case KickForm::Position:
      K = diagonal_phase(false).asDiagonal();
      break;
    case KickForm::Momentum: {
      MatC F = dft(space).M;
      K = F.adjoint() * MatC(diagonal_phase(true).asDiagonal()) * F;
      break;
    }
    case KickForm::General: {
      TrigSymbol f;
      f.c = {};
      for (const auto& [fr, c] : p.coeffs) f.c[fr] = c;
      TorusOperator H = op_N(space, f);
      if (!H.hermitian) throw NumericError("kick Hamiltonian is not hermitian");
      Eigen::SelfAdjointEigenSolver<MatC> es(H.M);
      VecC ph(N);
      for (int j = 0; j < N; ++j)
        ph(j) = std::exp(cplx(0.0, -TWO_PI * N * es.eigenvalues()(j)));
      K = es.eigenvectors() * MatC(ph.asDiagonal()) * es.eigenvectors().adjoint();
      break;
    }
  }
  return TorusOperator::make_unitary(std::move(K));
}

Propagator propagator(const HilbertSpaceSpec& space, const MapSpec& spec) {
  spec.validate();
  Propagator prop = metaplectic(space, spec.linear);
  if (spec.kick) {
    TorusOperator K = kick_operator(space, *spec.kick);
    prop.U = K.M * prop.U;
    prop.kick = spec.kick;
    prop.unitarity_residual = unitarity_defect(prop.U);
    if (prop.unitarity_residual > 1e-10)
      throw NumericError("kicked propagator fails unitarity");
  }
  return prop;
}

Spectrum eigensystem(const Propagator& prop, double residual_tol) {
  const int N = prop.space.N;
  // U is normal, so the Schur form is diagonal up to roundoff and the Schur
  // basis is an orthonormal eigenbasis; robust for the degenerate spectra cat
  // maps produce at special N.
  Eigen::ComplexSchur<MatC> schur(prop.U, true);
  if (schur.info() != Eigen::Success)
    throw NumericError("Schur decomposition failed");
  VecC lam = schur.matrixT().diagonal();
  MatC V = schur.matrixU();

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phases(N);
  for (int k = 0; k < N; ++k) {
    double th = std::arg(lam(k));
    if (th < 0) th += TWO_PI;
    if (th >= TWO_PI) th -= TWO_PI;
    phases[k] = th;
  }
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return phases[i] < phases[j]; });

  Spectrum spec;
  spec.eigenphases.resize(N);
  spec.eigenvectors.resize(N, N);
  for (int k = 0; k < N; ++k) {
    spec.eigenphases[k] = phases[order[k]];
    spec.eigenvectors.col(k) = V.col(order[k]);
  }

  int worst = -1;
  for (int k = 0; k < N; ++k) {
    cplx ev = std::exp(cplx(0.0, spec.eigenphases[k]));
    double res = (prop.U * spec.eigenvectors.col(k) - ev * spec.eigenvectors.col(k)).norm();
    if (res > spec.max_residual) {
      spec.max_residual = res;
      worst = k;
    }
  }
  if (spec.max_residual > residual_tol)
    throw NumericError("eigensystem residual " + std::to_string(spec.max_residual) +
                       " above tolerance at index " + std::to_string(worst));
  MatC g = spec.eigenvectors.adjoint() * spec.eigenvectors;
  g.diagonal().array() -= 1.0;
  spec.orthonormality = g.cwiseAbs().maxCoeff();
  return spec;
}

std::optional<int> quantum_period(const Propagator& prop, int max_p, double tol) {
  MatC A = prop.U;
  for (int p = 1; p <= max_p; ++p) {
    cplx z = A(0, 0);
    if (std::abs(z) > 0.5) {
      cplx phase = z / std::abs(z);
      double dev = (A - phase * MatC::Identity(A.rows(), A.cols()))
                       .cwiseAbs()
                       .maxCoeff();
      if (dev < tol) return p;
    }
    A = prop.U * A;
  }
  return std::nullopt;
}

double operator_norm(const MatC& A, double rel_tol, int max_iter) {
  const int n = int(A.cols());
  if (n == 0) return 0.0;
  Rng rng(fnv1a(&n, sizeof n, 0x9E3779B97F4A7C15ull));
  VecC x(n);
  for (int i = 0; i < n; ++i) x(i) = rng.cnormal();
  x /= x.norm();
  double prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    VecC y = A * x;
    VecC z = A.adjoint() * y;
    double nz = z.norm();
    if (nz == 0.0) return 0.0;
    double est = y.norm();  // ||Ax|| with ||x|| = 1
    x = z / nz;
    if (it > 2 && std::fabs(est - prev) <= rel_tol * std::max(est, 1e-300))
      return est;
    prev = est;
  }
  return prev;
}

TrigSymbol pullback_symbol(const MapSpec& spec, const TrigSymbol& f, int t,
                           const EgorovOptions& opts, double* tail_mass) {
  if (tail_mass) *tail_mass = 0.0;
  if (t == 0) return f;
  if (spec.is_linear()) return f.pullback_linear(spec.linear.pow(t));

  // Kicked map: evaluate f(kappa^t(rho)) on a grid and re-expand by FFT.
  const int G = opts.grid;
  if ((G & (G - 1)) != 0) throw ConfigError("egorov grid must be a power of two");
  std::vector<cplx> g(std::size_t(G) * G);
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      TorusPoint q(double(i) / G, double(j) / G);
      q = apply_map_n(spec, q, t);
      g[std::size_t(i) * G + j] = f.value(q);
    }
  }
  fft2_pow2(g, G, G, false);
  double scale = 1.0 / (double(G) * G);
  double maxc = 0.0;
  for (const cplx& z : g) maxc = std::max(maxc, std::abs(z) * scale);

  TrigSymbol out;
  double kept = 0.0, dropped = 0.0;
  int half = G / 2;
  for (int m = -half; m < half; ++m) {
    for (int n = -half; n < half; ++n) {
      cplx c = g[std::size_t((m + G) % G) * G + ((n + G) % G)] * scale;
      double mag = std::abs(c);
      if (mag <= opts.drop * maxc) continue;
      if (std::abs(m) > opts.cutoff || std::abs(n) > opts.cutoff) {
        dropped += mag;
        continue;
      }
      out.c[{m, n}] = c;
      kept += mag;
    }
  }
  if (tail_mass) *tail_mass = dropped;
  (void)kept;
  return out;
}

EgorovResidual egorov_residual(const HilbertSpaceSpec& space, const MapSpec& spec,
                               const TrigSymbol& f, int t,
                               const EgorovOptions& opts) {
  spec.validate();
  EgorovResidual out;
  if (t == 0) return out;
  TrigSymbol g = pullback_symbol(spec, f, t, opts, &out.tail_mass);
  out.truncated = out.tail_mass > 1e-12;

  Propagator prop = propagator(space, spec);
  MatC Ut = MatC::Identity(space.N, space.N);
  MatC step = t > 0 ? prop.U : MatC(prop.U.adjoint());
  for (int i = 0; i < std::abs(t); ++i) Ut = step * Ut;

  MatC A = op_N(space, f).M;
  MatC B = op_N(space, g).M;
  // ||U^{-t} A U^t - B|| = ||A U^t - U^t B||: conjugation by a unitary drops
  // out of the operator norm.
  out.residual = operator_norm(A * Ut - Ut * B);
  return out;
}

}  // namespace qcat
