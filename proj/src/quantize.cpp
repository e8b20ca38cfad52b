#include "qcat/quantize.hpp"

namespace qcat {

TorusOperator TorusOperator::make_hermitian(MatC m, double tol) {
  double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > tol)
    throw NumericError("operator fails hermitian check, deviation " +
                       std::to_string(dev));
  return {std::move(m), true, false};
}

TorusOperator TorusOperator::make_unitary(MatC m, double tol) {
  MatC g = m.adjoint() * m;
  g.diagonal().array() -= 1.0;
  double dev = g.cwiseAbs().maxCoeff();
  if (dev > tol)
    throw NumericError("operator fails unitary check, deviation " +
                       std::to_string(dev));
  return {std::move(m), false, true};
}

TrigSymbol TrigSymbol::constant(double v) {
  TrigSymbol f;
  if (v != 0.0) f.c[{0, 0}] = v;
  return f;
}

TrigSymbol TrigSymbol::monomial(int m, int n, cplx coeff) {
  TrigSymbol f;
  f.c[{m, n}] = coeff;
  return f;
}

TrigSymbol TrigSymbol::cosine_x(int k, double amplitude) {
  TrigSymbol f;
  f.c[{k, 0}] = amplitude / 2.0;
  f.c[{-k, 0}] = amplitude / 2.0;
  return f;
}

TrigSymbol TrigSymbol::cosine_xi(int k, double amplitude) {
  TrigSymbol f;
  f.c[{0, k}] = amplitude / 2.0;
  f.c[{0, -k}] = amplitude / 2.0;
  return f;
}

bool TrigSymbol::is_real(double tol) const {
  for (const auto& [f, coeff] : c) {
    auto it = c.find({-f.first, -f.second});
    if (it == c.end() || std::abs(it->second - std::conj(coeff)) > tol)
      return false;
  }
  return true;
}

double TrigSymbol::coeff_abs_sum() const {
  double s = 0.0;
  for (const auto& [f, coeff] : c) s += std::abs(coeff);
  return s;
}

cplx TrigSymbol::value(const TorusPoint& p) const {
  cplx s = 0.0;
  for (const auto& [f, coeff] : c) {
    double ph = TWO_PI * (f.first * p.x + f.second * p.xi);
    s += coeff * cplx(std::cos(ph), std::sin(ph));
  }
  return s;
}

TrigSymbol TrigSymbol::pullback_linear(const SymplecticMatrix& S) const {
  TrigSymbol g;
  for (const auto& [f, coeff] : c) {
    long long m = S.a * f.first + S.c * f.second;
    long long n = S.b * f.first + S.d * f.second;
    g.c[{int(m), int(n)}] += coeff;
  }
  return g;
}

int TrigSymbol::max_frequency() const {
  int mx = 0;
  for (const auto& [f, coeff] : c)
    mx = std::max({mx, std::abs(f.first), std::abs(f.second)});
  return mx;
}

TorusOperator translation_operator(const HilbertSpaceSpec& space, int m, int n) {
  const int N = space.N;
  MatC T = MatC::Zero(N, N);
  cplx w = std::exp(cplx(0.0, PI * double(m) * double(n) / N));
  for (int j = 0; j < N; ++j) {
    int jp = ((j - n) % N + N) % N;
    // phase uses the unreduced j - n; it differs from jp by a period, and
    // e^{2 pi i m (j-n)/N} is N-periodic in its argument, so jp is safe.
    cplx ph = std::exp(cplx(0.0, TWO_PI * double(m) * double(j - n) / N));
    T(jp, j) = w * ph;
  }
  return {std::move(T), false, true};
}

TorusOperator op_N(const HilbertSpaceSpec& space, const TrigSymbol& f) {
  const int N = space.N;
  MatC A = MatC::Zero(N, N);
  for (const auto& [freq, coeff] : f.c)
    A += coeff * translation_operator(space, freq.first, freq.second).M;
  TorusOperator out = TorusOperator::plain(std::move(A));
  out.hermitian = f.is_real() &&
                  (out.M - out.M.adjoint()).cwiseAbs().maxCoeff() < 1e-10;
  return out;
}

cplx expectation(const VecC& psi, const TorusOperator& A) {
  if (psi.size() != A.M.rows()) throw ConfigError("state/operator dimension mismatch");
  return psi.dot(A.M * psi);  // Eigen's dot conjugates the left argument
}

TorusOperator dft(const HilbertSpaceSpec& space) {
  const int N = space.N;
  MatC F(N, N);
  double s = 1.0 / std::sqrt(double(N));
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < N; ++k)
      F(j, k) = s * std::exp(cplx(0.0, -TWO_PI * double(j) * double(k) / N));
  return {std::move(F), false, true};
}

VecC basis_state(const HilbertSpaceSpec& space, int j) {
  VecC v = VecC::Zero(space.N);
  v(((j % space.N) + space.N) % space.N) = 1.0;
  return v;
}

VecC uniform_superposition(const HilbertSpaceSpec& space) {
  return VecC::Constant(space.N, cplx(1.0 / std::sqrt(double(space.N)), 0.0));
}

VecC random_state(const HilbertSpaceSpec& space, std::uint64_t seed) {
  Rng rng(seed);
  VecC v(space.N);
  for (int j = 0; j < space.N; ++j) v(j) = rng.cnormal();
  v /= v.norm();
  return v;
}

VecC coherent_state(const HilbertSpaceSpec& space, const TorusPoint& p) {
  const int N = space.N;
  VecC v(N);
  for (int j = 0; j < N; ++j) {
    cplx s = 0.0;
    for (int w = -5; w <= 5; ++w) {
      double u = double(j) / N - p.x + w;
      // Gaussian e^{-(x-x0)^2/(2 hbar)} = e^{-pi N (x-x0)^2}, width sqrt(hbar).
      s += std::exp(cplx(-PI * N * u * u, TWO_PI * N * p.xi * u));
    }
    v(j) = s;
  }
  double norm = v.norm();
  if (norm == 0.0) throw NumericError("coherent state vanished");
  return v / norm;
}

std::vector<double> husimi(const HilbertSpaceSpec& space, const VecC& psi,
                           int resolution) {
  if (resolution < space.N) throw ConfigError("husimi resolution must be >= N");
  std::vector<double> grid(std::size_t(resolution) * resolution);
  double total = 0.0;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      VecC c = coherent_state(space, TorusPoint(double(i) / resolution,
                                                double(j) / resolution));
      double v = std::norm(c.dot(psi));
      grid[std::size_t(i) * resolution + j] = v;
      total += v;
    }
  }
  for (double& g : grid) g /= total;
  return grid;
}

}  // namespace qcat
