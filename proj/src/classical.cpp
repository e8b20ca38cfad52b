#include "qcat/classical.hpp"
#include "qcat/partitions.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>

namespace qcat {

std::string fnv1a_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw NumericError("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0)
      throw NumericError("loglog_slope: nonpositive data");
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  double n = double(x.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SymplecticMatrix SymplecticMatrix::pow(int t) const {
  SymplecticMatrix base = t >= 0 ? *this : inverse();
  int k = t >= 0 ? t : -t;
  SymplecticMatrix r;  // identity
  for (int i = 0; i < k; ++i) r = r * base;
  return r;
}

double SymplecticMatrix::lambda_max() const {
  double t = std::fabs(double(trace()));
  if (t <= 2.0) return 0.0;
  return std::log(t / 2.0 + std::sqrt(t * t / 4.0 - 1.0));
}

void SymplecticMatrix::validate() const {
  if (det() != 1)
    throw ConfigError("matrix determinant must be exactly 1, got " +
                      std::to_string(det()));
}

KickHamiltonian KickHamiltonian::cosine(KickForm form, int k, double amplitude) {
  if (k <= 0) throw ConfigError("cosine kick needs a positive harmonic");
  KickHamiltonian p;
  p.form = form;
  std::pair<int, int> fp = form == KickForm::Momentum ? std::pair{0, k}
                                                      : std::pair{k, 0};
  std::pair<int, int> fm = {-fp.first, -fp.second};
  p.coeffs[fp] = cplx(amplitude / 2.0, 0.0);
  p.coeffs[fm] = cplx(amplitude / 2.0, 0.0);
  p.validate();
  return p;
}

void KickHamiltonian::validate() const {
  for (const auto& [f, c] : coeffs) {
    auto it = coeffs.find({-f.first, -f.second});
    if (it == coeffs.end() || std::abs(it->second - std::conj(c)) > 1e-14)
      throw ConfigError("kick coefficients must satisfy c(-m,-n) = conj(c(m,n))");
    if (form == KickForm::Position && f.second != 0)
      throw ConfigError("position-form kick has a nonzero xi-frequency");
    if (form == KickForm::Momentum && f.first != 0)
      throw ConfigError("momentum-form kick has a nonzero x-frequency");
  }
}

double KickHamiltonian::amplitude() const {
  double s = 0.0;
  for (const auto& [f, c] : coeffs) s += std::abs(c);
  return s;
}

namespace {

// Sum of c * (2 pi i m)^ax (2 pi i n)^axi * e^{2 pi i (m x + n xi)}, real part.
double trig_deriv(const KickHamiltonian& p, const TorusPoint& q, int ax, int axi) {
  cplx s = 0.0;
  for (const auto& [f, c] : p.coeffs) {
    cplx w = c;
    for (int i = 0; i < ax; ++i) w *= cplx(0.0, TWO_PI * f.first);
    for (int i = 0; i < axi; ++i) w *= cplx(0.0, TWO_PI * f.second);
    double ph = TWO_PI * (f.first * q.x + f.second * q.xi);
    s += w * cplx(std::cos(ph), std::sin(ph));
  }
  return s.real();
}

}  // namespace

double KickHamiltonian::value(const TorusPoint& p) const { return trig_deriv(*this, p, 0, 0); }
double KickHamiltonian::dx(const TorusPoint& p) const { return trig_deriv(*this, p, 1, 0); }
double KickHamiltonian::dxi(const TorusPoint& p) const { return trig_deriv(*this, p, 0, 1); }
double KickHamiltonian::dxx(const TorusPoint& p) const { return trig_deriv(*this, p, 2, 0); }
double KickHamiltonian::dxxi(const TorusPoint& p) const { return trig_deriv(*this, p, 1, 1); }
double KickHamiltonian::dxixi(const TorusPoint& p) const { return trig_deriv(*this, p, 0, 2); }

void MapSpec::validate() const {
  linear.validate();
  if (!linear.hyperbolic())
    throw ConfigError("map is not hyperbolic: |trace| = " +
                      std::to_string(std::llabs(linear.trace())) + " <= 2");
  if (kick) kick->validate();
}

namespace {

// Hamiltonian vector field of p: (dx/dt, dxi/dt) = (dp/dxi, -dp/dx),
// integrated with an embedded Fehlberg 4(5) pair. State is the point plus,
// optionally, the two columns of the variational matrix.
struct FlowState {
  double x, xi;
  Mat2 J;
};

FlowState flow_rhs(const KickHamiltonian& p, const FlowState& s, bool with_J) {
  TorusPoint q(s.x, s.xi);
  FlowState d{};
  d.x = p.dxi(q);
  d.xi = -p.dx(q);
  if (with_J) {
    // A = [[p_xix, p_xixi], [-p_xx, -p_xxi]], dJ/dt = A J
    double pxx = p.dxx(q), pxxi = p.dxxi(q), pxixi = p.dxixi(q);
    Mat2 A = {{{pxxi, pxixi}, {-pxx, -pxxi}}};
    d.J = mat2_mul(A, s.J);
  }
  return d;
}

FlowState axpy(const FlowState& a, double h, const FlowState& b, bool with_J) {
  FlowState r = a;
  r.x += h * b.x;
  r.xi += h * b.xi;
  if (with_J)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.J[i][j] += h * b.J[i][j];
  return r;
}

FlowState integrate_kick_flow(const KickHamiltonian& p, FlowState s,
                              double t_total, bool with_J) {
  // RKF45 coefficients.
  static const double b2[] = {1.0 / 4};
  static const double b3[] = {3.0 / 32, 9.0 / 32};
  static const double b4[] = {1932.0 / 2197, -7200.0 / 2197, 7296.0 / 2197};
  static const double b5[] = {439.0 / 216, -8.0, 3680.0 / 513, -845.0 / 4104};
  static const double b6[] = {-8.0 / 27, 2.0, -3544.0 / 2565, 1859.0 / 4104,
                              -11.0 / 40};
  static const double c5[] = {16.0 / 135, 0.0, 6656.0 / 12825, 28561.0 / 56430,
                              -9.0 / 50, 2.0 / 55};
  static const double c4[] = {25.0 / 216, 0.0, 1408.0 / 2565, 2197.0 / 4104,
                              -1.0 / 5, 0.0};
  const double tol = 1e-12;
  double t = 0.0, h = t_total;
  int steps = 0;
  while (std::fabs(t - t_total) > 1e-15) {
    if (++steps > 100000)
      throw NumericError("kick flow integration failed to converge");
    if ((t_total > 0 && t + h > t_total) || (t_total < 0 && t + h < t_total))
      h = t_total - t;
    FlowState k1 = flow_rhs(p, s, with_J);
    FlowState k2 = flow_rhs(p, axpy(s, h * b2[0], k1, with_J), with_J);
    FlowState s3 = axpy(axpy(s, h * b3[0], k1, with_J), h * b3[1], k2, with_J);
    FlowState k3 = flow_rhs(p, s3, with_J);
    FlowState s4 = axpy(axpy(axpy(s, h * b4[0], k1, with_J), h * b4[1], k2, with_J),
                        h * b4[2], k3, with_J);
    FlowState k4 = flow_rhs(p, s4, with_J);
    FlowState s5 = axpy(axpy(axpy(axpy(s, h * b5[0], k1, with_J), h * b5[1], k2, with_J),
                             h * b5[2], k3, with_J), h * b5[3], k4, with_J);
    FlowState k5 = flow_rhs(p, s5, with_J);
    FlowState s6 = axpy(axpy(axpy(axpy(axpy(s, h * b6[0], k1, with_J), h * b6[1], k2, with_J),
                                  h * b6[2], k3, with_J), h * b6[3], k4, with_J),
                        h * b6[4], k5, with_J);
    FlowState k6 = flow_rhs(p, s6, with_J);

    FlowState hi = s, lo = s;
    const FlowState* ks[] = {&k1, &k2, &k3, &k4, &k5, &k6};
    for (int i = 0; i < 6; ++i) {
      hi = axpy(hi, h * c5[i], *ks[i], with_J);
      lo = axpy(lo, h * c4[i], *ks[i], with_J);
    }
    double err = std::fabs(hi.x - lo.x) + std::fabs(hi.xi - lo.xi);
    if (err <= tol * std::max(1.0, std::fabs(h))) {
      t += h;
      s = hi;
      if (err > 0) h *= std::min(4.0, 0.9 * std::pow(tol / err, 0.2));
    } else {
      h *= std::max(0.1, 0.9 * std::pow(tol / err, 0.2));
    }
  }
  return s;
}

TorusPoint kick_flow(const KickHamiltonian& p, const TorusPoint& q, double t) {
  switch (p.form) {
    case KickForm::Position:  // x frozen, xi' = xi - t p'(x)
      return {q.x, q.xi - t * p.dx(q)};
    case KickForm::Momentum:  // xi frozen, x' = x + t p'(xi)
      return {q.x + t * p.dxi(q), q.xi};
    case KickForm::General: {
      FlowState s{q.x, q.xi, {}};
      s = integrate_kick_flow(p, s, t, false);
      return {s.x, s.xi};
    }
  }
  throw NumericError("unreachable kick form");
}

Mat2 kick_tangent(const KickHamiltonian& p, const TorusPoint& q) {
  switch (p.form) {
    case KickForm::Position:
      return {{{1.0, 0.0}, {-p.dxx(q), 1.0}}};
    case KickForm::Momentum:
      return {{{1.0, p.dxixi(q)}, {0.0, 1.0}}};
    case KickForm::General: {
      FlowState s{q.x, q.xi, {{{1.0, 0.0}, {0.0, 1.0}}}};
      s = integrate_kick_flow(p, s, 1.0, true);
      return s.J;
    }
  }
  throw NumericError("unreachable kick form");
}

}  // namespace

TorusPoint apply_map(const MapSpec& spec, const TorusPoint& p) {
  const auto& S = spec.linear;
  TorusPoint q(double(S.a) * p.x + double(S.b) * p.xi,
               double(S.c) * p.x + double(S.d) * p.xi);
  if (spec.kick) q = kick_flow(*spec.kick, q, 1.0);
  return q;
}

TorusPoint apply_map_inverse(const MapSpec& spec, const TorusPoint& p) {
  TorusPoint q = p;
  if (spec.kick) q = kick_flow(*spec.kick, q, -1.0);
  const auto S = spec.linear.inverse();
  return {double(S.a) * q.x + double(S.b) * q.xi,
          double(S.c) * q.x + double(S.d) * q.xi};
}

TorusPoint apply_map_n(const MapSpec& spec, const TorusPoint& p, int t) {
  TorusPoint q = p;
  for (int i = 0; i < std::abs(t); ++i)
    q = t > 0 ? apply_map(spec, q) : apply_map_inverse(spec, q);
  return q;
}

Mat2 tangent_map(const MapSpec& spec, const TorusPoint& p) {
  Mat2 S = spec.linear.dense();
  if (!spec.kick) return S;
  TorusPoint q(double(spec.linear.a) * p.x + double(spec.linear.b) * p.xi,
               double(spec.linear.c) * p.x + double(spec.linear.d) * p.xi);
  return mat2_mul(kick_tangent(*spec.kick, q), S);
}

LyapunovData lyapunov_max(const MapSpec& spec, int n_iter, std::uint64_t seed) {
  spec.validate();
  if (n_iter < 100) throw ConfigError("lyapunov_max needs n_iter >= 100");
  Rng rng(seed);
  TorusPoint p(rng.u01(), rng.u01());
  for (int i = 0; i < 100; ++i) p = apply_map(spec, p);

  double vx = 0.6180339887498949, vxi = 0.7861513777574233;
  double sum = 0.0, sum90 = 0.0;
  int cut = n_iter - n_iter / 10;
  for (int i = 0; i < n_iter; ++i) {
    Mat2 T = tangent_map(spec, p);
    double wx = T[0][0] * vx + T[0][1] * vxi;
    double wxi = T[1][0] * vx + T[1][1] * vxi;
    double norm = std::hypot(wx, wxi);
    sum += std::log(norm);
    if (i == cut - 1) sum90 = sum;
    vx = wx / norm;
    vxi = wxi / norm;
    p = apply_map(spec, p);
  }
  LyapunovData out;
  out.lambda_max = sum / n_iter;
  out.residual = std::fabs(out.lambda_max - sum90 / cut);
  out.n_iter = n_iter;
  return out;
}

namespace {

UnstableDirection push_forward(const MapSpec& spec, const TorusPoint& p,
                               int steps) {
  // Backward orbit p, kappa^{-1}p, ..., kappa^{-steps}p, then push a fixed
  // generic vector forward through the tangent maps along it.
  std::vector<TorusPoint> orbit(steps + 1);
  orbit[0] = p;
  for (int i = 1; i <= steps; ++i) orbit[i] = apply_map_inverse(spec, orbit[i - 1]);
  double vx = 0.6180339887498949, vxi = 0.7861513777574233;
  for (int i = steps; i >= 1; --i) {
    Mat2 T = tangent_map(spec, orbit[i]);
    double wx = T[0][0] * vx + T[0][1] * vxi;
    double wxi = T[1][0] * vx + T[1][1] * vxi;
    double norm = std::hypot(wx, wxi);
    vx = wx / norm;
    vxi = wxi / norm;
  }
  return {vx, vxi, 0.0};
}

}  // namespace

UnstableDirection unstable_direction(const MapSpec& spec, const TorusPoint& p,
                                     int cone_iters) {
  if (cone_iters < 20) throw ConfigError("unstable_direction needs cone_iters >= 20");
  UnstableDirection u = push_forward(spec, p, cone_iters);
  UnstableDirection v = push_forward(spec, p, cone_iters - 4);
  double dot = u.ux * v.ux + u.uxi * v.uxi;
  double sgn = dot >= 0 ? 1.0 : -1.0;
  u.residual = std::hypot(u.ux - sgn * v.ux, u.uxi - sgn * v.uxi);
  return u;
}

UnstableJacobianResult unstable_jacobian_full(const MapSpec& spec,
                                              const TorusPoint& p,
                                              int cone_iters) {
  UnstableDirection u = unstable_direction(spec, p, cone_iters);
  Mat2 T = tangent_map(spec, p);
  double wx = T[0][0] * u.ux + T[0][1] * u.uxi;
  double wxi = T[1][0] * u.ux + T[1][1] * u.uxi;
  UnstableJacobianResult r;
  r.value = std::hypot(wx, wxi);
  r.residual = u.residual;
  r.converged = u.residual < 1e-8;
  return r;
}

double unstable_jacobian(const MapSpec& spec, const TorusPoint& p,
                         int cone_iters) {
  return unstable_jacobian_full(spec, p, cone_iters).value;
}

std::vector<double> cell_jacobians(const MapSpec& spec,
                                   const PartitionSpec& partition,
                                   int cone_iters) {
  constexpr int G = 32;
  std::vector<double> J(partition.K, std::numeric_limits<double>::infinity());
  for (int k = 0; k < partition.K; ++k) {
    for (const Rect& r : partition.cells[k]) {
      for (int i = 0; i < G; ++i) {
        for (int j = 0; j < G; ++j) {
          TorusPoint q(r.x0 + (r.x1 - r.x0) * (i + 0.5) / G,
                       r.xi0 + (r.xi1 - r.xi0) * (j + 0.5) / G);
          J[k] = std::min(J[k], unstable_jacobian(spec, q, cone_iters));
        }
      }
    }
    if (!std::isfinite(J[k]))
      throw ConfigError("empty cell " + std::to_string(k + 1) +
                        " in coarse-grained Jacobian");
  }
  return J;
}

double coarse_grained_jacobian(const MapSpec& spec,
                               const PartitionSpec& partition,
                               const Word& word, int cone_iters) {
  for (int s : word.symbols)
    if (s < 0 || s >= partition.K)
      throw ConfigError("word symbol out of range");
  std::vector<double> J = cell_jacobians(spec, partition, cone_iters);
  double prod = 1.0;
  for (int s : word.symbols) prod *= J[s];
  return prod;
}

std::vector<TorusPoint> sample_invariant_measure(const MeasureKind& kind,
                                                 const MapSpec& spec,
                                                 std::size_t count,
                                                 std::uint64_t seed) {
  std::vector<TorusPoint> out;
  out.reserve(count);
  if (kind.type == MeasureKind::Lebesgue) {
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
      double x = rng.u01();
      out.emplace_back(x, rng.u01());
    }
    return out;
  }
  if (kind.period <= 0) throw ConfigError("orbit period must be positive");
  TorusPoint q = kind.point;
  std::vector<TorusPoint> orbit;
  for (int i = 0; i < kind.period; ++i) {
    orbit.push_back(q);
    q = apply_map(spec, q);
  }
  if (q.dist(kind.point) > 1e-9)
    throw ConfigError("claimed period is not an actual period of the point");
  for (std::size_t i = 0; i < count; ++i) out.push_back(orbit[i % orbit.size()]);
  return out;
}

namespace {

std::optional<TorusPoint> newton_periodic(const MapSpec& spec, TorusPoint v,
                                          int period) {
  for (int it = 0; it < 60; ++it) {
    TorusPoint w = v;
    Mat2 J = {{{1, 0}, {0, 1}}};
    for (int i = 0; i < period; ++i) {
      J = mat2_mul(tangent_map(spec, w), J);
      w = apply_map(spec, w);
    }
    // displacement kappa^p(v) - v, wrapped to (-1/2, 1/2]
    double fx = mod1(w.x - v.x + 0.5) - 0.5;
    double fxi = mod1(w.xi - v.xi + 0.5) - 0.5;
    if (std::hypot(fx, fxi) < 1e-13) return v;
    Mat2 M = {{{J[0][0] - 1.0, J[0][1]}, {J[1][0], J[1][1] - 1.0}}};
    double det = M[0][0] * M[1][1] - M[0][1] * M[1][0];
    if (std::fabs(det) < 1e-12) return std::nullopt;
    double dx = (M[1][1] * fx - M[0][1] * fxi) / det;
    double dxi = (-M[1][0] * fx + M[0][0] * fxi) / det;
    v = TorusPoint(v.x - dx, v.xi - dxi);
  }
  return std::nullopt;
}

bool has_minimal_period(const MapSpec& spec, const TorusPoint& p, int period) {
  TorusPoint q = p;
  for (int i = 1; i < period; ++i) {
    q = apply_map(spec, q);
    if (period % i == 0 && q.dist(p) < 1e-9) return false;
  }
  q = apply_map(spec, q);
  return q.dist(p) < 1e-9;
}

}  // namespace

std::optional<TorusPoint> find_periodic_point(const MapSpec& spec, int period) {
  if (period <= 0) throw ConfigError("period must be positive");
  // Fixed points of S^p solve (S^p - I) v = k over k in Z^2; candidates are
  // adj(M) k / det(M) mod 1. For kicked maps each candidate seeds Newton.
  SymplecticMatrix Sp = spec.linear.pow(period);
  long long m00 = Sp.a - 1, m01 = Sp.b, m10 = Sp.c, m11 = Sp.d - 1;
  long long det = m00 * m11 - m01 * m10;
  if (det == 0) return std::nullopt;  // requires hyperbolicity
  long long range = std::llabs(det);
  std::optional<TorusPoint> fallback;
  for (long long k1 = 0; k1 < range; ++k1) {
    for (long long k2 = 0; k2 < range; ++k2) {
      double x = double(m11 * k1 - m01 * k2) / double(det);
      double xi = double(-m10 * k1 + m00 * k2) / double(det);
      TorusPoint cand(x, xi);
      if (spec.kick) {
        auto refined = newton_periodic(spec, cand, period);
        if (!refined) continue;
        cand = *refined;
      }
      if (!has_minimal_period(spec, cand, period)) continue;
      if (cand.dist(TorusPoint(0, 0)) > 1e-6) return cand;
      fallback = cand;
    }
  }
  return fallback;
}

}  // namespace qcat
