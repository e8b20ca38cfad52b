#pragma once

#include "qcat/common.hpp"

#include <array>
#include <map>
#include <optional>
#include <utility>

namespace qcat {

using Mat2 = std::array<std::array<double, 2>, 2>;

inline Mat2 mat2_mul(const Mat2& A, const Mat2& B) {
  return {{{A[0][0] * B[0][0] + A[0][1] * B[1][0],
            A[0][0] * B[0][1] + A[0][1] * B[1][1]},
           {A[1][0] * B[0][0] + A[1][1] * B[1][0],
            A[1][0] * B[0][1] + A[1][1] * B[1][1]}}};
}

// 2x2 integer matrix [[a,b],[c,d]] with ad - bc = 1.
struct SymplecticMatrix {
  long long a = 1, b = 0, c = 0, d = 1;

  long long det() const { return a * d - b * c; }
  long long trace() const { return a + d; }
  bool hyperbolic() const { return std::llabs(a + d) > 2; }
  // Checkerboard parity needed by the metaplectic kernel.
  bool checkerboard() const { return (a * b) % 2 == 0 && (c * d) % 2 == 0; }

  SymplecticMatrix inverse() const { return {d, -b, -c, a}; }
  SymplecticMatrix transpose() const { return {a, c, b, d}; }
  SymplecticMatrix operator*(const SymplecticMatrix& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d,
            c * o.a + d * o.c, c * o.b + d * o.d};
  }
  SymplecticMatrix pow(int t) const;

  Mat2 dense() const {
    return {{{double(a), double(b)}, {double(c), double(d)}}};
  }

  // log of the larger eigenvalue modulus (0 for elliptic/parabolic).
  double lambda_max() const;

  void validate() const;  // throws ConfigError unless det == 1
};

struct TorusPoint {
  double x = 0.0, xi = 0.0;

  TorusPoint() = default;
  TorusPoint(double x_, double xi_) : x(mod1(x_)), xi(mod1(xi_)) {}

  double dist(const TorusPoint& o) const {
    double dx = circle_dist(x, o.x), dxi = circle_dist(xi, o.xi);
    return std::sqrt(dx * dx + dxi * dxi);
  }
};

enum class KickForm { Position, Momentum, General };

// Real trigonometric polynomial p with Fourier coefficients c_{m,n} on
// frequencies (m,n); realness means c_{-m,-n} = conj(c_{m,n}).
struct KickHamiltonian {
  KickForm form = KickForm::Position;
  std::map<std::pair<int, int>, cplx> coeffs;

  // p(x) = amplitude * cos(2 pi k x) (or in xi for the momentum form).
  static KickHamiltonian cosine(KickForm form, int k, double amplitude);

  void validate() const;

  double amplitude() const;  // sup-norm bound: sum of |c_{m,n}|

  double value(const TorusPoint& p) const;
  double dx(const TorusPoint& p) const;
  double dxi(const TorusPoint& p) const;
  double dxx(const TorusPoint& p) const;
  double dxxi(const TorusPoint& p) const;
  double dxixi(const TorusPoint& p) const;
};

// kappa = g^1 after the linear map, where g^1 is the time-1 flow of the kick.
struct MapSpec {
  SymplecticMatrix linear;
  std::optional<KickHamiltonian> kick;

  bool experimental() const {
    return kick && kick->form == KickForm::General;
  }
  bool is_linear() const { return !kick.has_value(); }
  void validate() const;  // linear part hyperbolic, kick well-formed
};

TorusPoint apply_map(const MapSpec& spec, const TorusPoint& p);
TorusPoint apply_map_inverse(const MapSpec& spec, const TorusPoint& p);
TorusPoint apply_map_n(const MapSpec& spec, const TorusPoint& p, int t);

// Jacobian of kappa at p; det = 1 up to integrator tolerance.
Mat2 tangent_map(const MapSpec& spec, const TorusPoint& p);

struct LyapunovData {
  double lambda_max = 0.0;
  double residual = 0.0;  // drift of the running mean over the last 10%
  int n_iter = 0;
};

LyapunovData lyapunov_max(const MapSpec& spec, int n_iter, std::uint64_t seed);

struct UnstableDirection {
  double ux = 0.0, uxi = 0.0;  // unit vector
  double residual = 0.0;       // change when 4 fewer history steps are used
};

// Unstable direction at p from pushing a generic vector forward along a
// backward-orbit history of cone_iters steps.
UnstableDirection unstable_direction(const MapSpec& spec, const TorusPoint& p,
                                     int cone_iters);

struct UnstableJacobianResult {
  double value = 0.0;
  double residual = 0.0;
  bool converged = true;
};

UnstableJacobianResult unstable_jacobian_full(const MapSpec& spec,
                                              const TorusPoint& p,
                                              int cone_iters);
double unstable_jacobian(const MapSpec& spec, const TorusPoint& p,
                         int cone_iters);

struct PartitionSpec;  // partitions.hpp
struct Word;

// J^u(k): min of the unstable Jacobian over a deterministic 32x32 sub-grid
// of each cell.
std::vector<double> cell_jacobians(const MapSpec& spec,
                                   const PartitionSpec& partition,
                                   int cone_iters = 30);

// Product of per-cell minima along the word (empty word -> 1).
double coarse_grained_jacobian(const MapSpec& spec,
                               const PartitionSpec& partition,
                               const Word& word, int cone_iters = 30);

struct MeasureKind {
  enum Type { Lebesgue, PeriodicOrbit } type = Lebesgue;
  TorusPoint point;
  int period = 0;

  static MeasureKind lebesgue() { return {}; }
  static MeasureKind periodic_orbit(TorusPoint p, int period) {
    return {PeriodicOrbit, p, period};
  }
};

std::vector<TorusPoint> sample_invariant_measure(const MeasureKind& kind,
                                                 const MapSpec& spec,
                                                 std::size_t count,
                                                 std::uint64_t seed);

// Period-n point: integer linear algebra for linear maps, Newton refinement
// seeded from the linear solution for kicked maps. Returns a point of minimal
// period exactly `period`, preferring one away from the origin.
std::optional<TorusPoint> find_periodic_point(const MapSpec& spec, int period);

}  // namespace qcat
