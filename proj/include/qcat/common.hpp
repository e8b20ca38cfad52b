#pragma once

#include <complex>
#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcat {

using cplx = std::complex<double>;

inline constexpr double PI = 3.141592653589793238462643383279502884;
inline constexpr double TWO_PI = 2.0 * PI;

// Bad input: malformed configs, violated preconditions. CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Computation produced something outside its contract. CLI exit code 1.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reduce to [0,1). Guards the x - floor(x) == 1.0 rounding corner.
inline double mod1(double x) {
  double r = x - std::floor(x);
  return (r >= 1.0) ? r - 1.0 : r;
}

// Distance on the circle R/Z.
inline double circle_dist(double a, double b) {
  double d = std::fabs(mod1(a) - mod1(b));
  return std::min(d, 1.0 - d);
}

// Deterministic RNG. The standard distributions are implementation-defined,
// so all draws go through these fixed transforms; outputs are reproducible
// across platforms for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_{} {
    // splitmix64 seeding of a 4-word xoshiro-like state folded into one
    // counter stream; a single splitmix64 stream is already high quality
    // and keeps the implementation tiny.
    s_ = seed + 0x9E3779B97F4A7C15ull;
  }

  std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1), 53-bit resolution.
  double u01() { return double(next() >> 11) * 0x1.0p-53; }

  // Uniform in [-1,1).
  double sym() { return 2.0 * u01() - 1.0; }

  // Standard normal, Box-Muller with a cached partner.
  double normal() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    double u = 0.0;
    do { u = u01(); } while (u <= 0.0);
    double v = u01();
    double r = std::sqrt(-2.0 * std::log(u));
    cached_ = r * std::sin(TWO_PI * v);
    have_ = true;
    return r * std::cos(TWO_PI * v);
  }

  cplx cnormal() { return cplx(normal(), normal()); }

 private:
  std::uint64_t s_;
  bool have_ = false;
  double cached_ = 0.0;
};

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xCBF29CE484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s,
                           std::uint64_t h = 0xCBF29CE484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

std::string fnv1a_hex(std::uint64_t h);

// Least-squares slope of log(y) against log(x). Used for decay-rate fits.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qcat
