#pragma once

#include "qcat/classical.hpp"
#include "qcat/common.hpp"

#include <cstdint>
#include <map>

namespace qcat {

// Half-open box [x0,x1) x [xi0,xi1).
struct Rect {
  double x0 = 0, x1 = 1, xi0 = 0, xi1 = 1;

  double area() const { return (x1 - x0) * (xi1 - xi0); }
  bool contains(const TorusPoint& p) const {
    return p.x >= x0 && p.x < x1 && p.xi >= xi0 && p.xi < xi1;
  }
};

// K cells, each a finite union of rectangles; disjoint interiors, total area 1.
struct PartitionSpec {
  int K = 1;
  std::vector<std::vector<Rect>> cells;
  double diameter = 0.0;

  static PartitionSpec strips(int K);        // vertical position strips
  static PartitionSpec grid(int rows, int cols);

  int cell_of(const TorusPoint& p) const;    // total by half-open convention
  bool position_strips() const;              // every cell has full xi extent
  double min_side() const;
  void validate() const;
};

// Symbols stored 0-based internally; rendered 1-based in all output.
struct Word {
  std::vector<int> symbols;

  int length() const { return int(symbols.size()); }
  std::string str() const;  // "2.1.1" style, 1-based
};

// Packed word keys: symbol j in bits [j*b, (j+1)*b).
struct WordCodec {
  int K = 2;
  int bits = 1;

  explicit WordCodec(int K_) : K(K_) {
    bits = 1;
    while ((1 << bits) < K) ++bits;
  }
  int max_depth() const { return 62 / bits; }
  std::uint64_t push(std::uint64_t w, int level, int symbol) const {
    return w | (std::uint64_t(symbol) << (level * bits));
  }
  int symbol_at(std::uint64_t w, int level) const {
    return int((w >> (level * bits)) & ((1u << bits) - 1));
  }
  Word unpack(std::uint64_t w, int n) const {
    Word out;
    out.symbols.resize(n);
    for (int i = 0; i < n; ++i) out.symbols[i] = symbol_at(w, i);
    return out;
  }
};

// Empirical cylinder masses at every depth 1..n from one sample sweep.
struct ClassicalSymbolicMeasure {
  int depth = 0;
  int K = 1;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  // levels[d-1]: packed word of length d -> mass
  std::vector<std::map<std::uint64_t, double>> levels;

  const std::map<std::uint64_t, double>& weights(int n) const;
  double stderr_of(double weight) const {  // binomial standard error
    return std::sqrt(std::max(weight * (1.0 - weight), 0.0) / double(samples));
  }
};

Word word_of_point(const PartitionSpec& partition, const MapSpec& spec,
                   const TorusPoint& p, int n);

ClassicalSymbolicMeasure cylinder_measures(const std::vector<TorusPoint>& samples,
                                           const PartitionSpec& partition,
                                           const MapSpec& spec, int n,
                                           std::uint64_t seed = 0);

double shannon_entropy(const std::vector<double>& dist);

// H(mu, P^vee n) at the measure's own depth or an explicit one.
double classical_entropy(const ClassicalSymbolicMeasure& m);
double classical_entropy(const ClassicalSymbolicMeasure& m, int n);

// H - 2 sum_alpha mu(alpha) log w_alpha, w_alpha = prod_j w_{alpha_j}.
double classical_pressure(const ClassicalSymbolicMeasure& m,
                          const std::vector<double>& cell_weights, int n);

struct EntropyRateRow {
  int n = 0;
  double H = 0.0;
  double rate = 0.0;          // H/n
  double increment = 0.0;     // H(n) - H(n-1)
  double increment_mm = 0.0;  // with Miller-Madow bias correction
  std::size_t words = 0;      // observed (nonzero) cylinder count
};

struct EntropyRateReport {
  std::vector<EntropyRateRow> rows;
  double subadditivity_worst = 0.0;  // max over tested (n,m) of H(n+m)-H(n)-H(m)
  bool subadditive_within_tol = true;
};

// Sequence H(n)/n for n in 1..n_max plus the subadditivity check.
EntropyRateReport ks_entropy_rate(const MapSpec& spec,
                                  const PartitionSpec& partition,
                                  const std::vector<TorusPoint>& samples,
                                  int n_max, std::uint64_t seed = 0);

// Smooth partition of unity: grid samples plus truncated Fourier series of
// each bump. Built by circular convolution with a compactly supported
// mollifier, so sum_k pi_k = 1 holds to FFT roundoff before renormalization.
struct SmoothPartition {
  int K = 1;
  int resolution = 256;
  double width = 0.0;
  std::vector<std::vector<double>> grids;  // row-major x-major [ix*res+ixi]
  std::vector<std::map<std::pair<int, int>, cplx>> sqrt_coeffs;  // of sqrt(pi_k)

  double value(int k, int ix, int ixi) const {
    return grids[k][std::size_t(ix) * resolution + ixi];
  }
};

SmoothPartition smooth_partition(const PartitionSpec& partition, double width,
                                 int resolution = 256, int freq_cutoff = 48);

}  // namespace qcat
