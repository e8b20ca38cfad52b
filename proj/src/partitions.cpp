#include "qcat/partitions.hpp"
#include "qcat/fft.hpp"

#include <algorithm>
#include <numeric>

namespace qcat {

PartitionSpec PartitionSpec::strips(int K) {
  if (K < 1) throw ConfigError("partition needs K >= 1");
  PartitionSpec p;
  p.K = K;
  p.cells.resize(K);
  for (int k = 0; k < K; ++k)
    p.cells[k] = {Rect{double(k) / K, double(k + 1) / K, 0.0, 1.0}};
  p.diameter = std::sqrt(1.0 / double(K) / K + 1.0);
  p.validate();
  return p;
}

PartitionSpec PartitionSpec::grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ConfigError("grid partition needs rows, cols >= 1");
  PartitionSpec p;
  p.K = rows * cols;
  p.cells.resize(p.K);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      p.cells[r * cols + c] = {Rect{double(c) / cols, double(c + 1) / cols,
                                    double(r) / rows, double(r + 1) / rows}};
  p.diameter = std::hypot(1.0 / cols, 1.0 / rows);
  p.validate();
  return p;
}

int PartitionSpec::cell_of(const TorusPoint& p) const {
  for (int k = 0; k < K; ++k)
    for (const Rect& r : cells[k])
      if (r.contains(p)) return k;
  throw NumericError("partition does not cover point");  // validate() rules this out
}

bool PartitionSpec::position_strips() const {
  for (const auto& cell : cells)
    for (const Rect& r : cell)
      if (r.xi0 != 0.0 || r.xi1 != 1.0) return false;
  return true;
}

double PartitionSpec::min_side() const {
  double m = 1.0;
  for (const auto& cell : cells)
    for (const Rect& r : cell) m = std::min({m, r.x1 - r.x0, r.xi1 - r.xi0});
  return m;
}

void PartitionSpec::validate() const {
  if (int(cells.size()) != K) throw ConfigError("partition cell list size != K");
  double area = 0.0;
  for (const auto& cell : cells) {
    if (cell.empty()) throw ConfigError("partition has an empty cell");
    for (const Rect& r : cell) {
      if (!(r.x0 < r.x1 && r.xi0 < r.xi1) || r.x0 < 0 || r.x1 > 1 || r.xi0 < 0 ||
          r.xi1 > 1)
        throw ConfigError("partition rectangle out of bounds or degenerate");
      area += r.area();
    }
  }
  if (std::fabs(area - 1.0) > 1e-12)
    throw ConfigError("partition area != 1");
  // Disjointness + coverage probed on a fixed grid; half-open rectangles make
  // membership total, so one hit per point is both checks at once.
  const int G = 64;
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      TorusPoint p((i + 0.5) / G, (j + 0.5) / G);
      int hits = 0;
      for (const auto& cell : cells)
        for (const Rect& r : cell) hits += r.contains(p) ? 1 : 0;
      if (hits != 1) throw ConfigError("partition cells overlap or leave a gap");
    }
  }
}

std::string Word::str() const {
  std::string s;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(symbols[i] + 1);
  }
  return s;
}

const std::map<std::uint64_t, double>& ClassicalSymbolicMeasure::weights(int n) const {
  if (n < 1 || n > depth) throw ConfigError("measure depth out of range");
  return levels[n - 1];
}

Word word_of_point(const PartitionSpec& partition, const MapSpec& spec,
                   const TorusPoint& p, int n) {
  if (n < 1) throw ConfigError("word length must be >= 1");
  Word w;
  w.symbols.reserve(n);
  TorusPoint q = p;
  for (int j = 0; j < n; ++j) {
    w.symbols.push_back(partition.cell_of(q));
    if (j + 1 < n) q = apply_map(spec, q);
  }
  return w;
}

ClassicalSymbolicMeasure cylinder_measures(const std::vector<TorusPoint>& samples,
                                           const PartitionSpec& partition,
                                           const MapSpec& spec, int n,
                                           std::uint64_t seed) {
  if (samples.size() < 10000)
    throw ConfigError("cylinder_measures needs at least 10^4 samples");
  WordCodec codec(partition.K);
  if (n > codec.max_depth())
    throw ConfigError("word depth too large for packed storage");
  ClassicalSymbolicMeasure m;
  m.depth = n;
  m.K = partition.K;
  m.samples = samples.size();
  m.seed = seed;
  m.levels.resize(n);
  std::vector<std::map<std::uint64_t, std::size_t>> counts(n);
  for (const TorusPoint& s : samples) {
    TorusPoint q = s;
    std::uint64_t w = 0;
    for (int j = 0; j < n; ++j) {
      w = codec.push(w, j, partition.cell_of(q));
      ++counts[j][w];
      if (j + 1 < n) q = apply_map(spec, q);
    }
  }
  for (int j = 0; j < n; ++j)
    for (const auto& [w, c] : counts[j])
      m.levels[j][w] = double(c) / double(m.samples);
  return m;
}

double shannon_entropy(const std::vector<double>& dist) {
  double sum = 0.0, H = 0.0;
  for (double p : dist) {
    if (p < 0) throw ConfigError("negative probability in entropy input");
    sum += p;
    if (p > 0) H -= p * std::log(p);
  }
  if (sum > 1.0 + 1e-9) throw ConfigError("probabilities sum above 1");
  return H;
}

double classical_entropy(const ClassicalSymbolicMeasure& m, int n) {
  double H = 0.0;
  for (const auto& [w, p] : m.weights(n))
    if (p > 0) H -= p * std::log(p);
  return H;
}

double classical_entropy(const ClassicalSymbolicMeasure& m) {
  return classical_entropy(m, m.depth);
}

double classical_pressure(const ClassicalSymbolicMeasure& m,
                          const std::vector<double>& cell_weights, int n) {
  if (int(cell_weights.size()) != m.K)
    throw ConfigError("pressure needs one weight per cell");
  std::vector<double> logw(cell_weights.size());
  for (std::size_t k = 0; k < cell_weights.size(); ++k) {
    if (cell_weights[k] <= 0) throw ConfigError("pressure weights must be positive");
    logw[k] = std::log(cell_weights[k]);
  }
  WordCodec codec(m.K);
  double p = classical_entropy(m, n);
  for (const auto& [w, mass] : m.weights(n)) {
    double lw = 0.0;
    for (int j = 0; j < n; ++j) lw += logw[codec.symbol_at(w, j)];
    p -= 2.0 * mass * lw;
  }
  return p;
}

EntropyRateReport ks_entropy_rate(const MapSpec& spec,
                                  const PartitionSpec& partition,
                                  const std::vector<TorusPoint>& samples,
                                  int n_max, std::uint64_t seed) {
  ClassicalSymbolicMeasure m =
      cylinder_measures(samples, partition, spec, n_max, seed);
  EntropyRateReport rep;
  double S = double(m.samples);
  double prevH = 0.0, prevMM = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    EntropyRateRow row;
    row.n = n;
    row.H = classical_entropy(m, n);
    row.rate = row.H / n;
    row.words = m.weights(n).size();
    // Miller-Madow: E[H_emp] ~ H - (m-1)/(2S); the increment of the corrected
    // sequence is the conditional-entropy estimate used by the oracle checks.
    double mm = row.H + (double(row.words) - 1.0) / (2.0 * S);
    row.increment = row.H - prevH;
    row.increment_mm = mm - prevMM;
    prevH = row.H;
    prevMM = mm;
    rep.rows.push_back(row);
  }
  for (int n = 1; n <= n_max; ++n) {
    for (int k = 1; n + k <= n_max; ++k) {
      double viol = rep.rows[n + k - 1].H - rep.rows[n - 1].H - rep.rows[k - 1].H;
      rep.subadditivity_worst = std::max(rep.subadditivity_worst, viol);
    }
  }
  // MC tolerance: entropy error is at the scale of words/S per level.
  double tol = 3.0 * double(rep.rows.back().words) / S + 1e-9;
  rep.subadditive_within_tol = rep.subadditivity_worst <= tol;
  return rep;
}

SmoothPartition smooth_partition(const PartitionSpec& partition, double width,
                                 int resolution, int freq_cutoff) {
  if (width <= 0) throw ConfigError("mollification width must be positive");
  if (width >= partition.min_side() / 4.0)
    throw ConfigError("mollification width must be below cell diameter / 4");
  if ((resolution & (resolution - 1)) != 0)
    throw ConfigError("smooth partition resolution must be a power of two");
  const int R = resolution;

  // Compactly supported C^inf mollifier b(t) ~ exp(-1/(1-(t/w)^2)),
  // tensorized, sampled on the grid and normalized to unit mass.
  std::vector<double> bump(R);
  double mass = 0.0;
  for (int i = 0; i < R; ++i) {
    double t = double(i) / R;
    if (t > 0.5) t -= 1.0;
    double u = t / width;
    bump[i] = (std::fabs(u) < 1.0) ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
    mass += bump[i];
  }
  for (double& b : bump) b /= mass;

  std::vector<cplx> bump_hat(std::size_t(R) * R);
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < R; ++j)
      bump_hat[std::size_t(i) * R + j] = bump[i] * bump[j];
  fft2_pow2(bump_hat, R, R, false);

  SmoothPartition sp;
  sp.K = partition.K;
  sp.resolution = R;
  sp.width = width;
  sp.grids.resize(partition.K);
  sp.sqrt_coeffs.resize(partition.K);

  std::vector<std::vector<double>> raw(partition.K);
  std::vector<double> total(std::size_t(R) * R, 0.0);
  for (int k = 0; k < partition.K; ++k) {
    std::vector<cplx> g(std::size_t(R) * R, cplx(0, 0));
    for (int i = 0; i < R; ++i) {
      for (int j = 0; j < R; ++j) {
        TorusPoint p(double(i) / R, double(j) / R);
        bool in = false;
        for (const Rect& r : partition.cells[k]) in = in || r.contains(p);
        if (in) g[std::size_t(i) * R + j] = 1.0;
      }
    }
    fft2_pow2(g, R, R, false);
    for (std::size_t t = 0; t < g.size(); ++t) g[t] *= bump_hat[t];
    fft2_pow2(g, R, R, true);
    raw[k].resize(g.size());
    for (std::size_t t = 0; t < g.size(); ++t) {
      raw[k][t] = std::max(g[t].real(), 0.0);  // clamp FFT roundoff
      total[t] += raw[k][t];
    }
  }
  // Circular convolution preserves sum_k = 1 up to roundoff; renormalize so it
  // is exact on the representation grid.
  for (int k = 0; k < partition.K; ++k) {
    sp.grids[k].resize(raw[k].size());
    for (std::size_t t = 0; t < raw[k].size(); ++t)
      sp.grids[k][t] = raw[k][t] / total[t];
  }

  for (int k = 0; k < partition.K; ++k) {
    std::vector<cplx> g(std::size_t(R) * R);
    for (std::size_t t = 0; t < g.size(); ++t) g[t] = std::sqrt(sp.grids[k][t]);
    fft2_pow2(g, R, R, false);
    double scale = 1.0 / (double(R) * R);
    for (int m = -freq_cutoff; m <= freq_cutoff; ++m) {
      for (int n = -freq_cutoff; n <= freq_cutoff; ++n) {
        int im = (m % R + R) % R, in = (n % R + R) % R;
        cplx c = g[std::size_t(im) * R + in] * scale;
        if (std::abs(c) > 1e-14) sp.sqrt_coeffs[k][{m, n}] = c;
      }
    }
  }
  return sp;
}

}  // namespace qcat
