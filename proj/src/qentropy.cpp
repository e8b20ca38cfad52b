#include "qcat/qentropy.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <functional>

namespace qcat {

QuantumPartition quantize_partition(const HilbertSpaceSpec& space,
                                    const PartitionSpec& partition) {
  partition.validate();
  if (!partition.position_strips())
    throw ConfigError(
        "sharp quantization needs position-strip cells; use the smooth mode "
        "for general cells");
  QuantumPartition qp;
  qp.mode = QuantumPartition::Mode::Sharp;
  qp.K = partition.K;
  qp.N = space.N;
  qp.masks.assign(partition.K, Eigen::VectorXd::Zero(space.N));
  for (int j = 0; j < space.N; ++j) {
    // Membership by the x coordinate alone; strips have full xi extent.
    int k = partition.cell_of(TorusPoint(double(j) / space.N, 0.5));
    qp.masks[k](j) = 1.0;
  }
  qp.residual = 0.0;  // masks partition the basis index set exactly
  return qp;
}

QuantumPartition quantize_partition(const HilbertSpaceSpec& space,
                                    const SmoothPartition& partition) {
  QuantumPartition qp;
  qp.mode = QuantumPartition::Mode::Smooth;
  qp.K = partition.K;
  qp.N = space.N;
  qp.ops.reserve(partition.K);
  MatC sum = MatC::Zero(space.N, space.N);
  for (int k = 0; k < partition.K; ++k) {
    TrigSymbol f;
    f.c = partition.sqrt_coeffs[k];
    MatC A = op_N(space, f).M;
    MatC H = 0.5 * (A + A.adjoint());
    sum += H * H;
    qp.ops.push_back(std::move(H));
  }
  sum.diagonal().array() -= 1.0;
  Eigen::SelfAdjointEigenSolver<MatC> es(sum, Eigen::EigenvaluesOnly);
  qp.residual = es.eigenvalues().cwiseAbs().maxCoeff();
  return qp;
}

const std::map<std::uint64_t, double>& QuantumSymbolicMeasure::weights(int n) const {
  if (n < 1 || n > depth) throw ConfigError("measure depth out of range");
  return levels[n - 1];
}

double QuantumSymbolicMeasure::total_mass() const {
  double s = 0.0;
  for (const auto& [w, m] : levels[depth - 1]) s += m;
  return s;
}

QuantumSymbolicMeasure refined_measure(const VecC& psi,
                                       const QuantumPartition& qp,
                                       const Propagator& prop, int n,
                                       double prune,
                                       QuantumSymbolicMeasure::Direction dir) {
  if (std::fabs(psi.norm() - 1.0) > 1e-10)
    throw ConfigError("refined_measure needs a normalized state");
  if (psi.size() != qp.N || qp.N != prop.space.N)
    throw ConfigError("state/partition/propagator dimension mismatch");
  if (n < 1) throw ConfigError("refinement depth must be >= 1");
  WordCodec codec(qp.K);
  if (n > codec.max_depth()) throw ConfigError("refinement depth too large");
  if (prune >= 1.0 / qp.K)
    throw ConfigError("prune threshold >= 1/K would drop the whole tree");

  const bool backward = dir == QuantumSymbolicMeasure::Direction::Backward;
  QuantumSymbolicMeasure m;
  m.depth = n;
  m.K = qp.K;
  m.direction = dir;
  m.prune = prune;
  m.partition_residual = qp.residual;
  m.levels.resize(n);

  // DFS; children of a node share one propagator application. The first
  // forward level projects the state itself (no transport before the first
  // symbol); the backward measure transports at every level.
  std::function<void(const VecC&, int, std::uint64_t)> descend =
      [&](const VecC& v, int level, std::uint64_t word) {
        VecC base;
        if (level == 0)
          base = backward ? VecC(prop.apply_inverse(v)) : v;
        else
          base = backward ? VecC(prop.apply_inverse(v)) : VecC(prop.apply(v));
        for (int k = 0; k < qp.K; ++k) {
          VecC child = qp.apply(k, base);
          double w = child.squaredNorm();
          std::uint64_t cw = codec.push(word, level, k);
          m.levels[level][cw] = w;
          if (level + 1 < n) {
            if (w < prune)
              m.pruned_mass += w;
            else
              descend(child, level + 1, cw);
          }
        }
      };
  descend(psi, 0, 0);
  return m;
}

QuantumSymbolicMeasure backward_refined_measure(const VecC& psi,
                                                const QuantumPartition& qp,
                                                const Propagator& prop, int n,
                                                double prune) {
  return refined_measure(psi, qp, prop, n, prune,
                         QuantumSymbolicMeasure::Direction::Backward);
}

QuantumEntropyResult quantum_entropy(const QuantumSymbolicMeasure& m) {
  QuantumEntropyResult r;
  for (const auto& [w, p] : m.levels[m.depth - 1])
    if (p > 0) r.H -= p * std::log(p);
  double pm = m.pruned_mass;
  if (pm > 0)
    r.upper_correction = -pm * std::log(pm) + pm * m.depth * std::log(double(m.K));
  return r;
}

namespace {

double word_log_jacobian(const WordCodec& codec, std::uint64_t w, int n,
                         const std::vector<double>& logJ) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += logJ[codec.symbol_at(w, j)];
  return s;
}

double pressure_at_depth(const QuantumSymbolicMeasure& m,
                         const std::vector<double>& logJ, int n) {
  WordCodec codec(m.K);
  double H = 0.0, J = 0.0;
  for (const auto& [w, p] : m.weights(n)) {
    if (p > 0) H -= p * std::log(p);
    J += p * word_log_jacobian(codec, w, n, logJ);
  }
  return H - J;  // H - 2 sum mu log J^{1/2}
}

}  // namespace

PressureReport quantum_pressure(const QuantumSymbolicMeasure& m,
                                const std::vector<double>& cell_log_jacobians) {
  if (int(cell_log_jacobians.size()) != m.K)
    throw ConfigError("quantum_pressure needs one Jacobian per cell");
  PressureReport r;
  r.depth = m.depth;
  r.entropy = quantum_entropy(m).H;
  r.pressure = pressure_at_depth(m, cell_log_jacobians, m.depth);
  r.partition_residual = m.partition_residual;
  r.pruned_mass = m.pruned_mass;
  return r;
}

PressureReport quantum_pressure(const QuantumSymbolicMeasure& m,
                                const MapSpec& spec,
                                const PartitionSpec& partition,
                                int cone_iters) {
  std::vector<double> J = cell_jacobians(spec, partition, cone_iters);
  for (double& j : J) j = std::log(j);
  return quantum_pressure(m, J);
}

double shift_invariance_residual(const VecC& psi, const QuantumPartition& qp,
                                 const Propagator& prop, int n, int n0,
                                 double prune) {
  if (n0 < 1) throw ConfigError("shift residual needs n0 >= 1");
  if (n == 0) return 0.0;
  QuantumSymbolicMeasure m = refined_measure(psi, qp, prop, n + n0, prune);
  WordCodec codec(qp.K);
  // mu(sigma^{-n}[.beta]) = sum over the first n symbols of mu([alpha.beta]).
  std::map<std::uint64_t, double> shifted;
  for (const auto& [w, p] : m.weights(n + n0))
    shifted[w >> (std::uint64_t(n) * codec.bits)] += p;
  double worst = 0.0;
  for (const auto& [w, p] : m.weights(n0)) {
    auto it = shifted.find(w);
    double s = it == shifted.end() ? 0.0 : it->second;
    worst = std::max(worst, std::fabs(s - p));
  }
  return worst;
}

double pressure_subadditivity_residual(const QuantumSymbolicMeasure& m,
                                       const std::vector<double>& cell_log_jacobians,
                                       int n, int n0) {
  if (n < 1 || n0 < 1 || n + n0 > m.depth)
    throw ConfigError("pressure subadditivity needs 1 <= n, n0 with n + n0 <= depth");
  return pressure_at_depth(m, cell_log_jacobians, n + n0) -
         pressure_at_depth(m, cell_log_jacobians, n) -
         pressure_at_depth(m, cell_log_jacobians, n0);
}

namespace {

// y = Pi_{w_{n-1}} U ... U Pi_{w_0} x, the norm-defining part of Pi_alpha.
VecC apply_word(const QuantumPartition& qp, const Propagator& prop,
                const std::vector<int>& w, const VecC& x) {
  VecC v = qp.apply(w[0], x);
  for (std::size_t j = 1; j < w.size(); ++j) v = qp.apply(w[j], prop.apply(v));
  return v;
}

VecC apply_word_adjoint(const QuantumPartition& qp, const Propagator& prop,
                        const std::vector<int>& w, const VecC& x) {
  VecC v = qp.apply(w.back(), x);
  for (std::size_t j = w.size() - 1; j-- > 0;)
    v = qp.apply(w[j], prop.apply_inverse(v));
  return v;
}

}  // namespace

NormResult dispersive_norm(const QuantumPartition& qp, const Propagator& prop,
                           const Word& word, double tol, int max_iter) {
  if (word.length() < 1) throw ConfigError("dispersive_norm needs a nonempty word");
  for (int s : word.symbols)
    if (s < 0 || s >= qp.K) throw ConfigError("word symbol out of range");

  // Seeded start: deterministic per (word, N).
  std::uint64_t h = fnv1a(word.symbols.data(), word.symbols.size() * sizeof(int));
  h = fnv1a(&qp.N, sizeof qp.N, h);
  Rng rng(h);
  VecC x(qp.N);
  for (int i = 0; i < qp.N; ++i) x(i) = rng.cnormal();
  x /= x.norm();

  NormResult r;
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    VecC y = apply_word(qp, prop, word.symbols, x);
    double ny = y.norm();
    r.iterations = it;
    if (ny < 1e-150) {  // word annihilates the iterate: norm ~ 0 numerically
      r.value = 0.0;
      r.converged = true;
      return r;
    }
    VecC z = apply_word_adjoint(qp, prop, word.symbols, y);
    r.value = ny;  // ||Pi x|| with ||x|| = 1, converges to the top singular value
    r.last_delta = std::fabs(r.value - prev);
    if (it > 3 && r.last_delta <= tol * std::max(r.value, 1e-12)) {
      r.converged = true;
      return r;
    }
    prev = r.value;
    x = z / z.norm();
  }
  r.converged = false;
  return r;
}

NormResult cross_family_norm(const QuantumPartition& qp, const Propagator& prop,
                             const Word& rho_word, const Word& tau_word,
                             double tol, int max_iter) {
  (void)tol;
  (void)max_iter;
  // tau_a rho_b* telescopes into a single refined chain over the
  // concatenated word (reverse(b), a); leading unitaries drop from the norm.
  Word cat;
  cat.symbols.assign(rho_word.symbols.rbegin(), rho_word.symbols.rend());
  cat.symbols.insert(cat.symbols.end(), tau_word.symbols.begin(),
                     tau_word.symbols.end());
  if (cat.symbols.empty()) return {1.0, 0, true, 0.0};
  // Short chains keep a quasi-continuum of singular values at the top (the
  // dispersive decay only sets in at larger depth), which stalls power
  // iteration; these norms feed an exact inequality, so take the dense SVD.
  MatC M = qp.matrix(cat.symbols[0]);
  for (std::size_t i = 1; i < cat.symbols.size(); ++i)
    M = qp.matrix(cat.symbols[i]) * (prop.U * M);
  Eigen::BDCSVD<MatC> svd(M);
  return {svd.singularValues()(0), 0, true, 0.0};
}

EupLevel1Report eup_level1(const VecC& psi, const TorusOperator& basisA,
                           const TorusOperator& basisB) {
  if (!basisA.unitary || !basisB.unitary)
    throw ConfigError("eup_level1 needs unitary basis matrices");
  if (std::fabs(psi.norm() - 1.0) > 1e-10)
    throw ConfigError("eup_level1 needs a normalized state");
  auto dist = [&](const TorusOperator& B) {
    VecC amps = B.M.adjoint() * psi;
    std::vector<double> p(amps.size());
    for (int i = 0; i < amps.size(); ++i) p[i] = std::norm(amps(i));
    return p;
  };
  EupLevel1Report r;
  r.hA = shannon_entropy(dist(basisA));
  r.hB = shannon_entropy(dist(basisB));
  r.lhs = r.hA + r.hB;
  double c = (basisA.M.adjoint() * basisB.M).cwiseAbs().maxCoeff();
  r.rhs = -2.0 * std::log(c);
  r.slack = r.lhs - r.rhs;
  return r;
}

namespace {

void check_level2_inputs(const QuantumPartition& qp,
                         const std::vector<double>& v_cells,
                         const std::vector<double>& w_cells) {
  if (qp.mode != QuantumPartition::Mode::Sharp)
    throw ConfigError(
        "eup_level2 requires sharp partitions (exact resolution of identity)");
  if (int(v_cells.size()) != qp.K || int(w_cells.size()) != qp.K)
    throw ConfigError("eup_level2 needs one weight per cell on each side");
  for (double x : v_cells)
    if (x <= 0) throw ConfigError("weights must be positive");
  for (double x : w_cells)
    if (x <= 0) throw ConfigError("weights must be positive");
}

}  // namespace

EupCrossTerm eup_cross_term(const QuantumPartition& qp, const Propagator& prop,
                            int n, const std::vector<double>& v_cells,
                            const std::vector<double>& w_cells) {
  check_level2_inputs(qp, v_cells, w_cells);
  std::vector<double> logv(qp.K), logw(qp.K);
  for (int k = 0; k < qp.K; ++k) {
    logv[k] = std::log(v_cells[k]);
    logw[k] = std::log(w_cells[k]);
  }
  std::vector<Word> words = all_words(qp.K, n);
  double best = 0.0;
  for (const Word& wb : words) {
    double lv = 0.0;
    for (int s : wb.symbols) lv += logv[s];
    for (const Word& wa : words) {
      double lw = 0.0;
      for (int s : wa.symbols) lw += logw[s];
      NormResult nr = cross_family_norm(qp, prop, wb, wa);
      if (!nr.converged)
        throw NumericError("cross norm power iteration did not converge");
      if (nr.value > 0)
        best = std::max(best, std::exp(lv + lw + std::log(nr.value)));
    }
  }
  EupCrossTerm cross;
  cross.depth = n;
  cross.max_weighted_cross = best;
  cross.cross_log = 2.0 * std::log(best);
  return cross;
}

EupLevel2Report eup_level2(const VecC& psi, const QuantumPartition& qp,
                           const Propagator& prop,
                           const std::vector<double>& v_cells,
                           const std::vector<double>& w_cells,
                           const EupCrossTerm& cross) {
  check_level2_inputs(qp, v_cells, w_cells);
  const int n = cross.depth;

  std::vector<double> logv(qp.K), logw(qp.K);
  for (int k = 0; k < qp.K; ++k) {
    logv[k] = std::log(v_cells[k]);
    logw[k] = std::log(w_cells[k]);
  }

  QuantumSymbolicMeasure tau = refined_measure(psi, qp, prop, n, 0.0);
  QuantumSymbolicMeasure rho = backward_refined_measure(psi, qp, prop, n, 0.0);

  WordCodec codec(qp.K);
  auto pressure = [&](const QuantumSymbolicMeasure& m,
                      const std::vector<double>& lg) {
    double H = 0.0, S = 0.0;
    for (const auto& [w, p] : m.weights(n)) {
      if (p > 0) H -= p * std::log(p);
      S += p * word_log_jacobian(codec, w, n, lg);
    }
    return H - 2.0 * S;
  };

  EupLevel2Report rep;
  rep.depth = n;
  rep.p_rho = pressure(rho, logv);
  rep.p_tau = pressure(tau, logw);
  rep.max_weighted_cross = cross.max_weighted_cross;
  rep.cross_log = cross.cross_log;
  rep.slack = rep.p_rho + rep.p_tau + rep.cross_log;
  return rep;
}

EupLevel2Report eup_level2(const VecC& psi, const QuantumPartition& qp,
                           const Propagator& prop, int n,
                           const std::vector<double>& v_cells,
                           const std::vector<double>& w_cells) {
  return eup_level2(psi, qp, prop, v_cells, w_cells,
                    eup_cross_term(qp, prop, n, v_cells, w_cells));
}

EhrenfestClock EhrenfestClock::make(double lambda_max, double epsilon, int n_max) {
  if (lambda_max <= 0) throw ConfigError("Ehrenfest clock needs lambda_max > 0");
  EhrenfestClock c;
  c.epsilon = epsilon;
  c.lambda_max = lambda_max;
  c.lambda_eps = lambda_max * (1.0 + epsilon);
  c.n_max = n_max;
  return c;
}

int EhrenfestClock::T(int N) const {
  int t = int(std::floor((1.0 - epsilon) * std::log(double(N)) / (2.0 * lambda_eps)));
  t = std::max(t, 1);  // depth-0 trees are degenerate below the clock scale
  if (t > n_max) throw ConfigError("Ehrenfest time exceeds configured n_max");
  return t;
}

int EhrenfestClock::two_T(int N) const {
  int t = int(std::floor((1.0 - epsilon) * std::log(double(N)) / lambda_eps));
  t = std::max(t, 1);
  if (t > n_max) throw ConfigError("Ehrenfest depth exceeds configured n_max");
  return t;
}

std::vector<EntropyBoundRow> entropy_bound_report(
    const Spectrum& spectrum, const MapSpec& spec,
    const PartitionSpec& partition, const EhrenfestClock& clock,
    const Propagator& prop, const QuantumPartition& qp,
    const EntropyBoundOptions& opts) {
  const int N = prop.space.N;
  const int T = clock.T(N);
  std::vector<double> logJ = cell_jacobians(spec, partition, opts.cone_iters);
  for (double& j : logJ) j = std::log(j);
  WordCodec codec(qp.K);

  auto row_for = [&](const VecC& psi, int index) {
    QuantumSymbolicMeasure m = refined_measure(psi, qp, prop, T, opts.prune);
    EntropyBoundRow row;
    row.state = index;
    double H = 0.0, J = 0.0;
    for (const auto& [w, p] : m.weights(T)) {
      if (p > 0) H -= p * std::log(p);
      J += p * word_log_jacobian(codec, w, T, logJ);
    }
    row.entropy_rate = H / T;
    row.jacobian_mean = J / T;
    row.rhs = row.jacobian_mean - clock.lambda_max / 2.0;
    row.slack = row.entropy_rate - row.rhs;
    return row;
  };

  std::vector<EntropyBoundRow> rows;
  rows.reserve(N + 1);
  for (int k = 0; k < N; ++k)
    rows.push_back(row_for(spectrum.eigenvectors.col(k), k));
  if (opts.control_row) {
    VecC c = coherent_state(prop.space, TorusPoint(0.0, 0.0));
    rows.push_back(row_for(c, -1));
  }
  std::sort(rows.begin(), rows.end(), [](const EntropyBoundRow& a,
                                         const EntropyBoundRow& b) {
    if (a.slack != b.slack) return a.slack < b.slack;
    return a.state < b.state;
  });
  return rows;
}

std::vector<Word> all_words(int K, int n) {
  std::vector<Word> out;
  out.reserve(std::size_t(std::pow(double(K), n)));
  Word w;
  w.symbols.assign(n, 0);
  while (true) {
    out.push_back(w);
    int j = n - 1;
    while (j >= 0 && w.symbols[j] == K - 1) w.symbols[j--] = 0;
    if (j < 0) break;
    ++w.symbols[j];
  }
  return out;
}

}  // namespace qcat
