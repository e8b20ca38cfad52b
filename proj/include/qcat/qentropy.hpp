#pragma once

#include "qcat/partitions.hpp"
#include "qcat/qmaps.hpp"

namespace qcat {

// Quantum partition of unity: hermitian Pi_k with sum Pi_k^2 = Id up to r.
// Sharp mode stores 0/1 position masks (exact projectors, r = 0); smooth mode
// stores dense hermitian Op_N(sqrt(pi_k)) with the residual tracked.
struct QuantumPartition {
  enum class Mode { Sharp, Smooth };

  Mode mode = Mode::Sharp;
  int K = 1;
  int N = 1;
  std::vector<Eigen::VectorXd> masks;  // sharp
  std::vector<MatC> ops;               // smooth
  double residual = 0.0;               // ||sum Pi_k^2 - Id||

  VecC apply(int k, const VecC& v) const {
    return mode == Mode::Sharp ? VecC(masks[k].cast<cplx>().asDiagonal() * v)
                               : VecC(ops[k] * v);
  }
  MatC matrix(int k) const {
    return mode == Mode::Sharp ? MatC(masks[k].cast<cplx>().asDiagonal())
                               : ops[k];
  }
};

// Sharp path: cells must be position strips, Pi_k projects onto {j : j/N in I_k}.
QuantumPartition quantize_partition(const HilbertSpaceSpec& space,
                                    const PartitionSpec& partition);
// Smooth path: Pi_k = hermitian part of Op_N(sqrt(pi_k)), residual recorded.
QuantumPartition quantize_partition(const HilbertSpaceSpec& space,
                                    const SmoothPartition& partition);

struct QuantumSymbolicMeasure {
  enum class Direction { Forward, Backward };

  int depth = 0;
  int K = 1;
  Direction direction = Direction::Forward;
  double prune = 0.0;
  double pruned_mass = 0.0;
  double partition_residual = 0.0;
  std::vector<std::map<std::uint64_t, double>> levels;

  const std::map<std::uint64_t, double>& weights(int n) const;
  double total_mass() const;  // at full depth, ignoring pruned branches
};

// Weights ||Pi_alpha psi||^2 via the vector tree: first level applies the
// partition directly, deeper levels interleave the propagator. The backward
// variant applies U^{-1} before every projection.
QuantumSymbolicMeasure refined_measure(
    const VecC& psi, const QuantumPartition& qp, const Propagator& prop, int n,
    double prune = 1e-12,
    QuantumSymbolicMeasure::Direction direction =
        QuantumSymbolicMeasure::Direction::Forward);

QuantumSymbolicMeasure backward_refined_measure(const VecC& psi,
                                                const QuantumPartition& qp,
                                                const Propagator& prop, int n,
                                                double prune = 1e-12);

struct QuantumEntropyResult {
  double H = 0.0;
  // Bound on what pruning may have removed: eta(pruned) + pruned * n log K.
  double upper_correction = 0.0;
};

QuantumEntropyResult quantum_entropy(const QuantumSymbolicMeasure& m);

struct PressureReport {
  int depth = 0;
  double entropy = 0.0;
  double pressure = 0.0;
  std::string weight_scheme = "jacobian-sqrt";
  double bound = 0.0;
  double slack = 0.0;
  double partition_residual = 0.0;
  double pruned_mass = 0.0;
};

// p = H - sum_alpha mu(alpha) log J_n(alpha) for weights v = J^{1/2}.
PressureReport quantum_pressure(const QuantumSymbolicMeasure& m,
                                const MapSpec& spec,
                                const PartitionSpec& partition,
                                int cone_iters = 30);
PressureReport quantum_pressure(const QuantumSymbolicMeasure& m,
                                const std::vector<double>& cell_log_jacobians);

// max over |beta| = n0 of |mu(sigma^{-n}[.beta]) - mu([.beta])|.
double shift_invariance_residual(const VecC& psi, const QuantumPartition& qp,
                                 const Propagator& prop, int n, int n0,
                                 double prune = 1e-12);

// p(n + n0) - p(n) - p(n0); the positive part is the violation.
double pressure_subadditivity_residual(const QuantumSymbolicMeasure& m,
                                       const std::vector<double>& cell_log_jacobians,
                                       int n, int n0);

struct NormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = true;
  double last_delta = 0.0;
};

// ||Pi_alpha|| by power iteration on Pi*Pi applied factor by factor; the
// operator product is never materialized.
NormResult dispersive_norm(const QuantumPartition& qp, const Propagator& prop,
                           const Word& word, double tol = 1e-8,
                           int max_iter = 500);

// ||tau_alpha rho_beta*|| for the forward family tau and backward family rho:
// equals the refined norm of the length-2n word (reverse(beta), alpha).
NormResult cross_family_norm(const QuantumPartition& qp, const Propagator& prop,
                             const Word& rho_word, const Word& tau_word,
                             double tol = 1e-9, int max_iter = 500);

struct EupLevel1Report {
  double hA = 0.0, hB = 0.0;
  double lhs = 0.0, rhs = 0.0, slack = 0.0;
};

EupLevel1Report eup_level1(const VecC& psi, const TorusOperator& basisA,
                           const TorusOperator& basisB);

struct EupLevel2Report {
  int depth = 0;
  double p_rho = 0.0, p_tau = 0.0;
  double max_weighted_cross = 0.0;  // max v_i w_j ||tau_j rho_i*||
  double cross_log = 0.0;           // 2 log max ...
  double slack = 0.0;               // p_rho + p_tau + cross_log
};

// State-independent part of the level-2 bound: max v_i w_j ||tau_j rho_i*||
// over all word pairs at depth n. Shared across eigenstates of one propagator.
struct EupCrossTerm {
  int depth = 0;
  double max_weighted_cross = 0.0;
  double cross_log = 0.0;
};

EupCrossTerm eup_cross_term(const QuantumPartition& qp, const Propagator& prop,
                            int n, const std::vector<double>& v_cells,
                            const std::vector<double>& w_cells);

// Weighted level-2 EUP for the forward/backward refined families at depth n
// with per-cell weights v (rho side) and w (tau side).
EupLevel2Report eup_level2(const VecC& psi, const QuantumPartition& qp,
                           const Propagator& prop, int n,
                           const std::vector<double>& v_cells,
                           const std::vector<double>& w_cells);
EupLevel2Report eup_level2(const VecC& psi, const QuantumPartition& qp,
                           const Propagator& prop,
                           const std::vector<double>& v_cells,
                           const std::vector<double>& w_cells,
                           const EupCrossTerm& cross);

struct EhrenfestClock {
  double epsilon = 0.1;
  double lambda_max = 0.0;
  double lambda_eps = 0.0;
  int n_max = 16;

  static EhrenfestClock make(double lambda_max, double epsilon = 0.1,
                             int n_max = 16);
  // (1-eps) log N / (2 lambda_eps), rounded down, clamped to >= 1.
  int T(int N) const;
  // Depth 2T before rounding: (1-eps) log N / lambda_eps, rounded down.
  int two_T(int N) const;
};

struct EntropyBoundRow {
  int state = -1;  // -1 marks the control row
  double entropy_rate = 0.0;
  double jacobian_mean = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
};

struct EntropyBoundOptions {
  double prune = 1e-12;
  int cone_iters = 30;
  bool control_row = true;
};

// Per eigenstate at depth T(N): entropy rate, Jacobian mean, bound rhs
// = mean - lambda_max/2, slack; sorted by slack. The optional control row is
// a coherent state pinned at a fixed point, showing the bound fails for
// non-eigenstates.
std::vector<EntropyBoundRow> entropy_bound_report(
    const Spectrum& spectrum, const MapSpec& spec,
    const PartitionSpec& partition, const EhrenfestClock& clock,
    const Propagator& prop, const QuantumPartition& qp,
    const EntropyBoundOptions& opts = {});

std::vector<Word> all_words(int K, int n);

}  // namespace qcat
