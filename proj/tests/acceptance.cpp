// Release gate. Each numbered check prints one PASS/FAIL line with the
// measured value and its target; the process exit code is the number of
// failed checks. Checks 04 and 07 probe asymptotic trends at finite N and
// are documented in the README as the honest state of those estimates.

#include "qcat/qentropy.hpp"
#include "qcat/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

using namespace qcat;

namespace {

struct Gate {
  int failures = 0;

  void check(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] check %02d %s: %s\n", pass ? "PASS" : "FAIL", id, name,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

MapSpec cat_map() {
  MapSpec spec;
  spec.linear = SymplecticMatrix{2, 1, 3, 2};
  return spec;
}

MapSpec kicked_cat(KickForm form = KickForm::Position) {
  MapSpec spec = cat_map();
  spec.kick = KickHamiltonian::cosine(form, 1, 0.05);
  return spec;
}

// max |A - phase * B| after aligning the global phase on the (0,0) entry
double phase_aligned_dev(const MatC& A, const MatC& B) {
  cplx ratio = A(0, 0) / B(0, 0);
  double mag = std::abs(ratio);
  cplx phase = mag > 0 ? ratio / mag : cplx(1.0);
  return (A - phase * B).cwiseAbs().maxCoeff();
}

// exp(i pi a / N) with the integer argument reduced mod 2N first; transported
// frequencies reach ~1e7 at t = 5 and would otherwise shred the phase.
cplx half_phase(long long a, int N) {
  long long r = a % (2LL * N);
  if (r < 0) r += 2LL * N;
  return std::exp(cplx(0, PI * double(r) / N));
}

// ||T(m,n) U - U T(m',n')||_F via the one-nonzero-per-row structure of the
// translations; never materializes the products.
double translation_commutator_fro(const MatC& U, int N, long long m,
                                  long long n, long long mp, long long np) {
  cplx w = half_phase(m * n, N);
  cplx wp = half_phase(mp * np, N);
  int row_shift = int(((n % N) + N) % N);
  int col_shift = int(((np % N) + N) % N);
  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    cplx left = w * half_phase(2 * m * i, N);
    int row = (i + row_shift) % N;
    for (int k = 0; k < N; ++k) {
      int col = (k - col_shift + N) % N;
      cplx right = wp * half_phase(2 * mp * (k - np), N);
      acc += std::norm(left * U(row, k) - U(i, col) * right);
    }
  }
  return std::sqrt(acc);
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

int main() {
  Gate gate;
  const auto wall0 = std::chrono::steady_clock::now();

  // shared kicked-map spectra (checks 06, 09, 11, 12)
  std::map<int, Propagator> kprop;
  std::map<int, Spectrum> kspec;
  for (int N : {64, 128, 256}) {
    HilbertSpaceSpec space(N);
    kprop.emplace(N, propagator(space, kicked_cat()));
    kspec.emplace(N, eigensystem(kprop.at(N)));
  }

  // 01: every propagator is unitary to machine precision
  {
    double worst = 0.0;
    for (int N : {32, 64, 128, 256, 512}) {
      HilbertSpaceSpec space(N);
      for (const MapSpec& spec : {cat_map(), kicked_cat(KickForm::Position),
                                  kicked_cat(KickForm::Momentum)}) {
        worst = std::max(worst, propagator(space, spec).unitarity_residual);
      }
    }
    gate.check(1, "propagator unitarity", worst < 1e-10,
               fmt("max ||U'U - Id|| = %.3e over N in {32..512}, linear and "
                   "both kick forms (tol 1e-10)",
                   worst));
  }

  // 02: the quarter-turn quantizes to the fourier kernel itself
  {
    double worst_plus = 0.0;   // [[0,1],[-1,0]] against F
    double worst_minus = 0.0;  // [[0,-1],[1,0]] against conj(F)
    for (int N = 2; N <= 512; ++N) {
      HilbertSpaceSpec space(N);
      MatC F = dft(space).M;
      worst_plus = std::max(
          worst_plus,
          phase_aligned_dev(metaplectic(space, {0, 1, -1, 0}).U, F));
      worst_minus = std::max(
          worst_minus, phase_aligned_dev(metaplectic(space, {0, -1, 1, 0}).U,
                                         F.conjugate()));
    }
    gate.check(2, "fourier anchor of the quantized quarter-turn",
               worst_plus < 1e-10,
               fmt("max dev U([[0,1],[-1,0]]) vs DFT = %.3e for all N <= 512 "
                   "(tol 1e-10); the mirrored matrix lands on the conjugate "
                   "kernel, dev %.3e",
                   worst_plus, worst_minus));
  }

  // 03: conjugation by the linear propagator transports every trig monomial
  // exactly
  {
    double worst = 0.0;
    for (int N : {64, 128, 256}) {
      HilbertSpaceSpec space(N);
      Propagator prop = propagator(space, cat_map());
      MatC Ut = prop.U;
      for (int t = 1; t <= 5; ++t) {
        if (t > 1) Ut = prop.U * Ut;
        SymplecticMatrix St = cat_map().linear.pow(t);
        for (long long m = -5; m <= 5; ++m) {
          for (long long n = -5; n <= 5; ++n) {
            long long mp = St.a * m + St.c * n;
            long long np = St.b * m + St.d * n;
            worst = std::max(
                worst, translation_commutator_fro(Ut, N, m, n, mp, np));
          }
        }
      }
    }
    gate.check(3, "exact transport of trig symbols by the linear map",
               worst < 1e-9,
               fmt("max ||Op(f) U^t - U^t Op(f o S^t)||_F = %.3e over "
                   "|m|,|n| <= 5, t <= 5, N in {64,128,256} (tol 1e-9)",
                   worst));
  }

  // 04: conjugation residual decay rate for the weakly kicked map
  {
    MapSpec spec = kicked_cat(KickForm::Momentum);
    TrigSymbol f = TrigSymbol::cosine_x(1, 2.0);
    std::vector<int> Ns = {64, 128, 256, 512};
    std::vector<double> rs;
    for (int N : Ns)
      rs.push_back(egorov_residual(HilbertSpaceSpec(N), spec, f, 1).residual);
    // least-squares slope of log r against log N, reported as the decay rate
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < Ns.size(); ++i) {
      double x = std::log(double(Ns[i])), y = std::log(rs[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double k = double(Ns.size());
    double decay = -(k * sxy - sx * sy) / (k * sxx - sx * sx);
    gate.check(4, "kicked-map conjugation residual decay rate",
               decay >= 0.8 && decay <= 1.2,
               fmt("residuals %.3e..%.3e over N in {64..512}, decay rate "
                   "%.3f (target band [0.8, 1.2]; the measured rate sits at "
                   "the second-order value ~2)",
                   rs.front(), rs.back(), decay));
  }

  // 05: entropy sum bound for the position/fourier pair
  {
    HilbertSpaceSpec space(128);
    TorusOperator id = TorusOperator::make_unitary(MatC::Identity(128, 128));
    TorusOperator F = dft(space);

    EupLevel1Report sat = eup_level1(basis_state(space, 0), id, F);
    double rhs_err = std::fabs(sat.rhs - std::log(128.0));
    double min_slack = sat.slack;
    for (std::uint64_t s = 1; s <= 1000; ++s)
      min_slack =
          std::min(min_slack, eup_level1(random_state(space, s), id, F).slack);
    bool pass =
        rhs_err < 1e-12 && min_slack >= -1e-9 && std::fabs(sat.slack) <= 1e-10;
    gate.check(5, "position/fourier entropy sum bound", pass,
               fmt("rhs - log N = %.1e, min slack over 1000 random states = "
                   "%.3e (>= -1e-9), basis-state saturation |slack| = %.1e "
                   "(<= 1e-10) at N = 128",
                   rhs_err, min_slack, std::fabs(sat.slack)));
  }

  // 06: weighted two-family entropy sum bound at the Ehrenfest depth
  {
    const auto t0 = std::chrono::steady_clock::now();
    const int N = 128;
    MapSpec spec = kicked_cat();
    const Propagator& prop = kprop.at(N);
    const Spectrum& sp = kspec.at(N);
    PartitionSpec part = PartitionSpec::strips(2);
    QuantumPartition qp = quantize_partition(HilbertSpaceSpec(N), part);
    std::vector<double> J = cell_jacobians(spec, part, 30);
    std::vector<double> w = {std::sqrt(J[0]), std::sqrt(J[1])};
    double lambda = lyapunov_max(spec, 20000, 20260816).lambda_max;
    int depth = EhrenfestClock::make(lambda).two_T(N);

    EupCrossTerm cross = eup_cross_term(qp, prop, depth, w, w);
    double min_slack = 1e300;
    for (int k = 0; k < N; ++k)
      min_slack = std::min(
          min_slack,
          eup_level2(sp.eigenvectors.col(k), qp, prop, w, w, cross).slack);
    gate.check(6, "weighted entropy sum bound at the Ehrenfest depth",
               min_slack >= -1e-8,
               fmt("min slack over all %d eigenstates = %.4f at depth %d with "
                   "sqrt-Jacobian weights (>= -1e-8, %.0f s)",
                   N, min_slack, depth, elapsed_s(t0)));
  }

  // 07: refined word norms against the dispersive budget
  {
    MapSpec spec = cat_map();
    PartitionSpec part = PartitionSpec::strips(2);
    double lambda = spec.linear.lambda_max();
    std::vector<int> Ns = {64, 128, 256};
    std::vector<double> maxima;
    for (int N : Ns) {
      HilbertSpaceSpec space(N);
      Propagator prop = propagator(space, spec);
      QuantumPartition qp = quantize_partition(space, part);
      int n = int(std::floor(2.0 * std::log(double(N)) / lambda));
      double best = 0.0;
      for (const Word& word : all_words(2, n)) {
        NormResult nr = dispersive_norm(qp, prop, word);
        double Jw = coarse_grained_jacobian(spec, part, word, 30);
        best = std::max(best, nr.value * std::sqrt(Jw / N));
      }
      maxima.push_back(best);
    }
    double g1 = maxima[1] / maxima[0] - 1.0;
    double g2 = maxima[2] / maxima[1] - 1.0;
    bool pass = g1 <= 0.25 && g2 <= 0.25;
    gate.check(7, "dispersive norm budget across N", pass,
               fmt("max ||Pi_alpha|| sqrt(J_n/N) = %.4f / %.4f / %.4f at N = "
                   "64/128/256 (full word sets, n = 6/7/8); growth %.1f%% "
                   "then %.1f%% against a 25%% cap",
                   maxima[0], maxima[1], maxima[2], 100 * g1, 100 * g2));
  }

  // 08: classical entropy rate near log lambda and the expansion bound
  {
    MapSpec spec = cat_map();
    PartitionSpec grid = PartitionSpec::grid(4, 4);
    std::vector<TorusPoint> pts = sample_invariant_measure(
        MeasureKind::lebesgue(), spec, 1000000, 20260816);
    EntropyRateReport rep = ks_entropy_rate(spec, grid, pts, 8, 20260816);
    double h_leb = rep.rows.back().increment_mm;
    double target = 1.316958;
    double rel = std::fabs(h_leb - target) / target;

    double mean_logJ = 0.0;  // constant for the linear map
    for (int i = 0; i < 2000; ++i)
      mean_logJ += std::log(unstable_jacobian(spec, pts[i], 30));
    mean_logJ /= 2000.0;
    double slack_leb = mean_logJ - h_leb;

    auto p2 = find_periodic_point(spec, 2);
    bool orbit_ok = false;
    double h_orbit = 0.0, slack_orbit = 0.0;
    if (p2) {
      std::vector<TorusPoint> opts = sample_invariant_measure(
          MeasureKind::periodic_orbit(*p2, 2), spec, 100000, 1);
      EntropyRateReport orep = ks_entropy_rate(spec, grid, opts, 8, 1);
      h_orbit = orep.rows.back().rate;
      double mean_logJ_orbit =
          0.5 * (std::log(unstable_jacobian(spec, *p2, 30)) +
                 std::log(unstable_jacobian(spec, apply_map(spec, *p2), 30)));
      slack_orbit = mean_logJ_orbit - h_orbit;
      orbit_ok = h_orbit <= 0.1 && slack_orbit >= -0.05;
    }
    bool pass = rel <= 0.10 && slack_leb >= -0.05 && orbit_ok;
    gate.check(8, "classical entropy rate and expansion bound", pass,
               fmt("bias-corrected rate %.4f vs %.4f (off %.1f%%, cap 10%%); "
                   "expansion slack %.3f lebesgue / %.3f period-2 orbit "
                   "(>= -0.05), orbit rate %.4f (<= 0.1)",
                   h_leb, target, 100 * rel, slack_leb, slack_orbit, h_orbit));
  }

  // 09: symbolic measures of every eigenstate conserve mass level by level
  {
    const int N = 128, depth = 8;
    const Propagator& prop = kprop.at(N);
    const Spectrum& sp = kspec.at(N);
    QuantumPartition qp =
        quantize_partition(HilbertSpaceSpec(N), PartitionSpec::strips(2));
    WordCodec codec(2);
    double worst_mass = 0.0, worst_compat = 0.0, worst_tol = 0.0;
    for (int k = 0; k < N; ++k) {
      QuantumSymbolicMeasure m =
          refined_measure(sp.eigenvectors.col(k), qp, prop, depth, 1e-12);
      double tol = 1e-10 + m.pruned_mass;
      worst_tol = std::max(worst_tol, tol);
      worst_mass = std::max(
          worst_mass, std::fabs(m.total_mass() + m.pruned_mass - 1.0));
      for (int n = 2; n <= depth; ++n) {
        for (const auto& [w, mass] : m.weights(n - 1)) {
          double sum = 0;
          for (int s = 0; s < 2; ++s) {
            auto it = m.weights(n).find(codec.push(w, n - 1, s));
            if (it != m.weights(n).end()) sum += it->second;
          }
          worst_compat = std::max(worst_compat, std::fabs(sum - mass));
        }
      }
    }
    bool pass = worst_mass <= worst_tol && worst_compat <= worst_tol;
    gate.check(9, "symbolic measure mass and compatibility", pass,
               fmt("all %d eigenstates at depth %d: mass defect %.2e, "
                   "compatibility excess %.2e (tol 1e-10 + pruned mass, "
                   "max %.2e)",
                   N, depth, worst_mass, worst_compat, worst_tol));
  }

  // 10: eigenstate entropy rates against the expansion/instability bound
  {
    const auto t0 = std::chrono::steady_clock::now();
    MapSpec spec = kicked_cat();
    PartitionSpec part = PartitionSpec::strips(4);
    double lambda = lyapunov_max(spec, 20000, 20260816).lambda_max;
    EhrenfestClock clock = EhrenfestClock::make(lambda);
    std::vector<int> Ns = {128, 256, 512};
    std::vector<double> mins;
    for (int N : Ns) {
      HilbertSpaceSpec space(N);
      Propagator prop =
          N <= 256 ? kprop.at(N) : propagator(space, kicked_cat());
      Spectrum sp = N <= 256 ? kspec.at(N) : eigensystem(prop);
      QuantumPartition qp = quantize_partition(space, part);
      std::vector<EntropyBoundRow> rows =
          entropy_bound_report(sp, spec, part, clock, prop, qp);
      double min_eigen = 1e300;
      for (const EntropyBoundRow& r : rows)
        if (r.state >= 0) min_eigen = std::min(min_eigen, r.slack);
      mins.push_back(min_eigen);
    }
    bool pass = mins[0] >= -0.15 && mins[1] >= mins[0] - 1e-12 &&
                mins[2] >= mins[1] - 1e-12;
    gate.check(10, "eigenstate entropy rate lower bound trend", pass,
               fmt("min eigenstate slack %.4f / %.4f / %.4f at N = "
                   "128/256/512 (>= -0.15 and non-decreasing, %.0f s)",
                   mins[0], mins[1], mins[2], elapsed_s(t0)));
  }

  // 11: eigenbasis observable variance shrinks with N
  {
    TrigSymbol f = TrigSymbol::cosine_x(1, 2.0);
    std::vector<double> vars;
    for (int N : {64, 128, 256}) {
      HilbertSpaceSpec space(N);
      const Spectrum& sp = kspec.at(N);
      TorusOperator A = op_N(space, f);
      double mean = 0;
      std::vector<double> vals(N);
      for (int k = 0; k < N; ++k) {
        vals[k] = expectation(sp.eigenvectors.col(k), A).real();
        mean += vals[k];
      }
      mean /= N;
      double var = 0;
      for (double v : vals) var += (v - mean) * (v - mean);
      vars.push_back(var / N);
    }
    bool pass = vars[1] < vars[0] && vars[2] < vars[1];
    gate.check(11, "eigenbasis observable variance trend", pass,
               fmt("variance of <psi, Op(2cos 2pi x) psi> = %.4e / %.4e / "
                   "%.4e at N = 64/128/256 (strictly decreasing)",
                   vars[0], vars[1], vars[2]));
  }

  // 12: symbolic measures become shift-invariant as N grows
  {
    MapSpec spec = kicked_cat();
    PartitionSpec part = PartitionSpec::strips(2);
    std::vector<double> residuals;
    std::vector<int> picked;
    for (int N : {64, 128, 256}) {
      HilbertSpaceSpec space(N);
      const Propagator& prop = kprop.at(N);
      const Spectrum& sp = kspec.at(N);
      QuantumPartition qp = quantize_partition(space, part);
      std::vector<double> J = cell_jacobians(spec, part, 30);
      std::vector<double> w = {std::sqrt(J[0]), std::sqrt(J[1])};
      EupCrossTerm cross = eup_cross_term(qp, prop, 1, w, w);
      std::vector<std::pair<double, int>> slacks(N);
      for (int k = 0; k < N; ++k)
        slacks[k] = {
            eup_level2(sp.eigenvectors.col(k), qp, prop, w, w, cross).slack,
            k};
      std::sort(slacks.begin(), slacks.end());
      int median = slacks[N / 2].second;  // fixed eigenstate index policy
      picked.push_back(median);
      residuals.push_back(shift_invariance_residual(
          sp.eigenvectors.col(median), qp, prop, 4, 1, 0.0));
    }
    bool pass = residuals[1] < residuals[0] && residuals[2] < residuals[1];
    gate.check(12, "shift invariance of symbolic measures trend", pass,
               fmt("median-slack eigenstates %d/%d/%d give residuals %.3e / "
                   "%.3e / %.3e at N = 64/128/256 (strictly decreasing)",
                   picked[0], picked[1], picked[2], residuals[0], residuals[1],
                   residuals[2]));
  }

  std::printf("%d of 12 checks passed (%.0f s total)\n", 12 - gate.failures,
              elapsed_s(wall0));
  return gate.failures;
}
