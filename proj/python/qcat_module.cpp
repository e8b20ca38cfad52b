// Python surface for the torus map laboratory. Deliberately functional:
// plain numbers, numpy arrays and dicts in and out, no wrapper class
// hierarchy. Heavy lifting stays in the C++ core.

#include "qcat/qentropy.hpp"
#include "qcat/qmaps.hpp"
#include "qcat/runner.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace qcat;

namespace {

MapSpec make_linear(int a, int b, int c, int d) {
  MapSpec spec;
  spec.linear = SymplecticMatrix{a, b, c, d};
  spec.validate();
  return spec;
}

MapSpec make_kicked(int a, int b, int c, int d, const std::string& form,
                    int k, double amplitude) {
  MapSpec spec;
  spec.linear = SymplecticMatrix{a, b, c, d};
  KickForm kf;
  if (form == "position")
    kf = KickForm::Position;
  else if (form == "momentum")
    kf = KickForm::Momentum;
  else
    throw ConfigError("kick form: expected position or momentum");
  spec.kick = KickHamiltonian::cosine(kf, k, amplitude);
  spec.validate();
  return spec;
}

double map_lambda(const MapSpec& spec, int iters, std::uint64_t seed) {
  if (spec.is_linear()) return spec.linear.lambda_max();
  return lyapunov_max(spec, iters, seed).lambda_max;
}

// Jacobian-weighted cell weights sqrt(J_k), the default for level-2 bounds.
std::vector<double> cell_weights(const MapSpec& spec, int K,
                                 const std::string& weights) {
  std::vector<double> v(std::size_t(K), 1.0);
  if (weights == "jacobian") {
    std::vector<double> J = cell_jacobians(spec, PartitionSpec::strips(K));
    for (int k = 0; k < K; ++k)
      v[std::size_t(k)] = std::sqrt(J[std::size_t(k)]);
  } else if (weights != "unit") {
    throw ConfigError("weights: expected jacobian or unit");
  }
  return v;
}

py::dict weights_dict(const QuantumSymbolicMeasure& m, int n) {
  WordCodec codec(m.K);
  py::dict out;
  for (const auto& [code, w] : m.weights(n)) {
    Word word = codec.unpack(code, n);
    py::tuple key(n);
    for (int i = 0; i < n; ++i) key[i] = word.symbols[std::size_t(i)];
    out[key] = w;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(qcat, m) {
  m.doc() = "quantized hyperbolic torus maps: propagators, symbolic "
            "refinement, entropy bounds";
  m.attr("__version__") = QCAT_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<NumericError>(m, "NumericError");

  py::class_<MapSpec>(m, "Map")
      .def_property_readonly("matrix",
                             [](const MapSpec& s) {
                               return py::make_tuple(s.linear.a, s.linear.b,
                                                     s.linear.c, s.linear.d);
                             })
      .def_property_readonly(
          "is_linear", [](const MapSpec& s) { return s.is_linear(); })
      .def("__repr__", [](const MapSpec& s) {
        std::string r = "Map([[" + std::to_string(s.linear.a) + ", " +
                        std::to_string(s.linear.b) + "], [" +
                        std::to_string(s.linear.c) + ", " +
                        std::to_string(s.linear.d) + "]]";
        if (s.kick) r += ", kicked";
        return r + ")";
      });

  m.def("linear_map", &make_linear, py::arg("a"), py::arg("b"), py::arg("c"),
        py::arg("d"), "Hyperbolic integer symplectic map of the torus.");
  m.def("kicked_map", &make_kicked, py::arg("a"), py::arg("b"), py::arg("c"),
        py::arg("d"), py::arg("form") = "position", py::arg("k") = 1,
        py::arg("amplitude") = 0.05,
        "Linear map composed with the time-1 flow of a cosine kick.");

  m.def(
      "apply",
      [](const MapSpec& spec, double x, double xi, int t) {
        TorusPoint p = apply_map_n(spec, TorusPoint(x, xi), t);
        return py::make_tuple(p.x, p.xi);
      },
      py::arg("map"), py::arg("x"), py::arg("xi"), py::arg("t") = 1,
      "Iterate the map t times (negative t runs the inverse).");

  m.def(
      "lyapunov",
      [](const MapSpec& spec, int iters, std::uint64_t seed) {
        return map_lambda(spec, iters, seed);
      },
      py::arg("map"), py::arg("iters") = 20000, py::arg("seed") = 20260816,
      "Top Lyapunov exponent: exact for linear maps, measured along a "
      "random orbit otherwise.");

  m.def(
      "dft_matrix",
      [](int N) { return dft(HilbertSpaceSpec(N)).M; }, py::arg("N"),
      "Discrete Fourier transform on the N-dimensional torus space.");

  m.def(
      "propagator_matrix",
      [](const MapSpec& spec, int N) {
        return propagator(HilbertSpaceSpec(N), spec).U;
      },
      py::arg("map"), py::arg("N"),
      "Unitary propagator: metaplectic part times the kick phase.");

  m.def(
      "eigensystem",
      [](const MapSpec& spec, int N) {
        Spectrum sp = eigensystem(propagator(HilbertSpaceSpec(N), spec));
        Eigen::VectorXd phases = Eigen::Map<const Eigen::VectorXd>(
            sp.eigenphases.data(), Eigen::Index(sp.eigenphases.size()));
        return py::make_tuple(phases, sp.eigenvectors);
      },
      py::arg("map"), py::arg("N"),
      "Eigenphases sorted in [0, 2 pi) and the paired eigenvector columns.");

  m.def(
      "coherent",
      [](int N, double x, double xi) {
        return coherent_state(HilbertSpaceSpec(N), TorusPoint(x, xi));
      },
      py::arg("N"), py::arg("x"), py::arg("xi"),
      "Normalized coherent state centered at (x, xi).");

  m.def(
      "husimi_grid",
      [](const VecC& psi, int resolution) {
        HilbertSpaceSpec space(int(psi.size()));
        std::vector<double> g = husimi(space, psi, resolution);
        Eigen::MatrixXd out(resolution, resolution);
        for (int i = 0; i < resolution; ++i)
          for (int j = 0; j < resolution; ++j)
            out(i, j) = g[std::size_t(i) * resolution + j];
        return out;
      },
      py::arg("psi"), py::arg("resolution") = 128,
      "Husimi mass on a resolution^2 grid; rows index x, columns xi, "
      "total normalized to 1.");

  m.def(
      "refined_weights",
      [](const MapSpec& spec, const VecC& psi, int K, int depth, double prune,
         bool backward) {
        HilbertSpaceSpec space(int(psi.size()));
        Propagator prop = propagator(space, spec);
        QuantumPartition qp =
            quantize_partition(space, PartitionSpec::strips(K));
        QuantumSymbolicMeasure meas =
            backward ? backward_refined_measure(psi, qp, prop, depth, prune)
                     : refined_measure(psi, qp, prop, depth, prune);
        return weights_dict(meas, depth);
      },
      py::arg("map"), py::arg("psi"), py::arg("K") = 2, py::arg("depth") = 1,
      py::arg("prune") = 1e-12, py::arg("backward") = false,
      "Symbolic weights ||Pi_word psi||^2 over K position strips at the "
      "given depth, keyed by word tuples.");

  m.def(
      "eup_level2",
      [](const MapSpec& spec, const VecC& psi, int K, int depth,
         const std::string& weights) {
        HilbertSpaceSpec space(int(psi.size()));
        Propagator prop = propagator(space, spec);
        QuantumPartition qp =
            quantize_partition(space, PartitionSpec::strips(K));
        std::vector<double> v = cell_weights(spec, K, weights);
        EupLevel2Report rep = eup_level2(psi, qp, prop, depth, v, v);
        py::dict out;
        out["depth"] = rep.depth;
        out["p_rho"] = rep.p_rho;
        out["p_tau"] = rep.p_tau;
        out["cross_log"] = rep.cross_log;
        out["slack"] = rep.slack;
        return out;
      },
      py::arg("map"), py::arg("psi"), py::arg("K") = 2, py::arg("depth") = 1,
      py::arg("weights") = "jacobian",
      "Weighted entropic uncertainty bound at level 2: pressures of the "
      "forward and backward refinements plus the cross norm; slack >= 0.");

  m.def(
      "dispersive_norm",
      [](const MapSpec& spec, int N, const std::vector<int>& word, int K) {
        HilbertSpaceSpec space(N);
        Propagator prop = propagator(space, spec);
        QuantumPartition qp =
            quantize_partition(space, PartitionSpec::strips(K));
        Word w;
        w.symbols = word;
        return dispersive_norm(qp, prop, w).value;
      },
      py::arg("map"), py::arg("N"), py::arg("word"), py::arg("K") = 2,
      "Operator norm of the refined projection chain for one word.");

  m.def(
      "entropy_rate",
      [](const MapSpec& spec, int rows, int cols, std::size_t samples,
         int depth, std::uint64_t seed) {
        PartitionSpec part = rows == 1 ? PartitionSpec::strips(cols)
                                       : PartitionSpec::grid(rows, cols);
        std::vector<TorusPoint> pts = sample_invariant_measure(
            MeasureKind::lebesgue(), spec, samples, seed);
        EntropyRateReport rep = ks_entropy_rate(spec, part, pts, depth, seed);
        py::list out;
        for (const EntropyRateRow& r : rep.rows) {
          py::dict d;
          d["n"] = r.n;
          d["H"] = r.H;
          d["rate"] = r.rate;
          d["increment"] = r.increment;
          d["increment_mm"] = r.increment_mm;
          d["words"] = r.words;
          out.append(d);
        }
        return out;
      },
      py::arg("map"), py::arg("rows") = 4, py::arg("cols") = 4,
      py::arg("samples") = std::size_t(100000), py::arg("depth") = 6,
      py::arg("seed") = std::uint64_t(20260816),
      "Cylinder entropies H(n)/n of the sampled symbolic measure on a "
      "rows x cols grid (rows=1 gives position strips).");

  py::class_<EhrenfestClock>(m, "EhrenfestClock")
      .def_readonly("epsilon", &EhrenfestClock::epsilon)
      .def_readonly("lambda_max", &EhrenfestClock::lambda_max)
      .def_readonly("lambda_eps", &EhrenfestClock::lambda_eps)
      .def("T", &EhrenfestClock::T, py::arg("N"))
      .def("two_T", &EhrenfestClock::two_T, py::arg("N"));

  m.def("ehrenfest", &EhrenfestClock::make, py::arg("lambda_max"),
        py::arg("epsilon") = 0.1, py::arg("n_max") = 16,
        "Log-time clock: T(N) = (1-eps) log N / (2 lambda_eps).");

  m.def(
      "entropy_bound",
      [](const MapSpec& spec, int N, int K, double epsilon, double prune) {
        HilbertSpaceSpec space(N);
        Propagator prop = propagator(space, spec);
        Spectrum sp = eigensystem(prop);
        PartitionSpec part = PartitionSpec::strips(K);
        QuantumPartition qp = quantize_partition(space, part);
        EhrenfestClock clock =
            EhrenfestClock::make(map_lambda(spec, 20000, 20260816), epsilon);
        EntropyBoundOptions opts;
        opts.prune = prune;
        std::vector<EntropyBoundRow> rows =
            entropy_bound_report(sp, spec, part, clock, prop, qp, opts);
        py::list out;
        for (const EntropyBoundRow& r : rows) {
          py::dict d;
          d["state"] = r.state;
          d["entropy_rate"] = r.entropy_rate;
          d["jacobian_mean"] = r.jacobian_mean;
          d["rhs"] = r.rhs;
          d["slack"] = r.slack;
          out.append(d);
        }
        return out;
      },
      py::arg("map"), py::arg("N"), py::arg("K") = 2,
      py::arg("epsilon") = 0.1, py::arg("prune") = 1e-12,
      "Per-eigenstate entropy rate against the Jacobian bound at the "
      "Ehrenfest depth; state -1 is the coherent control row.");
}
