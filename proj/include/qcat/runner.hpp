#pragma once

#include "qcat/classical.hpp"
#include "qcat/partitions.hpp"
#include "qcat/quantize.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qcat {

inline constexpr const char* QCAT_VERSION = "0.1.0";

// One experiment kind per invocation; composite studies are shell-level
// sequences of runs.
struct ExperimentConfig {
  enum class Kind {
    Spectrum,
    Egorov,
    Eup,
    Dispersive,
    EntropyBound,
    ClassicalEntropy,
  };

  Kind kind = Kind::Spectrum;
  std::string output_dir = "qcat_out";
  std::uint64_t seed = 20260816;
  std::vector<int> Ns;  // Hilbert space dimensions (quantum kinds)
  MapSpec map;

  // partition (quantum kinds default to position halves, the classical
  // entropy kind to a 4x4 grid)
  PartitionSpec partition = PartitionSpec::strips(2);
  bool partition_smooth = false;
  double smooth_width = 0.02;
  int smooth_resolution = 256;
  int smooth_cutoff = 48;

  // Ehrenfest clock and Lyapunov measurement
  double clock_epsilon = 0.1;
  int clock_n_max = 16;
  int lyapunov_iters = 20000;

  // spectrum
  double residual_tol = 1e-8;
  bool export_states = false;
  std::vector<int> husimi_states;
  int husimi_resolution = 128;

  // egorov
  TrigSymbol symbol;
  std::vector<int> times{1};
  int egorov_grid = 1024;
  int egorov_cutoff = 160;

  // eup
  int random_states = 0;
  int eup_depth = 0;  // 0 = Ehrenfest depth 2T from the clock
  std::string eup_weights = "jacobian";  // or "unit"
  int cone_iters = 30;

  // dispersive
  int dispersive_depth = 0;  // 0 = floor(2 log N / lambda)
  int max_words = 256;

  // entropy-bound
  bool control_row = true;
  double prune = 1e-12;

  // classical-entropy
  std::size_t samples = 1000000;
  int depth = 8;
  MeasureKind measure = MeasureKind::lebesgue();
  std::size_t ruelle_samples = 2000;

  // canonical provenance copy, all defaults materialized
  std::string resolved_json;

  static const char* kind_name(Kind k);
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct TaskRecord {
  std::string name;
  std::string status;  // "ok" or "failed: <reason>"
  double seconds = 0.0;
};

struct OutputRecord {
  std::string path;  // relative to the output directory
  std::uint64_t bytes = 0;
  std::string digest;  // fnv1a-64 of the file bytes, hex
};

struct RunManifest {
  std::string version;
  std::string kind;
  std::string config_digest;
  std::string started;   // UTC, ISO-8601
  std::string finished;
  std::vector<TaskRecord> tasks;
  std::vector<OutputRecord> outputs;

  bool ok() const;
};

// Executes the configured pipeline across the N list, writes the per-module
// CSV/JSON artifacts plus config_resolved.json, and writes manifest.json
// last. Task failures are recorded in the manifest rather than thrown.
RunManifest run_experiment(const ExperimentConfig& cfg);

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest load_manifest(const std::string& path);

struct DiffEntry {
  std::string path;
  std::string status;  // "match", "differs", "new"
  std::string detail;
};

struct DiffReport {
  std::vector<DiffEntry> entries;
  bool clean() const;  // no "differs" entries
};

// Per-file numeric diff of a run against a baseline directory, honoring
// per-column tolerances (eigenphases absolute 1e-8, Monte Carlo weights via
// their declared standard errors, default relative 1e-6). Missing baseline
// files are listed as "new" and do not fail the diff.
DiffReport compare_baseline(const std::string& manifest_path,
                            const std::string& baseline_dir);

// Worker count for per-state / per-word loops: QCAT_THREADS if set, else
// hardware concurrency clamped to 8. Results are deposited by index, so the
// output bytes do not depend on the count.
int worker_count();

}  // namespace qcat
