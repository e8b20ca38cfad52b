#include "qcat/runner.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

using namespace qcat;
namespace fs = std::filesystem;

namespace {

std::string minimal_spectrum(const std::string& out_dir) {
  return std::string(R"({
    "kind": "spectrum",
    "output_dir": ")") +
         out_dir + R"(",
    "map": {"matrix": [[2, 1], [3, 2]]},
    "hilbert": {"N": [8]}
  })";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() /
           (std::string("qcat_test_") + tag + "_" +
            std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("defaults are materialized into the resolved copy") {
  ExperimentConfig cfg = parse_config(minimal_spectrum("out"));
  CHECK(cfg.kind == ExperimentConfig::Kind::Spectrum);
  CHECK(cfg.seed == 20260816);
  CHECK(cfg.Ns == std::vector<int>{8});
  CHECK(cfg.partition.K == 2);
  CHECK(cfg.partition.position_strips());
  CHECK_FALSE(cfg.partition_smooth);
  CHECK(cfg.clock_epsilon == doctest::Approx(0.1));
  CHECK(cfg.lyapunov_iters == 20000);
  CHECK(cfg.residual_tol == doctest::Approx(1e-8));
  CHECK(cfg.map.is_linear());

  // the resolved copy parses back to itself (fixed point)
  ExperimentConfig again = parse_config(cfg.resolved_json);
  CHECK(again.resolved_json == cfg.resolved_json);
  CHECK(cfg.resolved_json.find("\"seed\"") != std::string::npos);
  CHECK(cfg.resolved_json.find("\"epsilon\"") != std::string::npos);
}

TEST_CASE("unknown keys are rejected by name") {
  std::string text = R"({
    "kind": "spectrum",
    "map": {"matrix": [[2, 1], [3, 2]]},
    "hilbert": {"N": [8]},
    "patrition": {"type": "strips", "K": 2}
  })";
  try {
    parse_config(text);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("patrition") != std::string::npos);
    CHECK(msg.find("partition") != std::string::npos);  // allowed keys listed
  }
}

TEST_CASE("type mismatches name the expected and actual types") {
  std::string text = R"({
    "kind": "egorov",
    "map": {
      "matrix": [[2, 1], [3, 2]],
      "kick": {"form": "position", "cosine": {"k": 1, "amplitude": "big"}}
    },
    "hilbert": {"N": [8]},
    "egorov": {"times": [1]}
  })";
  try {
    parse_config(text);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("amplitude") != std::string::npos);
    CHECK(msg.find("number") != std::string::npos);
    CHECK(msg.find("string") != std::string::npos);
  }
}

TEST_CASE("structural validation") {
  // map is required
  CHECK_THROWS_AS(parse_config(R"({"kind":"spectrum","hilbert":{"N":[8]}})"),
                  ConfigError);
  // unknown kind
  CHECK_THROWS_AS(
      parse_config(
          R"({"kind":"spectra","map":{"matrix":[[2,1],[3,2]]},"hilbert":{"N":[8]}})"),
      ConfigError);
  // quantum kinds need hilbert
  CHECK_THROWS_AS(
      parse_config(R"({"kind":"spectrum","map":{"matrix":[[2,1],[3,2]]}})"),
      ConfigError);
  // classical runs must not declare one
  CHECK_THROWS_AS(
      parse_config(
          R"({"kind":"classical-entropy","map":{"matrix":[[2,1],[3,2]]},"hilbert":{"N":[8]}})"),
      ConfigError);
  // dimension range is enforced
  CHECK_THROWS_AS(
      parse_config(
          R"({"kind":"spectrum","map":{"matrix":[[2,1],[3,2]]},"hilbert":{"N":[1]}})"),
      ConfigError);
  // malformed json reports position
  CHECK_THROWS_AS(parse_config("{\"kind\": }"), ConfigError);
}

TEST_CASE("partition and measure sections resolve to constructor arguments") {
  std::string text = R"({
    "kind": "classical-entropy",
    "map": {"matrix": [[2, 1], [3, 2]]},
    "partition": {"type": "grid", "rows": 2, "cols": 8},
    "classical-entropy": {
      "samples": 20000, "depth": 4,
      "measure": {"type": "periodic-orbit", "period": 2}
    }
  })";
  ExperimentConfig cfg = parse_config(text);
  CHECK(cfg.partition.K == 16);
  CHECK(cfg.measure.type == MeasureKind::PeriodicOrbit);
  CHECK(cfg.measure.period == 2);
  // the orbit point is resolved at parse time and recorded
  CHECK(apply_map_n(cfg.map, cfg.measure.point, 2).dist(cfg.measure.point) <
        1e-9);
  CHECK(cfg.resolved_json.find("\"rows\": 2") != std::string::npos);
  CHECK(cfg.resolved_json.find("\"cols\": 8") != std::string::npos);

  ExperimentConfig again = parse_config(cfg.resolved_json);
  CHECK(again.partition.K == 16);
  CHECK(again.resolved_json == cfg.resolved_json);
}

TEST_CASE("missing config files are config errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/qcat.json"), ConfigError);
}

TEST_CASE("run produces a complete self-consistent manifest") {
  TempDir tmp("run");
  ExperimentConfig cfg =
      parse_config(minimal_spectrum((tmp.path / "a").string()));
  RunManifest man = run_experiment(cfg);
  CHECK(man.ok());
  CHECK(man.kind == "spectrum");
  CHECK(man.version == QCAT_VERSION);
  REQUIRE(!man.outputs.empty());

  // every recorded output exists with the recorded size
  for (const OutputRecord& o : man.outputs) {
    fs::path p = tmp.path / "a" / o.path;
    REQUIRE(fs::exists(p));
    CHECK(fs::file_size(p) == o.bytes);
  }
  RunManifest loaded = load_manifest((tmp.path / "a" / "manifest.json").string());
  CHECK(loaded.config_digest == man.config_digest);
  CHECK(loaded.outputs.size() == man.outputs.size());

  // reruns into fresh directories are byte-identical
  ExperimentConfig cfg2 =
      parse_config(minimal_spectrum((tmp.path / "b").string()));
  RunManifest man2 = run_experiment(cfg2);
  REQUIRE(man2.outputs.size() == man.outputs.size());
  for (std::size_t i = 0; i < man.outputs.size(); ++i) {
    if (man.outputs[i].path == "config_resolved.json") continue;  // dir name
    CHECK(man.outputs[i].path == man2.outputs[i].path);
    CHECK(man.outputs[i].digest == man2.outputs[i].digest);
  }
}

TEST_CASE("diff accepts tolerable drift and flags real changes") {
  TempDir tmp("diff");
  ExperimentConfig run_cfg =
      parse_config(minimal_spectrum((tmp.path / "run").string()));
  run_experiment(run_cfg);
  ExperimentConfig base_cfg =
      parse_config(minimal_spectrum((tmp.path / "base").string()));
  run_experiment(base_cfg);

  std::string manifest = (tmp.path / "run" / "manifest.json").string();
  std::string baseline = (tmp.path / "base").string();

  DiffReport clean = compare_baseline(manifest, baseline);
  CHECK(clean.clean());
  for (const DiffEntry& e : clean.entries) CHECK(e.status == "match");

  // nudge the first eigenphase in place (column 2 of the csv)
  fs::path csv = tmp.path / "base" / "spectrum_N8.csv";
  auto nudge = [&](double delta) {
    std::istringstream in(slurp(csv));
    std::ostringstream out;
    std::string header, line;
    std::getline(in, header);
    out << header << "\n";
    bool first = true;
    while (std::getline(in, line)) {
      if (first) {
        std::size_t c1 = line.find(',');
        std::size_t c2 = line.find(',', c1 + 1);
        double phase = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", phase + delta);
        out << line.substr(0, c1 + 1) << buf << line.substr(c2) << "\n";
        first = false;
      } else {
        out << line << "\n";
      }
    }
    spit(csv, out.str());
  };

  // below the declared 1e-8 eigenphase tolerance still matches
  nudge(4e-9);
  CHECK(compare_baseline(manifest, baseline).clean());

  // past the tolerance does not
  nudge(5e-8);
  DiffReport dirty = compare_baseline(manifest, baseline);
  CHECK_FALSE(dirty.clean());
  bool flagged = false;
  for (const DiffEntry& e : dirty.entries) {
    if (e.path == "spectrum_N8.csv") {
      CHECK(e.status == "differs");
      CHECK(e.detail.find("eigenphase") != std::string::npos);
      flagged = true;
    }
  }
  CHECK(flagged);

  // files missing from the baseline are reported as new, not failures
  fs::remove(tmp.path / "base" / "summary.json");
  DiffReport with_new = compare_baseline(manifest, baseline);
  bool saw_new = false;
  for (const DiffEntry& e : with_new.entries)
    if (e.path == "summary.json") saw_new = e.status == "new";
  CHECK(saw_new);
}

TEST_CASE("failed tasks are recorded rather than thrown") {
  TempDir tmp("fail");
  // valid config, but the matrix breaks the quantization parity at run time
  std::string text = std::string(R"({
    "kind": "spectrum",
    "output_dir": ")") +
                     (tmp.path / "out").string() + R"(",
    "map": {"matrix": [[2, 1], [1, 1]]},
    "hilbert": {"N": [8]}
  })";
  ExperimentConfig cfg = parse_config(text);
  RunManifest man = run_experiment(cfg);
  CHECK_FALSE(man.ok());
  bool failed_task = false;
  for (const TaskRecord& t : man.tasks)
    if (t.status.rfind("failed:", 0) == 0) failed_task = true;
  CHECK(failed_task);
  CHECK(fs::exists(tmp.path / "out" / "manifest.json"));
}

TEST_CASE("worker count is at least one") {
  CHECK(worker_count() >= 1);
}
