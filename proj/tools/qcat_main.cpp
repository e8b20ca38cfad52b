#include "qcat/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>

using namespace qcat;

namespace {

int cmd_run(const std::string& config_path) {
  ExperimentConfig cfg = load_config(config_path);
  RunManifest man = run_experiment(cfg);
  for (const TaskRecord& t : man.tasks) {
    if (t.status == "ok")
      std::printf("ok      %s (%.2fs)\n", t.name.c_str(), t.seconds);
    else
      std::printf("FAILED  %s: %s\n", t.name.c_str(), t.status.c_str());
  }
  std::printf("%zu output file(s) in %s\n", man.outputs.size(),
              cfg.output_dir.c_str());
  return man.ok() ? 0 : 1;
}

int cmd_diff(const std::string& manifest_path, const std::string& baseline) {
  DiffReport rep = compare_baseline(manifest_path, baseline);
  std::size_t matched = 0, fresh = 0, differing = 0;
  for (const DiffEntry& e : rep.entries) {
    if (e.status == "match") {
      ++matched;
      continue;
    }
    if (e.status == "new") ++fresh;
    if (e.status == "differs") ++differing;
    std::printf("%-8s %s%s%s\n", e.status.c_str(), e.path.c_str(),
                e.detail.empty() ? "" : ": ",
                e.detail.empty() ? "" : e.detail.c_str());
  }
  std::printf("%zu matched, %zu new, %zu differing\n", matched, fresh,
              differing);
  return rep.clean() ? 0 : 1;
}

int cmd_validate(const std::string& config_path) {
  ExperimentConfig cfg = load_config(config_path);
  std::fputs(cfg.resolved_json.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantized torus map laboratory"};
  app.set_version_flag("--version", QCAT_VERSION);
  app.require_subcommand(1);

  std::string config_path, manifest_path, baseline_dir;

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "JSON experiment config")->required();

  CLI::App* diff =
      app.add_subcommand("diff", "compare a run against a baseline directory");
  diff->add_option("manifest", manifest_path, "manifest.json of the run")
      ->required();
  diff->add_option("baseline", baseline_dir, "baseline output directory")
      ->required();

  CLI::App* validate = app.add_subcommand(
      "validate", "parse a config and print the resolved copy");
  validate->add_option("config", config_path, "JSON experiment config")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (diff->parsed()) return cmd_diff(manifest_path, baseline_dir);
    return cmd_validate(config_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
