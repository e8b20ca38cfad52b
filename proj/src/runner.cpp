#include "qcat/runner.hpp"

#include "qcat/qentropy.hpp"
#include "qcat/qmaps.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace qcat {

namespace {

using njson = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

std::string fmt(double v) {
  char b[48];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

// ---------------------------------------------------------------------------
// schema helpers

void check_keys(const njson& j, const std::string& where,
                const std::vector<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      std::string msg =
          "unknown key \"" + it.key() + "\" in " + where + "; allowed:";
      for (const auto& a : allowed) msg += " " + a;
      bad(msg);
    }
  }
}

const njson& require(const njson& j, const std::string& where,
                     const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(where + "." + key + ": required key missing");
  return *it;
}

std::string get_str(const njson& j, const std::string& where, const char* key,
                    const std::string& dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_string())
    bad(where + "." + key + ": expected string, got " + it->type_name());
  return it->get<std::string>();
}

double get_num(const njson& j, const std::string& where, const char* key,
               double dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number())
    bad(where + "." + key + ": expected number, got " + it->type_name());
  return it->get<double>();
}

double get_num_req(const njson& j, const std::string& where, const char* key) {
  const njson& v = require(j, where, key);
  if (!v.is_number())
    bad(where + "." + key + ": expected number, got " + v.type_name());
  return v.get<double>();
}

long long as_int(const njson& v, const std::string& what) {
  if (!v.is_number_integer() && !v.is_number_unsigned())
    bad(what + ": expected integer, got " + v.type_name());
  return v.get<long long>();
}

long long get_int(const njson& j, const std::string& where, const char* key,
                  long long dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  return as_int(*it, where + "." + key);
}

bool get_bool(const njson& j, const std::string& where, const char* key,
              bool dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_boolean())
    bad(where + "." + key + ": expected boolean, got " + it->type_name());
  return it->get<bool>();
}

std::vector<int> int_list(const njson& v, const std::string& what,
                          bool allow_empty = false) {
  std::vector<int> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(int(as_int(v[i], what + "[" + std::to_string(i) + "]")));
  } else {
    out.push_back(int(as_int(v, what)));
  }
  if (out.empty() && !allow_empty) bad(what + ": expected a nonempty list");
  return out;
}

// ---------------------------------------------------------------------------
// section parsers

SymplecticMatrix parse_matrix(const njson& m) {
  if (!m.is_array() || m.size() != 2 || !m[0].is_array() || !m[1].is_array() ||
      m[0].size() != 2 || m[1].size() != 2)
    bad("map.matrix: expected a 2x2 array of integers");
  SymplecticMatrix S;
  S.a = as_int(m[0][0], "map.matrix[0][0]");
  S.b = as_int(m[0][1], "map.matrix[0][1]");
  S.c = as_int(m[1][0], "map.matrix[1][0]");
  S.d = as_int(m[1][1], "map.matrix[1][1]");
  return S;
}

KickHamiltonian parse_kick(const njson& k) {
  check_keys(k, "map.kick", {"form", "cosine", "coefficients"});
  std::string form_s = get_str(k, "map.kick", "form", "position");
  KickForm form;
  if (form_s == "position")
    form = KickForm::Position;
  else if (form_s == "momentum")
    form = KickForm::Momentum;
  else if (form_s == "general")
    form = KickForm::General;
  else
    bad("map.kick.form: expected one of position, momentum, general");

  bool has_cos = k.contains("cosine"), has_coef = k.contains("coefficients");
  if (has_cos == has_coef)
    bad("map.kick: exactly one of cosine or coefficients is required");

  if (has_cos) {
    const njson& c = k["cosine"];
    check_keys(c, "map.kick.cosine", {"k", "amplitude"});
    long long kk = get_int(c, "map.kick.cosine", "k", 1);
    if (kk < 1) bad("map.kick.cosine.k: expected a positive integer");
    double amp = get_num_req(c, "map.kick.cosine", "amplitude");
    KickHamiltonian kh = KickHamiltonian::cosine(form, int(kk), amp);
    kh.validate();
    return kh;
  }

  const njson& arr = k["coefficients"];
  if (!arr.is_array() || arr.empty())
    bad("map.kick.coefficients: expected a nonempty array");
  KickHamiltonian kh;
  kh.form = form;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    std::string where = "map.kick.coefficients[" + std::to_string(i) + "]";
    const njson& e = arr[i];
    if (!e.is_object()) bad(where + ": expected object {m,n,re,im}");
    check_keys(e, where, {"m", "n", "re", "im"});
    int m = int(as_int(require(e, where, "m"), where + ".m"));
    int n = int(as_int(require(e, where, "n"), where + ".n"));
    double re = get_num_req(e, where, "re");
    double im = get_num(e, where, "im", 0.0);
    auto key = std::make_pair(m, n);
    if (kh.coeffs.count(key)) bad(where + ": duplicate frequency (m,n)");
    kh.coeffs[key] = cplx(re, im);
  }
  kh.validate();
  return kh;
}

MapSpec parse_map(const njson& j) {
  const njson& m = require(j, "config", "map");
  if (!m.is_object()) bad("map: expected object");
  check_keys(m, "map", {"matrix", "kick"});
  MapSpec spec;
  spec.linear = parse_matrix(require(m, "map", "matrix"));
  if (m.contains("kick")) {
    if (!m["kick"].is_object()) bad("map.kick: expected object");
    spec.kick = parse_kick(m["kick"]);
  }
  spec.validate();
  return spec;
}

void parse_partition(const njson& j, ExperimentConfig& cfg, bool present) {
  if (!present) return;
  const njson& p = j["partition"];
  if (!p.is_object()) bad("partition: expected object");
  check_keys(p, "partition",
             {"type", "K", "rows", "cols", "mode", "width", "resolution",
              "cutoff"});
  std::string type = get_str(p, "partition", "type", "strips");
  if (type == "strips") {
    if (p.contains("rows") || p.contains("cols"))
      bad("partition: rows/cols only apply to type grid");
    long long K = get_int(p, "partition", "K", 2);
    if (K < 1 || K > 4096) bad("partition.K: expected integer in [1, 4096]");
    cfg.partition = PartitionSpec::strips(int(K));
  } else if (type == "grid") {
    if (p.contains("K")) bad("partition: K only applies to type strips");
    long long rows = get_int(p, "partition", "rows", 4);
    long long cols = get_int(p, "partition", "cols", 4);
    if (rows < 1 || cols < 1 || rows * cols > 4096)
      bad("partition.rows/cols: expected positive integers, rows*cols <= 4096");
    cfg.partition = PartitionSpec::grid(int(rows), int(cols));
  } else {
    bad("partition.type: expected strips or grid");
  }
  std::string mode = get_str(p, "partition", "mode", "sharp");
  if (mode == "sharp") {
    cfg.partition_smooth = false;
    if (p.contains("width") || p.contains("resolution") || p.contains("cutoff"))
      bad("partition: width/resolution/cutoff only apply to mode smooth");
  } else if (mode == "smooth") {
    cfg.partition_smooth = true;
    cfg.smooth_width = get_num_req(p, "partition", "width");
    cfg.smooth_resolution =
        int(get_int(p, "partition", "resolution", cfg.smooth_resolution));
    cfg.smooth_cutoff =
        int(get_int(p, "partition", "cutoff", cfg.smooth_cutoff));
    if (cfg.smooth_width <= 0) bad("partition.width: expected a positive number");
  } else {
    bad("partition.mode: expected sharp or smooth");
  }
  cfg.partition.validate();
}

TrigSymbol parse_symbol(const njson& s) {
  if (!s.is_object()) bad("egorov.symbol: expected object");
  check_keys(s, "egorov.symbol", {"cosine_x", "cosine_xi", "coefficients"});
  int forms = int(s.contains("cosine_x")) + int(s.contains("cosine_xi")) +
              int(s.contains("coefficients"));
  if (forms != 1)
    bad("egorov.symbol: exactly one of cosine_x, cosine_xi, coefficients");
  if (s.contains("cosine_x") || s.contains("cosine_xi")) {
    const char* key = s.contains("cosine_x") ? "cosine_x" : "cosine_xi";
    std::string where = std::string("egorov.symbol.") + key;
    const njson& c = s[key];
    check_keys(c, where, {"k", "amplitude"});
    long long k = get_int(c, where, "k", 1);
    if (k < 1) bad(where + ".k: expected a positive integer");
    double amp = get_num_req(c, where, "amplitude");
    return s.contains("cosine_x") ? TrigSymbol::cosine_x(int(k), amp)
                                  : TrigSymbol::cosine_xi(int(k), amp);
  }
  const njson& arr = s["coefficients"];
  if (!arr.is_array() || arr.empty())
    bad("egorov.symbol.coefficients: expected a nonempty array");
  TrigSymbol f;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    std::string where = "egorov.symbol.coefficients[" + std::to_string(i) + "]";
    const njson& e = arr[i];
    if (!e.is_object()) bad(where + ": expected object {m,n,re,im}");
    check_keys(e, where, {"m", "n", "re", "im"});
    int m = int(as_int(require(e, where, "m"), where + ".m"));
    int n = int(as_int(require(e, where, "n"), where + ".n"));
    double re = get_num_req(e, where, "re");
    double im = get_num(e, where, "im", 0.0);
    f.c[{m, n}] += cplx(re, im);
  }
  return f;
}

MeasureKind parse_measure(const njson& sec, const MapSpec& map) {
  auto it = sec.find("measure");
  if (it == sec.end()) return MeasureKind::lebesgue();
  const njson& m = *it;
  if (!m.is_object()) bad("classical-entropy.measure: expected object");
  check_keys(m, "classical-entropy.measure", {"type", "period"});
  std::string type = get_str(m, "classical-entropy.measure", "type", "lebesgue");
  if (type == "lebesgue") {
    if (m.contains("period"))
      bad("classical-entropy.measure.period: only applies to periodic-orbit");
    return MeasureKind::lebesgue();
  }
  if (type != "periodic-orbit")
    bad("classical-entropy.measure.type: expected lebesgue or periodic-orbit");
  long long period = get_int(m, "classical-entropy.measure", "period", 2);
  if (period < 1 || period > 64)
    bad("classical-entropy.measure.period: expected integer in [1, 64]");
  std::optional<TorusPoint> p = find_periodic_point(map, int(period));
  if (!p)
    bad("classical-entropy.measure: no point of minimal period " +
        std::to_string(period) + " found for this map");
  return MeasureKind::periodic_orbit(*p, int(period));
}

// ---------------------------------------------------------------------------
// resolved provenance copy

ojson kick_json(const KickHamiltonian& kh) {
  ojson k;
  switch (kh.form) {
    case KickForm::Position: k["form"] = "position"; break;
    case KickForm::Momentum: k["form"] = "momentum"; break;
    case KickForm::General: k["form"] = "general"; break;
  }
  ojson arr = ojson::array();
  for (const auto& [mn, c] : kh.coeffs) {
    ojson e;
    e["m"] = mn.first;
    e["n"] = mn.second;
    e["re"] = c.real();
    e["im"] = c.imag();
    arr.push_back(e);
  }
  k["coefficients"] = arr;
  return k;
}

ojson symbol_json(const TrigSymbol& f) {
  ojson arr = ojson::array();
  for (const auto& [mn, c] : f.c) {
    ojson e;
    e["m"] = mn.first;
    e["n"] = mn.second;
    e["re"] = c.real();
    e["im"] = c.imag();
    arr.push_back(e);
  }
  ojson s;
  s["coefficients"] = arr;
  return s;
}

std::string resolved_copy(const ExperimentConfig& cfg, bool grid_partition) {
  ojson r;
  r["kind"] = ExperimentConfig::kind_name(cfg.kind);
  r["seed"] = cfg.seed;
  r["output_dir"] = cfg.output_dir;

  ojson m;
  m["matrix"] = {{cfg.map.linear.a, cfg.map.linear.b},
                 {cfg.map.linear.c, cfg.map.linear.d}};
  if (cfg.map.kick) m["kick"] = kick_json(*cfg.map.kick);
  r["map"] = m;

  if (cfg.kind != ExperimentConfig::Kind::ClassicalEntropy)
    r["hilbert"]["N"] = cfg.Ns;

  // emit the constructor arguments, not the cell list; re-parsing the
  // resolved copy must regenerate the identical partition
  ojson p;
  if (!grid_partition) {
    p["type"] = "strips";
    p["K"] = cfg.partition.K;
  } else {
    // grid cells are stored row-major; cells sharing x0 = 0 are one per row
    int rows = 0;
    double first_x0 = cfg.partition.cells.at(0).at(0).x0;
    for (const auto& cell : cfg.partition.cells)
      if (cell.at(0).x0 == first_x0) ++rows;
    p["type"] = "grid";
    p["rows"] = rows;
    p["cols"] = cfg.partition.K / std::max(rows, 1);
  }
  p["mode"] = cfg.partition_smooth ? "smooth" : "sharp";
  if (cfg.partition_smooth) {
    p["width"] = cfg.smooth_width;
    p["resolution"] = cfg.smooth_resolution;
    p["cutoff"] = cfg.smooth_cutoff;
  }
  r["partition"] = p;

  ojson c;
  c["epsilon"] = cfg.clock_epsilon;
  c["n_max"] = cfg.clock_n_max;
  c["lyapunov_iters"] = cfg.lyapunov_iters;
  r["clock"] = c;

  ojson s;
  switch (cfg.kind) {
    case ExperimentConfig::Kind::Spectrum:
      s["residual_tol"] = cfg.residual_tol;
      s["export_states"] = cfg.export_states;
      s["husimi_states"] = cfg.husimi_states;
      s["husimi_resolution"] = cfg.husimi_resolution;
      break;
    case ExperimentConfig::Kind::Egorov:
      s["symbol"] = symbol_json(cfg.symbol);
      s["t"] = cfg.times;
      s["grid"] = cfg.egorov_grid;
      s["cutoff"] = cfg.egorov_cutoff;
      break;
    case ExperimentConfig::Kind::Eup:
      s["random_states"] = cfg.random_states;
      s["depth"] = cfg.eup_depth;
      s["weights"] = cfg.eup_weights;
      s["cone_iters"] = cfg.cone_iters;
      break;
    case ExperimentConfig::Kind::Dispersive:
      s["depth"] = cfg.dispersive_depth;
      s["max_words"] = cfg.max_words;
      s["cone_iters"] = cfg.cone_iters;
      break;
    case ExperimentConfig::Kind::EntropyBound:
      s["control_row"] = cfg.control_row;
      s["prune"] = cfg.prune;
      s["cone_iters"] = cfg.cone_iters;
      break;
    case ExperimentConfig::Kind::ClassicalEntropy:
      s["samples"] = cfg.samples;
      s["depth"] = cfg.depth;
      if (cfg.measure.type == MeasureKind::Lebesgue) {
        s["measure"]["type"] = "lebesgue";
      } else {
        s["measure"]["type"] = "periodic-orbit";
        s["measure"]["period"] = cfg.measure.period;
      }
      s["ruelle_samples"] = cfg.ruelle_samples;
      break;
  }
  r[ExperimentConfig::kind_name(cfg.kind)] = s;
  return r.dump(2) + "\n";
}

}  // namespace

const char* ExperimentConfig::kind_name(Kind k) {
  switch (k) {
    case Kind::Spectrum: return "spectrum";
    case Kind::Egorov: return "egorov";
    case Kind::Eup: return "eup";
    case Kind::Dispersive: return "dispersive";
    case Kind::EntropyBound: return "entropy-bound";
    case Kind::ClassicalEntropy: return "classical-entropy";
  }
  return "?";
}

ExperimentConfig parse_config(const std::string& text) {
  njson j;
  try {
    j = njson::parse(text);
  } catch (const njson::parse_error& e) {
    bad(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) bad("config root: expected object");

  ExperimentConfig cfg;

  std::string kind = get_str(j, "config", "kind", "");
  if (kind == "spectrum")
    cfg.kind = ExperimentConfig::Kind::Spectrum;
  else if (kind == "egorov")
    cfg.kind = ExperimentConfig::Kind::Egorov;
  else if (kind == "eup")
    cfg.kind = ExperimentConfig::Kind::Eup;
  else if (kind == "dispersive")
    cfg.kind = ExperimentConfig::Kind::Dispersive;
  else if (kind == "entropy-bound")
    cfg.kind = ExperimentConfig::Kind::EntropyBound;
  else if (kind == "classical-entropy")
    cfg.kind = ExperimentConfig::Kind::ClassicalEntropy;
  else
    bad("kind: expected one of spectrum, egorov, eup, dispersive, "
        "entropy-bound, classical-entropy");

  const bool classical = cfg.kind == ExperimentConfig::Kind::ClassicalEntropy;

  check_keys(j, "config",
             {"kind", "seed", "output_dir", "map", "hilbert", "partition",
              "clock", kind});

  long long seed = get_int(j, "config", "seed", (long long)cfg.seed);
  if (seed < 0) bad("seed: expected a nonnegative integer");
  cfg.seed = std::uint64_t(seed);
  cfg.output_dir = get_str(j, "config", "output_dir", cfg.output_dir);
  if (cfg.output_dir.empty()) bad("output_dir: expected a nonempty string");

  cfg.map = parse_map(j);

  if (classical) {
    if (j.contains("hilbert"))
      bad("hilbert: not used by classical-entropy runs");
    cfg.partition = PartitionSpec::grid(4, 4);
  } else {
    const njson& h = require(j, "config", "hilbert");
    if (!h.is_object()) bad("hilbert: expected object");
    check_keys(h, "hilbert", {"N"});
    cfg.Ns = int_list(require(h, "hilbert", "N"), "hilbert.N");
    for (int N : cfg.Ns)
      if (N < 2 || N > 4096)
        bad("hilbert.N: expected integers in [2, 4096] (dense propagators)");
  }

  parse_partition(j, cfg, j.contains("partition"));

  if (j.contains("clock")) {
    const njson& c = j["clock"];
    if (!c.is_object()) bad("clock: expected object");
    check_keys(c, "clock", {"epsilon", "n_max", "lyapunov_iters"});
    cfg.clock_epsilon = get_num(c, "clock", "epsilon", cfg.clock_epsilon);
    if (cfg.clock_epsilon <= 0 || cfg.clock_epsilon >= 1)
      bad("clock.epsilon: expected a number in (0, 1)");
    cfg.clock_n_max = int(get_int(c, "clock", "n_max", cfg.clock_n_max));
    if (cfg.clock_n_max < 1) bad("clock.n_max: expected a positive integer");
    cfg.lyapunov_iters =
        int(get_int(c, "clock", "lyapunov_iters", cfg.lyapunov_iters));
    if (cfg.lyapunov_iters < 100)
      bad("clock.lyapunov_iters: expected an integer >= 100");
  }

  njson sec = njson::object();
  if (j.contains(kind)) {
    if (!j[kind].is_object()) bad(kind + ": expected object");
    sec = j[kind];
  }

  switch (cfg.kind) {
    case ExperimentConfig::Kind::Spectrum: {
      check_keys(sec, kind,
                 {"residual_tol", "export_states", "husimi_states",
                  "husimi_resolution"});
      cfg.residual_tol = get_num(sec, kind, "residual_tol", cfg.residual_tol);
      if (cfg.residual_tol <= 0)
        bad("spectrum.residual_tol: expected a positive number");
      cfg.export_states = get_bool(sec, kind, "export_states", false);
      if (sec.contains("husimi_states"))
        cfg.husimi_states = int_list(sec["husimi_states"],
                                     "spectrum.husimi_states",
                                     /*allow_empty=*/true);
      for (int k : cfg.husimi_states)
        if (k < 0) bad("spectrum.husimi_states: expected nonnegative indices");
      cfg.husimi_resolution =
          int(get_int(sec, kind, "husimi_resolution", cfg.husimi_resolution));
      if (cfg.husimi_resolution < 16)
        bad("spectrum.husimi_resolution: expected an integer >= 16");
      break;
    }
    case ExperimentConfig::Kind::Egorov: {
      check_keys(sec, kind, {"symbol", "t", "grid", "cutoff"});
      cfg.symbol = sec.contains("symbol") ? parse_symbol(sec["symbol"])
                                          : TrigSymbol::cosine_x(1, 2.0);
      if (sec.contains("t")) cfg.times = int_list(sec["t"], "egorov.t");
      cfg.egorov_grid = int(get_int(sec, kind, "grid", cfg.egorov_grid));
      if (cfg.egorov_grid < 64 || (cfg.egorov_grid & (cfg.egorov_grid - 1)))
        bad("egorov.grid: expected a power of two >= 64");
      cfg.egorov_cutoff = int(get_int(sec, kind, "cutoff", cfg.egorov_cutoff));
      if (cfg.egorov_cutoff < 1)
        bad("egorov.cutoff: expected a positive integer");
      break;
    }
    case ExperimentConfig::Kind::Eup: {
      check_keys(sec, kind,
                 {"random_states", "depth", "weights", "cone_iters"});
      cfg.random_states =
          int(get_int(sec, kind, "random_states", cfg.random_states));
      if (cfg.random_states < 0)
        bad("eup.random_states: expected a nonnegative integer");
      cfg.eup_depth = int(get_int(sec, kind, "depth", cfg.eup_depth));
      if (cfg.eup_depth < 0)
        bad("eup.depth: expected 0 (Ehrenfest) or a positive integer");
      cfg.eup_weights = get_str(sec, kind, "weights", cfg.eup_weights);
      if (cfg.eup_weights != "jacobian" && cfg.eup_weights != "unit")
        bad("eup.weights: expected jacobian or unit");
      cfg.cone_iters = int(get_int(sec, kind, "cone_iters", cfg.cone_iters));
      if (cfg.cone_iters < 20)
        bad("eup.cone_iters: expected an integer >= 20");
      if (cfg.partition_smooth)
        bad("eup: level-2 pressures need a sharp partition; "
            "set partition.mode to sharp");
      break;
    }
    case ExperimentConfig::Kind::Dispersive: {
      check_keys(sec, kind, {"depth", "max_words", "cone_iters"});
      cfg.dispersive_depth =
          int(get_int(sec, kind, "depth", cfg.dispersive_depth));
      if (cfg.dispersive_depth < 0)
        bad("dispersive.depth: expected 0 (2 log N / lambda) or positive");
      cfg.max_words = int(get_int(sec, kind, "max_words", cfg.max_words));
      if (cfg.max_words < 1)
        bad("dispersive.max_words: expected a positive integer");
      cfg.cone_iters = int(get_int(sec, kind, "cone_iters", cfg.cone_iters));
      if (cfg.cone_iters < 20)
        bad("dispersive.cone_iters: expected an integer >= 20");
      break;
    }
    case ExperimentConfig::Kind::EntropyBound: {
      check_keys(sec, kind, {"control_row", "prune", "cone_iters"});
      cfg.control_row = get_bool(sec, kind, "control_row", cfg.control_row);
      cfg.prune = get_num(sec, kind, "prune", cfg.prune);
      if (cfg.prune < 0 || cfg.prune >= 1e-3)
        bad("entropy-bound.prune: expected a number in [0, 1e-3)");
      cfg.cone_iters = int(get_int(sec, kind, "cone_iters", cfg.cone_iters));
      if (cfg.cone_iters < 20)
        bad("entropy-bound.cone_iters: expected an integer >= 20");
      break;
    }
    case ExperimentConfig::Kind::ClassicalEntropy: {
      check_keys(sec, kind,
                 {"samples", "depth", "measure", "ruelle_samples"});
      long long samples =
          get_int(sec, kind, "samples", (long long)cfg.samples);
      if (samples < 10000)
        bad("classical-entropy.samples: expected an integer >= 10000");
      cfg.samples = std::size_t(samples);
      cfg.depth = int(get_int(sec, kind, "depth", cfg.depth));
      if (cfg.depth < 1 || cfg.depth > 24)
        bad("classical-entropy.depth: expected an integer in [1, 24]");
      cfg.measure = parse_measure(sec, cfg.map);
      long long rs =
          get_int(sec, kind, "ruelle_samples", (long long)cfg.ruelle_samples);
      if (rs < 1) bad("classical-entropy.ruelle_samples: expected >= 1");
      cfg.ruelle_samples = std::size_t(rs);
      break;
    }
  }

  bool grid_partition = !cfg.partition.position_strips();
  cfg.resolved_json = resolved_copy(cfg, grid_partition);
  return cfg;
}

namespace {

std::string read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
  f.write(s.data(), std::streamsize(s.size()));
  f.flush();
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

std::string now_iso_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Csv {
  std::string text;
  std::vector<std::string> header;

  explicit Csv(std::vector<std::string> hdr) : header(std::move(hdr)) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) text += ',';
      text += header[i];
    }
    text += '\n';
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text += ',';
      text += cells[i];
    }
    text += '\n';
  }
};

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  int workers = worker_count();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = int(std::min<std::size_t>(std::size_t(workers), n));
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      std::size_t lo = n * std::size_t(t) / std::size_t(workers);
      std::size_t hi = n * std::size_t(t + 1) / std::size_t(workers);
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

double map_lambda(const ExperimentConfig& cfg) {
  if (cfg.map.is_linear()) return cfg.map.linear.lambda_max();
  return lyapunov_max(cfg.map, cfg.lyapunov_iters, cfg.seed).lambda_max;
}

struct RunCtx {
  const ExperimentConfig& cfg;
  fs::path out;
  RunManifest& man;

  void task(const std::string& name, const std::function<void()>& fn) {
    TaskRecord t;
    t.name = name;
    auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
      t.status = "ok";
    } catch (const std::exception& e) {
      t.status = std::string("failed: ") + e.what();
    }
    t.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    man.tasks.push_back(t);
  }

  void add_output(const std::string& rel, const std::string& content) {
    write_text(out / rel, content);
    OutputRecord r;
    r.path = rel;
    r.bytes = content.size();
    r.digest = fnv1a_hex(fnv1a(content.data(), content.size()));
    man.outputs.push_back(r);
  }
};

QuantumPartition make_quantum_partition(const ExperimentConfig& cfg,
                                        const HilbertSpaceSpec& space) {
  if (!cfg.partition_smooth) return quantize_partition(space, cfg.partition);
  SmoothPartition sp = smooth_partition(cfg.partition, cfg.smooth_width,
                                        cfg.smooth_resolution,
                                        cfg.smooth_cutoff);
  return quantize_partition(space, sp);
}

// -------------------------------------------------------------------- kinds

void run_spectrum(RunCtx& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  ojson per_n = ojson::array();
  for (int N : cfg.Ns) {
    ctx.task("spectrum N=" + std::to_string(N), [&] {
      HilbertSpaceSpec space(N);
      Propagator prop = propagator(space, cfg.map);
      Spectrum sp = eigensystem(prop, cfg.residual_tol);

      MatC UV = prop.U * sp.eigenvectors;
      Csv csv({"index", "eigenphase", "residual"});
      for (int k = 0; k < N; ++k) {
        double resid = (UV.col(k) - std::polar(1.0, sp.eigenphases[k]) *
                                        sp.eigenvectors.col(k))
                           .norm();
        csv.row({std::to_string(k), fmt(sp.eigenphases[k]), fmt(resid)});
      }
      ctx.add_output("spectrum_N" + std::to_string(N) + ".csv", csv.text);

      if (cfg.export_states) {
        const char* raw =
            reinterpret_cast<const char*>(sp.eigenvectors.data());
        std::string bytes(raw, std::size_t(N) * std::size_t(N) * 16);
        ctx.add_output("states_N" + std::to_string(N) + ".bin", bytes);
      }
      for (int k : cfg.husimi_states) {
        if (k >= N)
          throw ConfigError("husimi state index " + std::to_string(k) +
                            " out of range for N=" + std::to_string(N));
        int res = std::max(cfg.husimi_resolution, N);
        std::vector<double> h = husimi(space, sp.eigenvectors.col(k), res);
        const char* raw = reinterpret_cast<const char*>(h.data());
        std::string bytes(raw, h.size() * sizeof(double));
        ctx.add_output("husimi_N" + std::to_string(N) + "_state" +
                           std::to_string(k) + ".bin",
                       bytes);
      }

      // consecutive-gap ratio statistic on the sorted eigenphases
      double rsum = 0.0;
      int rcount = 0;
      std::vector<double> gaps(N);
      for (int k = 0; k < N; ++k) {
        double next = (k + 1 < N) ? sp.eigenphases[k + 1]
                                  : sp.eigenphases[0] + TWO_PI;
        gaps[k] = next - sp.eigenphases[k];
      }
      for (int k = 0; k < N; ++k) {
        double g1 = gaps[k], g2 = gaps[(k + 1) % N];
        double hi = std::max(g1, g2);
        if (hi > 0) {
          rsum += std::min(g1, g2) / hi;
          ++rcount;
        }
      }
      ojson e;
      e["N"] = N;
      e["unitarity_residual"] = prop.unitarity_residual;
      e["max_residual"] = sp.max_residual;
      e["orthonormality"] = sp.orthonormality;
      e["spacing_ratio_mean"] = rcount ? rsum / rcount : 0.0;
      per_n.push_back(e);
    });
  }
  ctx.task("write summary", [&] {
    ojson s;
    s["kind"] = "spectrum";
    s["per_N"] = per_n;
    ctx.add_output("summary.json", s.dump(2) + "\n");
  });
}

void run_egorov(RunCtx& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  Csv csv({"N", "t", "residual", "tail_mass", "truncated"});
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_t;
  for (int N : cfg.Ns) {
    ctx.task("egorov N=" + std::to_string(N), [&] {
      HilbertSpaceSpec space(N);
      EgorovOptions opts;
      opts.grid = cfg.egorov_grid;
      opts.cutoff = cfg.egorov_cutoff;
      std::vector<EgorovResidual> res(cfg.times.size());
      parallel_for(cfg.times.size(), [&](std::size_t i) {
        res[i] = egorov_residual(space, cfg.map, cfg.symbol, cfg.times[i],
                                 opts);
      });
      for (std::size_t i = 0; i < cfg.times.size(); ++i) {
        csv.row({std::to_string(N), std::to_string(cfg.times[i]),
                 fmt(res[i].residual), fmt(res[i].tail_mass),
                 res[i].truncated ? "1" : "0"});
        by_t[cfg.times[i]].first.push_back(double(N));
        by_t[cfg.times[i]].second.push_back(res[i].residual);
      }
    });
  }
  ctx.task("write egorov.csv", [&] { ctx.add_output("egorov.csv", csv.text); });
  ctx.task("write summary", [&] {
    ojson arr = ojson::array();
    for (const auto& [t, xy] : by_t) {
      ojson e;
      e["t"] = t;
      e["N"] = xy.first;
      e["residual"] = xy.second;
      bool positive = xy.second.size() >= 2;
      for (double r : xy.second) positive = positive && r > 0;
      if (positive)
        e["loglog_slope"] = loglog_slope(xy.first, xy.second);
      else
        e["loglog_slope"] = nullptr;
      arr.push_back(e);
    }
    ojson s;
    s["kind"] = "egorov";
    s["per_t"] = arr;
    ctx.add_output("summary.json", s.dump(2) + "\n");
  });
}

void run_eup(RunCtx& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  double lambda = map_lambda(cfg);
  EhrenfestClock clock =
      EhrenfestClock::make(lambda, cfg.clock_epsilon, cfg.clock_n_max);

  Csv csv1({"N", "state_kind", "index", "hA", "hB", "lhs", "rhs", "slack"});
  Csv csv2({"N", "state", "depth", "p_rho", "p_tau", "cross_log", "slack"});
  ojson per_n = ojson::array();

  for (int N : cfg.Ns) {
    ctx.task("eup N=" + std::to_string(N), [&] {
      HilbertSpaceSpec space(N);
      Propagator prop = propagator(space, cfg.map);
      Spectrum sp = eigensystem(prop, cfg.residual_tol);
      TorusOperator position_basis{MatC::Identity(N, N), true, true};
      TorusOperator momentum_basis = dft(space);

      double min1 = std::numeric_limits<double>::infinity();
      std::vector<EupLevel1Report> l1(std::size_t(N) + cfg.random_states);
      parallel_for(l1.size(), [&](std::size_t i) {
        VecC psi = i < std::size_t(N)
                       ? VecC(sp.eigenvectors.col(Eigen::Index(i)))
                       : random_state(space, cfg.seed + 881 * std::uint64_t(N) +
                                                 (i - std::size_t(N)));
        l1[i] = eup_level1(psi, position_basis, momentum_basis);
      });
      for (std::size_t i = 0; i < l1.size(); ++i) {
        bool eigen = i < std::size_t(N);
        std::size_t idx = eigen ? i : i - std::size_t(N);
        csv1.row({std::to_string(N), eigen ? "eigen" : "random",
                  std::to_string(idx), fmt(l1[i].hA), fmt(l1[i].hB),
                  fmt(l1[i].lhs), fmt(l1[i].rhs), fmt(l1[i].slack)});
        min1 = std::min(min1, l1[i].slack);
      }

      int n = cfg.eup_depth > 0 ? cfg.eup_depth : clock.two_T(N);
      QuantumPartition qp = make_quantum_partition(cfg, space);
      std::vector<double> v(qp.K, 1.0);
      if (cfg.eup_weights == "jacobian") {
        std::vector<double> J =
            cell_jacobians(cfg.map, cfg.partition, cfg.cone_iters);
        for (int k = 0; k < qp.K; ++k) v[k] = std::sqrt(J[k]);
      }
      EupCrossTerm cross = eup_cross_term(qp, prop, n, v, v);
      std::vector<EupLevel2Report> l2(N);
      parallel_for(std::size_t(N), [&](std::size_t k) {
        l2[k] = eup_level2(sp.eigenvectors.col(Eigen::Index(k)), qp, prop, v,
                           v, cross);
      });
      double min2 = std::numeric_limits<double>::infinity();
      for (int k = 0; k < N; ++k) {
        csv2.row({std::to_string(N), std::to_string(k), std::to_string(n),
                  fmt(l2[k].p_rho), fmt(l2[k].p_tau), fmt(l2[k].cross_log),
                  fmt(l2[k].slack)});
        min2 = std::min(min2, l2[k].slack);
      }

      ojson e;
      e["N"] = N;
      e["depth"] = n;
      e["level1_min_slack"] = min1;
      e["level2_min_slack"] = min2;
      e["cross_log"] = cross.cross_log;
      per_n.push_back(e);
    });
  }
  ctx.task("write eup_level1.csv",
           [&] { ctx.add_output("eup_level1.csv", csv1.text); });
  ctx.task("write eup_level2.csv",
           [&] { ctx.add_output("eup_level2.csv", csv2.text); });
  ctx.task("write summary", [&] {
    ojson s;
    s["kind"] = "eup";
    s["lambda_max"] = lambda;
    s["per_N"] = per_n;
    ctx.add_output("summary.json", s.dump(2) + "\n");
  });
}

void run_dispersive(RunCtx& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  double lambda = map_lambda(cfg);
  Csv csv({"N", "n", "word", "norm", "iterations", "converged",
           "log_jacobian", "ratio"});
  ojson per_n = ojson::array();

  for (int N : cfg.Ns) {
    ctx.task("dispersive N=" + std::to_string(N), [&] {
      HilbertSpaceSpec space(N);
      int n = cfg.dispersive_depth > 0
                  ? cfg.dispersive_depth
                  : std::max(1, int(std::floor(2.0 * std::log(double(N)) /
                                               lambda)));
      WordCodec codec(cfg.partition.K);
      if (n > codec.max_depth())
        throw ConfigError("dispersive depth exceeds packed word capacity");

      std::vector<Word> words;
      double total = std::pow(double(cfg.partition.K), n);
      if (total <= double(cfg.max_words)) {
        words = all_words(cfg.partition.K, n);
      } else {
        std::vector<TorusPoint> pts = sample_invariant_measure(
            MeasureKind::lebesgue(), cfg.map, std::size_t(cfg.max_words) * 8,
            cfg.seed + 31 * std::uint64_t(N));
        std::set<std::uint64_t> seen;
        for (const TorusPoint& p : pts) {
          Word w = word_of_point(cfg.partition, cfg.map, p, n);
          std::uint64_t packed = 0;
          for (int l = 0; l < n; ++l)
            packed = codec.push(packed, l, w.symbols[l]);
          if (seen.insert(packed).second) words.push_back(w);
          if (int(words.size()) >= cfg.max_words) break;
        }
      }

      Propagator prop = propagator(space, cfg.map);
      QuantumPartition qp = make_quantum_partition(cfg, space);

      struct Row {
        NormResult nr;
        double logJ = 0.0, ratio = 0.0;
      };
      std::vector<Row> rows(words.size());
      parallel_for(words.size(), [&](std::size_t i) {
        rows[i].nr = dispersive_norm(qp, prop, words[i]);
        double J = coarse_grained_jacobian(cfg.map, cfg.partition, words[i],
                                           cfg.cone_iters);
        rows[i].logJ = std::log(J);
        rows[i].ratio = rows[i].nr.value * std::sqrt(J / double(N));
      });

      double max_ratio = 0.0;
      for (std::size_t i = 0; i < words.size(); ++i) {
        csv.row({std::to_string(N), std::to_string(n), words[i].str(),
                 fmt(rows[i].nr.value), std::to_string(rows[i].nr.iterations),
                 rows[i].nr.converged ? "1" : "0", fmt(rows[i].logJ),
                 fmt(rows[i].ratio)});
        max_ratio = std::max(max_ratio, rows[i].ratio);
      }
      ojson e;
      e["N"] = N;
      e["n"] = n;
      e["words"] = words.size();
      e["max_ratio"] = max_ratio;
      per_n.push_back(e);
    });
  }
  ctx.task("write dispersive.csv",
           [&] { ctx.add_output("dispersive.csv", csv.text); });
  ctx.task("write summary", [&] {
    ojson growth = ojson::array();
    for (std::size_t i = 1; i < per_n.size(); ++i) {
      double a = per_n[i - 1]["max_ratio"].get<double>();
      double b = per_n[i]["max_ratio"].get<double>();
      growth.push_back(a > 0 ? b / a - 1.0 : 0.0);
    }
    ojson s;
    s["kind"] = "dispersive";
    s["lambda_max"] = lambda;
    s["per_N"] = per_n;
    s["max_ratio_growth"] = growth;
    ctx.add_output("summary.json", s.dump(2) + "\n");
  });
}

void run_entropy_bound(RunCtx& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  double lambda = map_lambda(cfg);
  EhrenfestClock clock =
      EhrenfestClock::make(lambda, cfg.clock_epsilon, cfg.clock_n_max);
  ojson per_n = ojson::array();

  for (int N : cfg.Ns) {
    ctx.task("entropy-bound N=" + std::to_string(N), [&] {
      HilbertSpaceSpec space(N);
      Propagator prop = propagator(space, cfg.map);
      Spectrum sp = eigensystem(prop, cfg.residual_tol);
      QuantumPartition qp = make_quantum_partition(cfg, space);
      EntropyBoundOptions opts;
      opts.prune = cfg.prune;
      opts.cone_iters = cfg.cone_iters;
      opts.control_row = cfg.control_row;
      std::vector<EntropyBoundRow> rows =
          entropy_bound_report(sp, cfg.map, cfg.partition, clock, prop, qp,
                               opts);

      Csv csv({"state", "entropy_rate", "jacobian_mean", "rhs", "slack"});
      double min_eigen = std::numeric_limits<double>::infinity();
      double control = std::numeric_limits<double>::quiet_NaN();
      for (const EntropyBoundRow& r : rows) {
        csv.row({std::to_string(r.state), fmt(r.entropy_rate),
                 fmt(r.jacobian_mean), fmt(r.rhs), fmt(r.slack)});
        if (r.state >= 0)
          min_eigen = std::min(min_eigen, r.slack);
        else
          control = r.slack;
      }
      ctx.add_output("entropy_bound_N" + std::to_string(N) + ".csv", csv.text);

      ojson e;
      e["N"] = N;
      e["T"] = clock.T(N);
      e["min_eigen_slack"] = min_eigen;
      if (cfg.control_row) e["control_slack"] = control;
      per_n.push_back(e);
    });
  }
  ctx.task("write trend summary", [&] {
    bool monotone = true;
    for (std::size_t i = 1; i < per_n.size(); ++i)
      monotone = monotone && per_n[i]["min_eigen_slack"].get<double>() >=
                                 per_n[i - 1]["min_eigen_slack"].get<double>();
    ojson s;
    s["kind"] = "entropy-bound";
    s["lambda_max"] = lambda;
    s["epsilon"] = cfg.clock_epsilon;
    s["per_N"] = per_n;
    s["min_slack_nondecreasing"] = monotone;
    ctx.add_output("summary.json", s.dump(2) + "\n");
  });
}

void run_classical_entropy(RunCtx& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  ctx.task("classical-entropy", [&] {
    std::vector<TorusPoint> pts =
        sample_invariant_measure(cfg.measure, cfg.map, cfg.samples, cfg.seed);
    EntropyRateReport report =
        ks_entropy_rate(cfg.map, cfg.partition, pts, cfg.depth, cfg.seed);

    Csv csv({"n", "H", "rate", "increment", "increment_mm", "words"});
    for (const EntropyRateRow& r : report.rows)
      csv.row({std::to_string(r.n), fmt(r.H), fmt(r.rate), fmt(r.increment),
               fmt(r.increment_mm), std::to_string(r.words)});
    ctx.add_output("classical_entropy.csv", csv.text);

    // top cylinders at full depth, with their Monte Carlo standard errors
    ClassicalSymbolicMeasure m =
        cylinder_measures(pts, cfg.partition, cfg.map, cfg.depth, cfg.seed);
    std::vector<std::pair<std::uint64_t, double>> top(
        m.weights(cfg.depth).begin(), m.weights(cfg.depth).end());
    std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (top.size() > 64) top.resize(64);
    WordCodec codec(cfg.partition.K);
    Csv cyl({"word", "weight", "stderr"});
    for (const auto& [packed, w] : top)
      cyl.row({codec.unpack(packed, cfg.depth).str(), fmt(w),
               fmt(m.stderr_of(w))});
    ctx.add_output("cylinders.csv", cyl.text);

    // Ruelle side: mean log unstable Jacobian over the same measure
    std::size_t R = std::min(cfg.ruelle_samples, pts.size());
    std::vector<double> logs(R);
    parallel_for(R, [&](std::size_t i) {
      logs[i] = std::log(unstable_jacobian(cfg.map, pts[i], 30));
    });
    double mean_logJ = 0.0;
    for (double v : logs) mean_logJ += v;
    mean_logJ /= R ? double(R) : 1.0;

    const EntropyRateRow& last = report.rows.back();
    ojson s;
    s["kind"] = "classical-entropy";
    s["depth"] = cfg.depth;
    s["samples"] = cfg.samples;
    s["measure"] = cfg.measure.type == MeasureKind::Lebesgue
                       ? "lebesgue"
                       : "periodic-orbit";
    if (cfg.measure.type == MeasureKind::PeriodicOrbit) {
      s["orbit"]["x"] = cfg.measure.point.x;
      s["orbit"]["xi"] = cfg.measure.point.xi;
      s["orbit"]["period"] = cfg.measure.period;
    }
    s["rate_at_depth"] = last.rate;
    s["increment_mm_at_depth"] = last.increment_mm;
    s["words_at_depth"] = last.words;
    s["subadditivity_worst"] = report.subadditivity_worst;
    s["subadditive_within_tol"] = report.subadditive_within_tol;
    s["mean_log_unstable_jacobian"] = mean_logJ;
    s["ruelle_slack"] = mean_logJ - last.increment_mm;
    ctx.add_output("summary.json", s.dump(2) + "\n");
  });
}

}  // namespace

bool RunManifest::ok() const {
  for (const TaskRecord& t : tasks)
    if (t.status != "ok") return false;
  return true;
}

int worker_count() {
  if (const char* env = std::getenv("QCAT_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1 && v <= 256) return int(v);
    return 1;  // unparsable values fall back to serial, never crash
  }
  unsigned hw = std::thread::hardware_concurrency();
  return int(std::min(8u, std::max(1u, hw)));
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  fs::path out(cfg.output_dir);
  fs::create_directories(out);

  RunManifest man;
  man.version = QCAT_VERSION;
  man.kind = ExperimentConfig::kind_name(cfg.kind);
  man.config_digest = fnv1a_hex(fnv1a(cfg.resolved_json));
  man.started = now_iso_utc();

  RunCtx ctx{cfg, out, man};
  ctx.task("write config_resolved.json", [&] {
    ctx.add_output("config_resolved.json", cfg.resolved_json);
  });

  switch (cfg.kind) {
    case ExperimentConfig::Kind::Spectrum: run_spectrum(ctx); break;
    case ExperimentConfig::Kind::Egorov: run_egorov(ctx); break;
    case ExperimentConfig::Kind::Eup: run_eup(ctx); break;
    case ExperimentConfig::Kind::Dispersive: run_dispersive(ctx); break;
    case ExperimentConfig::Kind::EntropyBound: run_entropy_bound(ctx); break;
    case ExperimentConfig::Kind::ClassicalEntropy:
      run_classical_entropy(ctx);
      break;
  }

  // every file in the output directory must be accounted for
  ctx.task("manifest completeness", [&] {
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
      if (!entry.is_regular_file()) continue;
      std::string rel = fs::relative(entry.path(), out).generic_string();
      if (rel == "manifest.json") continue;
      bool listed = false;
      for (const OutputRecord& o : man.outputs) listed |= o.path == rel;
      if (!listed)
        throw std::runtime_error("stray file not produced by this run: " +
                                 rel);
    }
  });

  man.finished = now_iso_utc();
  write_manifest(man, (out / "manifest.json").string());
  return man;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  ojson j;
  j["version"] = m.version;
  j["kind"] = m.kind;
  j["config_digest"] = m.config_digest;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["tasks"] = ojson::array();
  for (const TaskRecord& t : m.tasks) {
    ojson e;
    e["name"] = t.name;
    e["status"] = t.status;
    e["seconds"] = t.seconds;
    j["tasks"].push_back(e);
  }
  j["outputs"] = ojson::array();
  for (const OutputRecord& o : m.outputs) {
    ojson e;
    e["path"] = o.path;
    e["bytes"] = o.bytes;
    e["digest"] = o.digest;
    j["outputs"].push_back(e);
  }
  write_text(path, j.dump(2) + "\n");
}

RunManifest load_manifest(const std::string& path) {
  njson j;
  try {
    j = njson::parse(read_bytes(path));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot read manifest: ") + e.what());
  }
  RunManifest m;
  auto str = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string())
      throw ConfigError(std::string("manifest missing string key ") + key);
    return j[key].get<std::string>();
  };
  m.version = str("version");
  m.kind = str("kind");
  m.config_digest = str("config_digest");
  m.started = str("started");
  m.finished = str("finished");
  if (!j.contains("tasks") || !j["tasks"].is_array() ||
      !j.contains("outputs") || !j["outputs"].is_array())
    throw ConfigError("manifest missing tasks/outputs arrays");
  for (const njson& e : j["tasks"]) {
    TaskRecord t;
    t.name = e.value("name", "");
    t.status = e.value("status", "");
    t.seconds = e.value("seconds", 0.0);
    m.tasks.push_back(t);
  }
  for (const njson& e : j["outputs"]) {
    OutputRecord o;
    o.path = e.value("path", "");
    o.bytes = e.value("bytes", std::uint64_t(0));
    o.digest = e.value("digest", "");
    if (o.path.empty()) throw ConfigError("manifest output with empty path");
    m.outputs.push_back(o);
  }
  return m;
}

bool DiffReport::clean() const {
  for (const DiffEntry& e : entries)
    if (e.status == "differs") return false;
  return true;
}

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

bool as_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  *out = v;
  return true;
}

bool csv_close(const std::string& cur, const std::string& bas,
               std::string* detail) {
  auto a = parse_csv(cur), b = parse_csv(bas);
  if (a.empty() || b.empty()) {
    if (a.empty() && b.empty()) return true;
    *detail = "one file is empty";
    return false;
  }
  if (a[0] != b[0]) {
    *detail = "header mismatch";
    return false;
  }
  if (a.size() != b.size()) {
    *detail = "row count " + std::to_string(a.size() - 1) + " vs " +
              std::to_string(b.size() - 1);
    return false;
  }
  const std::vector<std::string>& header = a[0];
  int stderr_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == "stderr") stderr_col = int(c);

  for (std::size_t r = 1; r < a.size(); ++r) {
    if (a[r].size() != b[r].size() || a[r].size() != header.size()) {
      *detail = "row " + std::to_string(r) + ": column count mismatch";
      return false;
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      double x, y;
      if (as_double(a[r][c], &x) && as_double(b[r][c], &y)) {
        if (std::isnan(x) && std::isnan(y)) continue;
        double tol_abs = 1e-9, tol_rel = 1e-6;
        if (header[c].find("eigenphase") != std::string::npos) {
          tol_abs = 1e-8;
          tol_rel = 0.0;
        } else if (header[c] == "weight" && stderr_col >= 0) {
          double sa = 0, sb = 0;
          as_double(a[r][std::size_t(stderr_col)], &sa);
          as_double(b[r][std::size_t(stderr_col)], &sb);
          tol_abs = 3.0 * std::max(sa, sb) + 1e-12;
          tol_rel = 0.0;
        }
        if (std::fabs(x - y) > tol_abs + tol_rel * std::max(std::fabs(x),
                                                            std::fabs(y))) {
          *detail = "row " + std::to_string(r) + " col " + header[c] + ": " +
                    a[r][c] + " vs " + b[r][c];
          return false;
        }
      } else if (a[r][c] != b[r][c]) {
        *detail = "row " + std::to_string(r) + " col " + header[c] + ": \"" +
                  a[r][c] + "\" vs \"" + b[r][c] + "\"";
        return false;
      }
    }
  }
  return true;
}

bool json_close(const njson& a, const njson& b, const std::string& path,
                std::string* detail) {
  // timing and location metadata legitimately differ between a run and its
  // baseline; everything else must agree
  static const std::set<std::string> skip = {"started", "finished", "seconds",
                                             "output_dir"};
  if (a.is_number() && b.is_number()) {
    double x = a.get<double>(), y = b.get<double>();
    if (std::isnan(x) && std::isnan(y)) return true;
    if (std::fabs(x - y) >
        1e-9 + 1e-6 * std::max(std::fabs(x), std::fabs(y))) {
      *detail = path + ": " + a.dump() + " vs " + b.dump();
      return false;
    }
    return true;
  }
  if (a.type() != b.type()) {
    *detail = path + ": type " + a.type_name() + " vs " + b.type_name();
    return false;
  }
  if (a.is_object()) {
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (skip.count(it.key())) continue;
      if (!b.contains(it.key())) {
        *detail = path + "." + it.key() + ": missing in baseline";
        return false;
      }
      if (!json_close(it.value(), b[it.key()], path + "." + it.key(), detail))
        return false;
    }
    for (auto it = b.begin(); it != b.end(); ++it)
      if (!skip.count(it.key()) && !a.contains(it.key())) {
        *detail = path + "." + it.key() + ": missing in run";
        return false;
      }
    return true;
  }
  if (a.is_array()) {
    if (a.size() != b.size()) {
      *detail = path + ": array size " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size());
      return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!json_close(a[i], b[i], path + "[" + std::to_string(i) + "]",
                      detail))
        return false;
    return true;
  }
  if (a != b) {
    *detail = path + ": " + a.dump() + " vs " + b.dump();
    return false;
  }
  return true;
}

}  // namespace

DiffReport compare_baseline(const std::string& manifest_path,
                            const std::string& baseline_dir) {
  RunManifest man = load_manifest(manifest_path);
  fs::path run_dir = fs::path(manifest_path).parent_path();
  fs::path base(baseline_dir);
  if (!fs::exists(base))
    throw ConfigError("baseline directory does not exist: " + baseline_dir);

  DiffReport rep;
  for (const OutputRecord& o : man.outputs) {
    DiffEntry e;
    e.path = o.path;
    fs::path cur = run_dir / o.path, bas = base / o.path;
    if (!fs::exists(cur)) {
      e.status = "differs";
      e.detail = "listed in manifest but missing from the run directory";
      rep.entries.push_back(e);
      continue;
    }
    if (!fs::exists(bas)) {
      e.status = "new";
      e.detail = "no baseline file";
      rep.entries.push_back(e);
      continue;
    }
    std::string ext = cur.extension().string();
    std::string detail;
    bool same = false;
    if (ext == ".csv") {
      same = csv_close(read_bytes(cur), read_bytes(bas), &detail);
    } else if (ext == ".json") {
      njson ja, jb;
      try {
        ja = njson::parse(read_bytes(cur));
        jb = njson::parse(read_bytes(bas));
        same = json_close(ja, jb, "$", &detail);
      } catch (const std::exception& ex) {
        same = false;
        detail = std::string("json parse: ") + ex.what();
      }
    } else {
      same = read_bytes(cur) == read_bytes(bas);
      if (!same) detail = "binary content differs";
    }
    e.status = same ? "match" : "differs";
    e.detail = detail;
    rep.entries.push_back(e);
  }
  return rep;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_bytes(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_config(text);
}

}  // namespace qcat
