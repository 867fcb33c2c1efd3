#ifndef MIXLAB_EXPERIMENT_HPP
#define MIXLAB_EXPERIMENT_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "mixlab/core.hpp"
#include "mixlab/coupling.hpp"
#include "mixlab/dynamics.hpp"
#include "mixlab/exact.hpp"
#include "mixlab/harness.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/spectral.hpp"

// Config-driven experiments shared by `mixlab run` and the CLI subcommands.

namespace mixlab {

inline constexpr std::string_view kCsvVersion = "# mixlab-v1";

using ConfigMap = std::map<std::string, std::string>;

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "experiment", "model",   "N",     "k",    "p",      "seed",      "replicas", "stationary_replicas",
      "t_max",      "grid",    "eps",   "out",  "format", "n_list",    "workers",  "bins",
      "coupling",   "estimator", "init", "exact_limit"};
  return keys;
}

inline const std::set<std::string>& known_experiments() {
  static const std::set<std::string> names{"spectrum", "exact", "simulate", "couple", "dtv", "profile", "cutoff"};
  return names;
}

// Flat `key = value` document; '#' starts a comment line.
inline ConfigMap parse_config_text(std::string_view text) {
  ConfigMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": empty key");
    if (!map.emplace(key, value).second) throw Error(ErrorKind::ConfigError, "config key '" + key + "': given twice");
  }
  return map;
}

enum class EstimatorMode { Both, Lower, Upper, None };

struct ExperimentConfig {
  std::string experiment;
  std::optional<ChainSpec> spec;
  int N = 0;  // also used by `spectrum`, which has no model
  std::vector<double> grid;
  std::optional<double> t_max;
  int replicas = 1000;
  int stationary_replicas = 0;
  std::uint64_t seed = 1;
  EstimatorMode estimator = EstimatorMode::Both;
  CouplingMode coupling = CouplingMode::Graphical;
  double eps = 0.25;
  int bins = 64;
  std::vector<int> n_list;
  std::string init = "bottom";
  std::size_t exact_limit = 20000;
  std::string out_dir = ".";
  std::string format = "csv";
  int workers = 1;

  EstimatorOptions estimator_options() const {
    EstimatorOptions o;
    o.replicas = replicas;
    o.stationary_replicas = stationary_replicas;
    o.seed = seed;
    o.workers = workers;
    o.bins = bins;
    return o;
  }
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::ConfigError, "config key '" + key + "': " + why);
}

inline long long config_int(const ConfigMap& m, const std::string& key, long long lo, long long hi) {
  const std::string& s = m.at(key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) config_fail(key, "expected an integer, got '" + s + "'");
  if (v < lo || v > hi) config_fail(key, "value " + s + " out of range");
  return v;
}

inline std::uint64_t config_u64(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.at(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) config_fail(key, "expected an unsigned 64-bit integer, got '" + s + "'");
  return v;
}

inline double config_double(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.at(key);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) config_fail(key, "expected a number, got '" + s + "'");
  return v;
}

}  // namespace detail

inline ExperimentConfig config_from_map(const ConfigMap& m) {
  using detail::config_fail;
  for (const auto& [key, value] : m) {
    if (!known_config_keys().contains(key)) config_fail(key, "unknown key");
  }
  ExperimentConfig c;
  c.workers = worker_count();
  auto has = [&](const char* key) { return m.contains(key); };

  if (!has("experiment")) config_fail("experiment", "missing");
  c.experiment = m.at("experiment");
  if (!known_experiments().contains(c.experiment)) config_fail("experiment", "unknown experiment '" + c.experiment + "'");

  if (has("N")) c.N = static_cast<int>(detail::config_int(m, "N", 2, 1 << 20));
  const bool needs_model = c.experiment != "spectrum";
  std::optional<Model> model;
  if (has("model")) {
    model = parse_model(m.at("model"));
    if (!model) config_fail("model", "unknown model '" + m.at("model") + "'");
  } else if (needs_model) {
    config_fail("model", "missing");
  }
  if (c.experiment == "cutoff") {
    if (!has("n_list")) config_fail("n_list", "missing");
    try {
      for (int v : detail::parse_ints(m.at("n_list"))) {
        if (v < 2) config_fail("n_list", "every N must be >= 2");
        c.n_list.push_back(v);
      }
      if (c.n_list.empty()) config_fail("n_list", "empty");
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigError) throw;
      config_fail("n_list", e.what());
    }
  } else if (c.N == 0) {
    config_fail("N", "missing");
  }

  double p = 0.5;
  if (has("p")) p = detail::config_double(m, "p");
  if (model && is_biased(*model) && !has("p")) config_fail("p", "biased models need p");
  if (model && !is_biased(*model) && p != 0.5) config_fail("p", "symmetric models need p = 0.5");
  if (model && is_biased(*model) && !(p > 0.5 && p <= 1.0)) config_fail("p", "biased models need p in (0.5, 1]");

  if (model && c.experiment != "cutoff") {
    int k = 0;
    if (has_particle_count(*model)) {
      k = has("k") ? static_cast<int>(detail::config_int(m, "k", 1, c.N - 1)) : c.N / 2;
    }
    try {
      c.spec = ChainSpec::make(*model, c.N, k, p);
    } catch (const Error& e) {
      config_fail("model", e.what());
    }
  }
  // The cutoff scan builds one spec per N from model and p.
  if (model && c.experiment == "cutoff") {
    try {
      c.spec = ChainSpec::make(*model, c.n_list.front(), has_particle_count(*model) ? c.n_list.front() / 2 : 0, p);
    } catch (const Error& e) {
      config_fail("n_list", e.what());
    }
  }

  if (has("seed")) c.seed = detail::config_u64(m, "seed");
  if (has("replicas")) c.replicas = static_cast<int>(detail::config_int(m, "replicas", 1, 100000000));
  if (has("stationary_replicas")) {
    c.stationary_replicas = static_cast<int>(detail::config_int(m, "stationary_replicas", 0, 100000000));
  }
  if (has("workers")) c.workers = static_cast<int>(detail::config_int(m, "workers", 1, 4096));
  if (has("bins")) c.bins = static_cast<int>(detail::config_int(m, "bins", 1, 1 << 16));
  if (has("exact_limit")) c.exact_limit = static_cast<std::size_t>(detail::config_int(m, "exact_limit", 1, 100000000));
  if (has("t_max")) {
    c.t_max = detail::config_double(m, "t_max");
    if (!(*c.t_max > 0.0)) config_fail("t_max", "must be positive");
  }
  if (has("eps")) {
    c.eps = detail::config_double(m, "eps");
    if (!(c.eps > 0.0 && c.eps < 0.5)) config_fail("eps", "must lie in (0, 0.5)");
  }
  if (has("grid")) {
    try {
      c.grid = parse_grid(m.at("grid"));
    } catch (const Error& e) {
      config_fail("grid", e.what());
    }
  }
  if (has("estimator")) {
    const auto& v = m.at("estimator");
    if (v == "both") c.estimator = EstimatorMode::Both;
    else if (v == "lower") c.estimator = EstimatorMode::Lower;
    else if (v == "upper") c.estimator = EstimatorMode::Upper;
    else if (v == "none") c.estimator = EstimatorMode::None;
    else config_fail("estimator", "expected both, lower, upper or none");
  }
  if (has("coupling")) {
    const auto& v = m.at("coupling");
    if (v == "graphical") c.coupling = CouplingMode::Graphical;
    else if (v == "refined") c.coupling = CouplingMode::Refined;
    else config_fail("coupling", "expected graphical or refined");
  }
  if (has("init")) c.init = m.at("init");
  if (has("out")) c.out_dir = m.at("out");
  if (has("format")) {
    c.format = m.at("format");
    if (c.format != "csv" && c.format != "json") config_fail("format", "expected csv or json");
  }

  if (c.experiment == "simulate" && !c.t_max) config_fail("t_max", "simulate needs t_max");
  if ((c.experiment == "profile") && c.grid.empty() && !c.t_max) config_fail("grid", "profile needs grid or t_max");
  if (c.experiment == "profile" && !is_exclusion_type(c.spec->model())) config_fail("model", "profile needs ssep or asep");
  if (c.experiment == "dtv" && c.grid.empty() && !c.t_max) config_fail("grid", "dtv needs grid or t_max");
  if (c.experiment == "dtv" && c.spec->model() == Model::SimplexRW && c.estimator != EstimatorMode::Lower &&
      c.estimator != EstimatorMode::None) {
    config_fail("estimator", "the simplex walk supports only the lower estimator");
  }
  if (c.experiment == "couple" && c.spec->model() == Model::SimplexRW) config_fail("model", "couple needs a discrete model");
  if (c.experiment == "couple" && c.coupling == CouplingMode::Refined && !is_exclusion_type(c.spec->model()) &&
      !is_corner_flip_type(c.spec->model())) {
    config_fail("coupling", "refined coupling needs ssep, asep, cf or acf");
  }
  if (c.experiment == "exact" && (c.spec->model() == Model::SimplexRW || c.spec->p() >= 1.0)) {
    config_fail("model", "exact analysis needs a discrete model with p < 1");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_map(parse_config_text(ss.str()));
}

// ---------------------------------------------------------------------------
// Tables and artifacts

using Cell = std::variant<long long, double, std::string>;

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::string to_csv() const {
    std::string out(kCsvVersion);
    out += "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ",";
        if (const auto* x = std::get_if<long long>(&row[i])) out += std::to_string(*x);
        else if (const auto* d = std::get_if<double>(&row[i])) out += format_number(*d);
        else out += std::get<std::string>(row[i]);
      }
      out += "\n";
    }
    return out;
  }

  nlohmann::ordered_json to_json() const {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
      nlohmann::ordered_json obj;
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (const auto* x = std::get_if<long long>(&row[i])) obj[columns[i]] = *x;
        else if (const auto* d = std::get_if<double>(&row[i])) obj[columns[i]] = json_number(*d);
        else obj[columns[i]] = std::get<std::string>(row[i]);
      }
      arr.push_back(std::move(obj));
    }
    return arr;
  }
};

struct Artifact {
  std::string name;
  std::string content;
};

namespace detail {

inline nlohmann::ordered_json spec_json(const ChainSpec& s) {
  nlohmann::ordered_json j;
  j["model"] = std::string(model_code(s.model()));
  j["N"] = s.N();
  j["k"] = s.k();
  j["p"] = s.p();
  return j;
}

inline std::vector<double> grid_or_default(const ExperimentConfig& c, double fallback_end, int points = 41) {
  if (!c.grid.empty()) return c.grid;
  return linspace(0.0, c.t_max ? *c.t_max : fallback_end, points);
}

inline std::pair<Table, nlohmann::ordered_json> run_spectrum(const ExperimentConfig& c) {
  const auto spec = dirichlet_spectrum(c.N);
  Table t{{"j", "gamma_j"}, {}};
  double worst = 0.0;
  for (int j = 1; j < c.N; ++j) {
    t.rows.push_back({static_cast<long long>(j), spec.gamma(j)});
    worst = std::max(worst, eigen_residual(spec, j));
  }
  nlohmann::ordered_json s;
  s["N"] = c.N;
  s["gamma_1"] = spec.gamma(1);
  s["max_eigen_residual"] = worst;
  return {t, s};
}

inline std::pair<Table, nlohmann::ordered_json> run_exact(const ExperimentConfig& c) {
  const ExactChain chain(*c.spec, c.exact_limit);
  const double tmix = chain.mixing_time(c.eps, c.workers);
  const auto grid = grid_or_default(c, 2.0 * tmix, 51);
  const auto curve = chain.distance_curve(grid, c.workers);
  Table t{{"t", "d_exact"}, {}};
  for (std::size_t g = 0; g < grid.size(); ++g) t.rows.push_back({curve.times[g], curve.values[g]});
  const auto stat = stationary_exact(chain.states(), chain.generator());
  nlohmann::ordered_json s = spec_json(*c.spec);
  s["states"] = chain.size();
  s["eps"] = c.eps;
  s["tmix"] = tmix;
  s["tmix_complement"] = chain.mixing_time(1.0 - c.eps, c.workers);
  s["invariance_residual"] = stat.residual;
  s["detailed_balance_residual"] = detailed_balance_residual(chain.generator(), chain.stationary());
  s["stationary_agreement"] = stat.agreement;
  return {t, s};
}

template <ChainState State>
State initial_state(const ExperimentConfig& c) {
  const ChainSpec& spec = *c.spec;
  if (c.init == "bottom") return bottom_state<State>(spec);
  if (c.init == "top") return top_state<State>(spec);
  if (c.init == "stationary") return stationary_sample<State>(spec, derive_seed(c.seed, 0x1a17));
  try {
    State s = [&] {
      if constexpr (std::is_same_v<State, Permutation>) return parse_permutation(c.init);
      else if constexpr (std::is_same_v<State, ExclusionConfig>) return parse_exclusion(c.init);
      else if constexpr (std::is_same_v<State, LatticePath>) return parse_path(c.init);
      else return parse_simplex(c.init);
    }();
    check_state(spec, s);
    return s;
  } catch (const Error& e) {
    config_fail("init", e.what());
  }
}

inline std::pair<std::string, nlohmann::ordered_json> run_simulate(const ExperimentConfig& c) {
  return dispatch_state_type(c.spec->model(), [&]<class S>(std::type_identity<S>) {
    const S init = initial_state<S>(c);
    std::vector<UpdateEvent> events;
    const auto res = simulate(*c.spec, init, *c.t_max, c.seed, {}, &events);
    std::ostringstream out;
    out << kCsvVersion << "\n";
    write_trajectory(out, *c.spec, init, events);
    nlohmann::ordered_json s = spec_json(*c.spec);
    s["t_max"] = *c.t_max;
    s["events"] = res.events;
    s["init"] = format_state(init);
    s["final_state"] = format_state(res.final_state);
    return std::pair{out.str(), s};
  });
}

inline std::pair<Table, nlohmann::ordered_json> run_couple(const ExperimentConfig& c) {
  const ChainSpec& spec = *c.spec;
  const double t_max = c.t_max ? *c.t_max : default_t_max(spec);
  const auto R = static_cast<std::size_t>(c.replicas);
  std::vector<CouplingReport> reports(R);
  dispatch_state_type(spec.model(), [&]<class S>(std::type_identity<S>) {
    if constexpr (!std::is_same_v<S, SimplexPoint>) {
      const S lo = bottom_state<S>(spec);
      const S hi = top_state<S>(spec);
      parallel_for(R, c.workers, [&](std::size_t r) {
        reports[r] = coupling_time(spec, lo, hi, derive_seed(c.seed, r), t_max, c.coupling);
      });
    }
  });
  Table t{{"replica", "mode", "tau", "censored"}, {}};
  std::vector<double> taus;
  long long censored = 0;
  for (std::size_t r = 0; r < R; ++r) {
    const double tau = reports[r].tau.value_or(kInf);
    taus.push_back(tau);
    censored += reports[r].censored();
    t.rows.push_back({static_cast<long long>(r), std::string(to_string(c.coupling)), tau,
                      static_cast<long long>(reports[r].censored())});
  }
  std::sort(taus.begin(), taus.end());
  // Median: average of the two middle order statistics; censored values are +inf.
  const double median = R % 2 ? taus[R / 2] : 0.5 * (taus[R / 2 - 1] + taus[R / 2]);
  nlohmann::ordered_json s = spec_json(spec);
  s["mode"] = to_string(c.coupling);
  s["replicas"] = R;
  s["t_max"] = t_max;
  s["censored"] = censored;
  s["median_tau"] = json_number(median);
  if (spec.model() != Model::SimplexRW) s["tail_bound_at_median"] = json_number(coupling_tail_bound(spec, median).clamped);
  return {t, s};
}

inline std::pair<Table, nlohmann::ordered_json> run_dtv(const ExperimentConfig& c) {
  const ChainSpec& spec = *c.spec;
  const auto grid = grid_or_default(c, 0.0);
  const auto o = c.estimator_options();
  const std::size_t G = grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  DistanceCurve lower{grid, std::vector<double>(G, nan), std::vector<double>(G, nan), CurveKind::LowerEstimate};
  DistanceCurve upper{grid, std::vector<double>(G, nan), std::vector<double>(G, nan), CurveKind::UpperEstimate};
  DistanceCurve exact{grid, std::vector<double>(G, nan), std::vector<double>(G, 0.0), CurveKind::Exact};
  const bool want_lower = c.estimator == EstimatorMode::Both || c.estimator == EstimatorMode::Lower;
  const bool want_upper = c.estimator == EstimatorMode::Both || c.estimator == EstimatorMode::Upper;
  if (want_lower) lower = estimate_distance_lower(spec, grid, o);
  if (want_upper) upper = estimate_distance_upper(spec, grid, o);
  const bool has_exact = exactly_solvable(spec, c.exact_limit);
  if (has_exact) exact = ExactChain(spec, c.exact_limit).distance_curve(grid, c.workers);
  Table t{{"t", "d_lower", "band_lower", "d_upper", "band_upper", "d_exact"}, {}};
  for (std::size_t g = 0; g < G; ++g) {
    t.rows.push_back({grid[g], lower.values[g], lower.band[g], upper.values[g], upper.band[g], exact.values[g]});
  }
  nlohmann::ordered_json s = spec_json(spec);
  s["replicas"] = c.replicas;
  s["stationary_replicas"] = c.stationary_replicas > 0 ? c.stationary_replicas : c.replicas;
  s["t_half_lower"] = json_number(want_lower ? crossing_time(lower) : nan);
  s["t_half_upper"] = json_number(want_upper ? crossing_time(upper) : nan);
  s["t_half_exact"] = json_number(has_exact ? crossing_time(exact) : nan);
  s["theory"] = theory_mixing_time(spec);
  return {t, s};
}

inline std::pair<Table, nlohmann::ordered_json> run_profile(const ExperimentConfig& c) {
  const ChainSpec& spec = *c.spec;
  const auto times = c.grid.empty() ? std::vector<double>{*c.t_max} : c.grid;
  const auto est = density_profile(spec, times, c.estimator_options());
  Table t{{"t", "site", "density", "band"}, {}};
  nlohmann::ordered_json s = spec_json(spec);
  const auto step = step_profile(spec.N(), spec.k());
  const std::vector<double> flat(spec.N(), static_cast<double>(spec.k()) / spec.N());
  auto l1_step = nlohmann::ordered_json::array();
  auto l1_flat = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < times.size(); ++g) {
    for (int i = 0; i < spec.N(); ++i) {
      t.rows.push_back({times[g], static_cast<long long>(i + 1), est.density[g][i], est.band[g][i]});
    }
    l1_step.push_back(l1_distance(est.density[g], step));
    l1_flat.push_back(l1_distance(est.density[g], flat));
  }
  s["replicas"] = c.replicas;
  s["times"] = times;
  s["l1_to_step"] = l1_step;
  s["l1_to_flat"] = l1_flat;
  return {t, s};
}

inline std::pair<Table, nlohmann::ordered_json> run_cutoff(const ExperimentConfig& c) {
  CutoffOptions o;
  o.estimator = c.estimator_options();
  o.p = c.spec->p();
  o.exact_limit = c.exact_limit;
  o.estimate = c.estimator != EstimatorMode::None;
  if (!c.grid.empty()) o.grid_points = static_cast<int>(c.grid.size());
  const auto res = cutoff_scan(c.spec->model(), c.n_list, {c.eps, 1.0 - c.eps}, c.seed, o);
  Table t{{"N", "k", "t_half_lower", "t_half_upper", "theory", "exact_ratio"}, {}};
  for (const auto& r : res.records) {
    t.rows.push_back({static_cast<long long>(r.N), static_cast<long long>(r.k), r.t_half_lower, r.t_half_upper, r.theory,
                      r.exact_ratio});
  }
  nlohmann::ordered_json s;
  s["model"] = std::string(model_code(res.model));
  s["p"] = c.spec->p();
  s["eps"] = {res.eps_lo, res.eps_hi};
  s["records"] = t.to_json();
  return {t, s};
}

}  // namespace detail

// Pure function of the config: the files an experiment writes.
inline std::vector<Artifact> produce_artifacts(const ExperimentConfig& c) {
  std::string csv;
  nlohmann::ordered_json summary;
  nlohmann::ordered_json data;
  auto take = [&](std::pair<Table, nlohmann::ordered_json> r) {
    csv = r.first.to_csv();
    data = r.first.to_json();
    summary = std::move(r.second);
  };
  if (c.experiment == "spectrum") take(detail::run_spectrum(c));
  else if (c.experiment == "exact") take(detail::run_exact(c));
  else if (c.experiment == "couple") take(detail::run_couple(c));
  else if (c.experiment == "dtv") take(detail::run_dtv(c));
  else if (c.experiment == "profile") take(detail::run_profile(c));
  else if (c.experiment == "cutoff") take(detail::run_cutoff(c));
  else if (c.experiment == "simulate") {
    auto [text, s] = detail::run_simulate(c);
    csv = std::move(text);
    summary = std::move(s);
  } else {
    throw Error(ErrorKind::ConfigError, "config key 'experiment': unknown experiment '" + c.experiment + "'");
  }
  nlohmann::ordered_json doc;
  doc["format"] = std::string(kCsvVersion.substr(2));
  doc["experiment"] = c.experiment;
  doc["seed"] = c.seed;
  doc["summary"] = summary;
  std::vector<Artifact> out;
  if (c.format == "json") {
    if (!data.is_null()) doc["data"] = data;
    out.push_back({c.experiment + ".json", doc.dump(2) + "\n"});
  } else {
    out.push_back({c.experiment + ".csv", csv});
    out.push_back({c.experiment + ".json", doc.dump(2) + "\n"});
  }
  return out;
}

// Writes the artifacts of `c` into c.out_dir. Exit codes: 0 success,
// 2 configuration error, 3 resource error, 1 any other failure. Files written
// by a failed run are removed.
inline int execute(const ExperimentConfig& c, std::ostream& err) {
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
  };
  try {
    const auto artifacts = produce_artifacts(c);
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec || !fs::is_directory(c.out_dir)) throw Error(ErrorKind::ResourceError, "cannot create output directory '" + c.out_dir + "'");
    for (const auto& a : artifacts) {
      const fs::path path = fs::path(c.out_dir) / a.name;
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorKind::ResourceError, "cannot write '" + path.string() + "'");
      written.push_back(path);
      out << a.content;
      out.close();
      if (!out) throw Error(ErrorKind::ResourceError, "failed writing '" + path.string() + "'");
    }
    return 0;
  } catch (const Error& e) {
    cleanup();
    err << "mixlab: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::ConfigError:
      case ErrorKind::ParseError: return 2;
      case ErrorKind::ResourceError:
      case ErrorKind::TooLarge:
      case ErrorKind::Timeout: return 3;
      default: return 1;
    }
  } catch (const std::bad_alloc&) {
    cleanup();
    err << "mixlab: out of memory\n";
    return 3;
  } catch (const std::exception& e) {
    cleanup();
    err << "mixlab: " << e.what() << "\n";
    return 1;
  }
}

inline int run_experiment(const std::string& config_path, std::ostream& err = std::cerr) {
  ExperimentConfig c;
  try {
    c = load_config(config_path);
  } catch (const Error& e) {
    err << "mixlab: " << e.what() << "\n";
    return 2;
  }
  return execute(c, err);
}

}  // namespace mixlab

#endif
