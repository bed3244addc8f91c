#include "isrfd/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "isrfd/errors.hpp"
#include "json.hpp"

namespace isrfd {

using nlohmann::json;

void ScenarioConfig::validate() const {
  body.validate();
  if (constellation.size() < 2) throw ConfigError("config: need at least 2 satellites");
  for (const auto& el : constellation) el.validate();
  if (!(sigma_m_m > 0.0)) throw ConfigError("config: sigma_m_m must be > 0");
  if (!(sigma_r_m >= 0.0)) throw ConfigError("config: sigma_r_m must be >= 0");
  if (!(fault_ratio >= 0.0 && fault_ratio <= 1.0))
    throw ConfigError("config: fault_ratio must be in [0, 1]");
  if (n_faults != 0 && n_faults != 1) throw ConfigError("config: n_faults must be 0 or 1");
  if (alpha_grid.empty()) throw ConfigError("config: alpha_grid must be nonempty");
  for (double a : alpha_grid)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("config: alpha values must be in (0, 1)");
  if (!(eta_alpha >= 1.0)) throw ConfigError("config: eta_alpha must be >= 1");
  if (detectors.empty()) throw ConfigError("config: detectors must be nonempty");
  if (trials < 1) throw ConfigError("config: trials must be >= 1");
  if (n_faults == 1 && fault_magnitudes_m.empty())
    throw ConfigError("config: fault_magnitudes_m must be nonempty when n_faults = 1");
  if (!(power_gamma > 0.0 && power_gamma < 1.0))
    throw ConfigError("config: power_gamma must be in (0, 1)");
  if (max_subgraphs < 0) throw ConfigError("config: max_subgraphs must be >= 0");
}

namespace {

template <typename T>
T require_key(const json& j, const std::string& key, const std::string& origin) {
  if (!j.contains(key))
    throw ConfigError(origin + ": missing required config key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": bad value for key '" + key + "': " + e.what());
  }
}

template <typename T>
T optional_key(const json& j, const std::string& key, T fallback, const std::string& origin) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": bad value for key '" + key + "': " + e.what());
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // e.byte is the offset; translate to a line number for the diagnostic.
    size_t line = 1;
    for (size_t p = 0; p < e.byte && p < json_text.size(); ++p)
      if (json_text[p] == '\n') ++line;
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + e.what());
  }

  ScenarioConfig cfg;
  json body = require_key<json>(j, "body", origin);
  cfg.body.radius_km = require_key<double>(body, "radius_km", origin + ".body");
  cfg.body.mask_altitude_km = require_key<double>(body, "mask_altitude_km", origin + ".body");
  cfg.body.phi_max_deg = require_key<double>(body, "phi_max_deg", origin + ".body");
  cfg.body.mu_km3_s2 = require_key<double>(body, "mu_km3_s2", origin + ".body");

  json cons = require_key<json>(j, "constellation", origin);
  if (!cons.is_array()) throw ConfigError(origin + ": 'constellation' must be an array");
  int idx = 0;
  for (const auto& e : cons) {
    std::string at = origin + ".constellation[" + std::to_string(idx++) + "]";
    OrbitalElements el;
    el.a_km = require_key<double>(e, "a_km", at);
    el.e = require_key<double>(e, "e", at);
    el.i_deg = require_key<double>(e, "i_deg", at);
    el.raan_deg = require_key<double>(e, "raan_deg", at);
    el.argp_deg = require_key<double>(e, "argp_deg", at);
    el.M0_deg = require_key<double>(e, "M0_deg", at);
    el.mu_km3_s2 = optional_key<double>(e, "mu_km3_s2", cfg.body.mu_km3_s2, at);
    cfg.constellation.push_back(el);
  }

  cfg.sigma_m_m = require_key<double>(j, "sigma_m_m", origin);
  cfg.sigma_r_m = require_key<double>(j, "sigma_r_m", origin);
  cfg.fault_magnitudes_m =
      optional_key<std::vector<double>>(j, "fault_magnitudes_m", {}, origin);
  cfg.fault_ratio = optional_key<double>(j, "fault_ratio", 1.0, origin);
  cfg.n_faults = optional_key<int>(j, "n_faults", 1, origin);
  cfg.alpha_grid = require_key<std::vector<double>>(j, "alpha_grid", origin);
  cfg.eta_alpha = optional_key<double>(j, "eta_alpha", 1.5, origin);

  auto det_names = require_key<std::vector<std::string>>(j, "detectors", origin);
  for (const auto& name : det_names) {
    auto m = method_from_name(name);
    if (!m) throw ConfigError(origin + ": unknown detector '" + name + "'");
    cfg.detectors.push_back(*m);
  }

  cfg.trials = optional_key<int>(j, "trials", 500, origin);
  cfg.seed = optional_key<std::uint64_t>(j, "seed", 1, origin);
  std::string sampling =
      optional_key<std::string>(j, "epoch_sampling", "uniform_over_period", origin);
  if (sampling == "fixed")
    cfg.epoch_sampling = EpochSampling::fixed;
  else if (sampling == "uniform_over_period")
    cfg.epoch_sampling = EpochSampling::uniform_over_period;
  else
    throw ConfigError(origin + ": epoch_sampling must be 'fixed' or 'uniform_over_period'");
  cfg.fixed_epoch_s = optional_key<double>(j, "fixed_epoch_s", 0.0, origin);
  cfg.use_augmentation = optional_key<bool>(j, "use_augmentation", false, origin);
  cfg.max_subgraphs = optional_key<int>(j, "max_subgraphs", 0, origin);
  cfg.power_gamma = optional_key<double>(j, "power_gamma", 0.8, origin);
  cfg.threads = optional_key<int>(j, "threads", 0, origin);

  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

std::string normalized_config_json(const ScenarioConfig& cfg) {
  json j;
  j["body"] = {{"radius_km", cfg.body.radius_km},
               {"mask_altitude_km", cfg.body.mask_altitude_km},
               {"phi_max_deg", cfg.body.phi_max_deg},
               {"mu_km3_s2", cfg.body.mu_km3_s2}};
  j["constellation"] = json::array();
  for (const auto& el : cfg.constellation)
    j["constellation"].push_back({{"a_km", el.a_km},
                                  {"e", el.e},
                                  {"i_deg", el.i_deg},
                                  {"raan_deg", el.raan_deg},
                                  {"argp_deg", el.argp_deg},
                                  {"M0_deg", el.M0_deg},
                                  {"mu_km3_s2", el.mu_km3_s2}});
  j["sigma_m_m"] = cfg.sigma_m_m;
  j["sigma_r_m"] = cfg.sigma_r_m;
  j["fault_magnitudes_m"] = cfg.fault_magnitudes_m;
  j["fault_ratio"] = cfg.fault_ratio;
  j["n_faults"] = cfg.n_faults;
  j["alpha_grid"] = cfg.alpha_grid;
  j["eta_alpha"] = cfg.eta_alpha;
  j["detectors"] = json::array();
  for (Method m : cfg.detectors) j["detectors"].push_back(method_name(m));
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["epoch_sampling"] =
      cfg.epoch_sampling == EpochSampling::fixed ? "fixed" : "uniform_over_period";
  j["fixed_epoch_s"] = cfg.fixed_epoch_s;
  j["use_augmentation"] = cfg.use_augmentation;
  j["max_subgraphs"] = cfg.max_subgraphs;
  j["power_gamma"] = cfg.power_gamma;
  j["threads"] = cfg.threads;
  return j.dump(2);
}

std::vector<SubgraphRecord> epoch_subgraphs(const ScenarioConfig& config, const LinkGraph& graph) {
  std::vector<SubgraphRecord> subs =
      config.use_augmentation ? list_fault_detectable_5(graph) : list_5_cliques(graph);
  if (config.max_subgraphs > 0 && static_cast<int>(subs.size()) > config.max_subgraphs)
    subs.resize(config.max_subgraphs);
  return subs;
}

std::uint64_t trial_seed_for(std::uint64_t master_seed, int magnitude_index, int trial_index) {
  return splitmix64(derive_seed(master_seed, static_cast<std::uint64_t>(magnitude_index)) +
                    static_cast<std::uint64_t>(trial_index));
}

TrialResult run_epoch(const ScenarioConfig& config, double fault_magnitude_m,
                      std::uint64_t trial_seed, bool timing) {
  const int n = static_cast<int>(config.constellation.size());
  RandomStream rng(trial_seed);

  double epoch = config.fixed_epoch_s;
  if (config.epoch_sampling == EpochSampling::uniform_over_period) {
    double t_max = 0.0;
    for (const auto& el : config.constellation)
      t_max = std::max(t_max, orbital_period_s(el));
    epoch = rng.uniform() * t_max;
  }

  FaultScenario scenario;
  scenario.fault_ratio = config.fault_ratio;
  if (config.n_faults == 1) {
    int fault_sat = rng.uniform_int(n);
    scenario.fault_satellites = {fault_sat};
    scenario.bias_m = {fault_magnitude_m};
  }

  RandomStream eph_rng = rng.derive(1);
  scenario.seed = derive_seed(trial_seed, 2);

  ConstellationState state =
      propagate_constellation(config.constellation, epoch, config.sigma_r_m, eph_rng);
  LinkGraph graph = build_link_graph(state, config.body);
  MeasurementSet meas = inject_faults(graph, state.truth_km, scenario, config.sigma_m_m);
  meas.epoch_s = epoch;

  TrialResult result;
  if (!scenario.fault_satellites.empty()) result.fault_satellite = scenario.fault_satellites[0];
  result.verdicts.resize(config.detectors.size());
  result.runtime_ms.assign(config.detectors.size(), 0.0);

  const bool graph_empty = meas.edges.empty();
  std::vector<SubgraphRecord> subgraphs;
  bool edm_wanted = false;
  for (Method m : config.detectors) edm_wanted |= (m == Method::edm);
  if (edm_wanted && !graph_empty) subgraphs = epoch_subgraphs(config, graph);

  static ThresholdCache shared_cache;

  for (size_t d = 0; d < config.detectors.size(); ++d) {
    Method method = config.detectors[d];
    auto& verdicts = result.verdicts[d];
    verdicts.resize(config.alpha_grid.size());

    auto t0 = std::chrono::steady_clock::now();
    if (graph_empty) continue;  // trial unavailable for every method

    switch (method) {
      case Method::ephemeris_comparison: {
        for (size_t a = 0; a < config.alpha_grid.size(); ++a) {
          DetectionReport rep = detect_ephemeris_comparison(
              meas, state, config.sigma_r_m, config.sigma_m_m, config.alpha_grid[a],
              &shared_cache);
          verdicts[a].available = true;
          if (rep.fault) verdicts[a].identified = rep.identified_fault;
        }
        break;
      }
      case Method::data_snooping: {
        SnoopingStats stats = snooping_statistics(meas, state, config.sigma_m_m);
        int best_sat = -1;
        double best = -1.0;
        for (int s = 0; s < n; ++s) {
          if (!stats.testable[s]) continue;
          if (std::abs(stats.w[s]) > best) {
            best = std::abs(stats.w[s]);
            best_sat = s;
          }
        }
        for (size_t a = 0; a < config.alpha_grid.size(); ++a) {
          verdicts[a].available = best_sat >= 0;
          double thr = std::sqrt(chi2_quantile(1.0 - config.alpha_grid[a], 1.0));
          if (best_sat >= 0 && best >= thr) verdicts[a].identified = best_sat;
        }
        break;
      }
      case Method::edm: {
        EdmDetectorConfig ecfg;
        ecfg.eta_alpha = config.eta_alpha;
        ecfg.use_augmentation = config.use_augmentation;
        ecfg.sigma_m = config.sigma_m_m;
        ecfg.sigma_r = config.sigma_r_m;
        if (subgraphs.empty()) break;  // unavailable at every alpha
        ecfg.alpha = config.alpha_grid[0];
        std::vector<CliqueStatistic> stats = clique_statistics(meas, state, subgraphs, ecfg);
        for (size_t a = 0; a < config.alpha_grid.size(); ++a) {
          ecfg.alpha = config.alpha_grid[a];
          DetectionReport rep = edm_report_from_stats(stats, n, ecfg);
          bool any_testable = false;
          for (const auto& t : rep.per_satellite) any_testable |= t.testable;
          verdicts[a].available = any_testable;
          if (rep.fault && rep.identified_fault) verdicts[a].identified = rep.identified_fault;
        }
        break;
      }
    }
    if (timing) {
      auto t1 = std::chrono::steady_clock::now();
      result.runtime_ms[d] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
  }
  return result;
}

namespace {

struct CellCounts {
  long tp = 0, fn = 0, fp = 0, tn = 0;
  long trials_used = 0;
  double runtime_ms_sum = 0.0;
};

void accumulate(CellCounts& cell, const TrialVerdict& v, std::optional<int> fault_sat, int n,
                double runtime_ms) {
  if (!v.available) return;
  ++cell.trials_used;
  cell.runtime_ms_sum += runtime_ms;
  for (int s = 0; s < n; ++s) {
    bool predicted = v.identified && *v.identified == s;
    bool actual = fault_sat && *fault_sat == s;
    if (predicted && actual)
      ++cell.tp;
    else if (!predicted && actual)
      ++cell.fn;
    else if (predicted && !actual)
      ++cell.fp;
    else
      ++cell.tn;
  }
}

}  // namespace

std::vector<MetricsRow> run_montecarlo(const ScenarioConfig& config, bool timing) {
  config.validate();
  const int n = static_cast<int>(config.constellation.size());
  std::vector<double> magnitudes =
      config.n_faults == 0 ? std::vector<double>{0.0} : config.fault_magnitudes_m;

  const size_t n_methods = config.detectors.size();
  const size_t n_alphas = config.alpha_grid.size();
  const size_t n_mags = magnitudes.size();

  // cells[mag][method][alpha]
  std::vector<CellCounts> cells(n_mags * n_methods * n_alphas);
  auto cell_at = [&](size_t mg, size_t d, size_t a) -> CellCounts& {
    return cells[(mg * n_methods + d) * n_alphas + a];
  };

  int n_threads = config.threads > 0
                      ? config.threads
                      : std::max(1u, std::thread::hardware_concurrency());

  for (size_t mg = 0; mg < n_mags; ++mg) {
    std::vector<TrialResult> results(config.trials);
    auto worker = [&](int first, int step) {
      for (int t = first; t < config.trials; t += step)
        results[t] = run_epoch(config, magnitudes[mg],
                               trial_seed_for(config.seed, static_cast<int>(mg), t), timing);
    };
    if (n_threads <= 1) {
      worker(0, 1);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker, w, n_threads);
      for (auto& th : pool) th.join();
    }
    // Ordered reduction: results are merged by trial index, so thread count
    // cannot change any aggregate.
    for (int t = 0; t < config.trials; ++t) {
      const TrialResult& r = results[t];
      for (size_t d = 0; d < n_methods; ++d)
        for (size_t a = 0; a < n_alphas; ++a)
          accumulate(cell_at(mg, d, a), r.verdicts[d][a], r.fault_satellite, n,
                     r.runtime_ms[d]);
    }
  }

  std::vector<MetricsRow> rows;
  for (size_t d = 0; d < n_methods; ++d) {
    for (size_t mg = 0; mg < n_mags; ++mg) {
      for (size_t a = 0; a < n_alphas; ++a) {
        const CellCounts& c = cell_at(mg, d, a);
        MetricsRow row;
        row.method = method_name(config.detectors[d]);
        row.fault_magnitude_m = magnitudes[mg];
        row.fault_ratio = config.fault_ratio;
        row.alpha = config.alpha_grid[a];
        row.sigma_r_m = config.sigma_r_m;
        if (c.tp + c.fn > 0) row.p_md = static_cast<double>(c.fn) / (c.tp + c.fn);
        if (c.fp + c.tn > 0) row.p_fa = static_cast<double>(c.fp) / (c.fp + c.tn);
        row.trials = c.trials_used;
        row.mean_runtime_ms = c.trials_used > 0 ? c.runtime_ms_sum / c.trials_used : 0.0;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "method,fault_magnitude_m,fault_ratio,alpha,sigma_r_m,p_md,p_fa,trials,mean_runtime_ms\n";
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
  };
  for (const auto& r : rows) {
    os << r.method << ',' << num(r.fault_magnitude_m) << ',' << num(r.fault_ratio) << ','
       << num(r.alpha) << ',' << num(r.sigma_r_m) << ',';
    if (r.p_md) os << num(*r.p_md);
    os << ',';
    if (r.p_fa) os << num(*r.p_fa);
    os << ',' << r.trials << ',';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", r.mean_runtime_ms);
    os << buf << '\n';
  }
  return os.str();
}

}  // namespace isrfd
