#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "isrfd/detect.hpp"
#include "isrfd/errors.hpp"
#include "isrfd/sim.hpp"
#include "json.hpp"

namespace {

using namespace isrfd;

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  bool dump_config = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Scenario JSON file")->required();
  cmd->add_option("--out", args.out_path, "Output file (stdout when omitted)");
  cmd->add_option("--seed", args.seed, "Override the scenario seed");
  cmd->add_option("--trials", args.trials, "Override the trial count");
  cmd->add_flag("--dump-config", args.dump_config,
                "Print the normalized scenario JSON and exit");
}

ScenarioConfig load_with_overrides(const CommonArgs& args) {
  ScenarioConfig cfg = load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.trials) cfg.trials = *args.trials;
  return cfg;
}

void write_output(const CommonArgs& args, const std::string& text) {
  if (args.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(args.out_path);
  if (!f) throw ConfigError("cannot open output file: " + args.out_path);
  f << text;
}

int maybe_dump_config(const CommonArgs& args) {
  std::cout << normalized_config_json(load_with_overrides(args)) << "\n";
  return 0;
}

/// Epoch pipeline shared by `simulate`, `cliques` and `mdb`.
struct EpochData {
  ConstellationState state;
  LinkGraph graph = LinkGraph(2);
  MeasurementSet meas;
  std::vector<SubgraphRecord> subgraphs;
  std::optional<int> fault_sat;
};

EpochData build_epoch(const ScenarioConfig& cfg, double epoch_s, double fault_magnitude) {
  RandomStream rng(cfg.seed);
  FaultScenario scenario;
  scenario.fault_ratio = cfg.fault_ratio;
  if (cfg.n_faults == 1) {
    scenario.fault_satellites = {rng.uniform_int(static_cast<int>(cfg.constellation.size()))};
    scenario.bias_m = {fault_magnitude};
  }
  RandomStream eph_rng = rng.derive(1);
  scenario.seed = derive_seed(cfg.seed, 2);

  EpochData d;
  d.state = propagate_constellation(cfg.constellation, epoch_s, cfg.sigma_r_m, eph_rng);
  d.graph = build_link_graph(d.state, cfg.body);
  d.meas = inject_faults(d.graph, d.state.truth_km, scenario, cfg.sigma_m_m);
  d.meas.epoch_s = epoch_s;
  d.subgraphs = epoch_subgraphs(cfg, d.graph);
  if (!scenario.fault_satellites.empty()) d.fault_sat = scenario.fault_satellites[0];
  return d;
}

nlohmann::json report_to_json(const DetectionReport& rep) {
  nlohmann::json j;
  j["method"] = method_name(rep.method);
  j["verdict"] = rep.fault ? "fault" : "no_fault";
  if (rep.identified_fault) j["identified_fault"] = *rep.identified_fault;
  j["unattributable"] = rep.unattributable;
  j["per_satellite"] = nlohmann::json::array();
  for (const auto& t : rep.per_satellite)
    j["per_satellite"].push_back({{"sat", t.sat},
                                  {"statistic", t.statistic},
                                  {"threshold", t.threshold},
                                  {"normalized", t.normalized},
                                  {"testable", t.testable}});
  j["notes"] = rep.notes;
  return j;
}

int cmd_simulate(const CommonArgs& args, double epoch_s, double magnitude, double alpha) {
  ScenarioConfig cfg = load_with_overrides(args);
  double mag = magnitude > 0.0 ? magnitude
                               : (cfg.fault_magnitudes_m.empty() ? 0.0 : cfg.fault_magnitudes_m[0]);
  double a = alpha > 0.0 ? alpha : cfg.alpha_grid[0];
  EpochData d = build_epoch(cfg, epoch_s, mag);

  nlohmann::json out;
  out["epoch_s"] = epoch_s;
  out["n_edges"] = d.meas.edges.size();
  out["n_subgraphs"] = d.subgraphs.size();
  if (d.fault_sat) out["fault_satellite"] = *d.fault_sat;
  out["reports"] = nlohmann::json::array();

  for (Method m : cfg.detectors) {
    DetectionReport rep;
    switch (m) {
      case Method::ephemeris_comparison:
        rep = detect_ephemeris_comparison(d.meas, d.state, cfg.sigma_r_m, cfg.sigma_m_m, a);
        break;
      case Method::data_snooping:
        rep = detect_data_snooping(d.meas, d.state, cfg.sigma_m_m, a);
        break;
      case Method::edm: {
        EdmDetectorConfig ecfg{a, cfg.eta_alpha, cfg.use_augmentation, cfg.sigma_m_m,
                               cfg.sigma_r_m};
        rep = detect_edm(d.meas, d.state, d.subgraphs, ecfg);
        break;
      }
    }
    rep.mdb_per_satellite = compute_mdbs(m, d.meas, d.state, d.subgraphs, cfg.sigma_r_m,
                                         cfg.sigma_m_m, a, cfg.power_gamma);
    nlohmann::json jr = report_to_json(rep);
    jr["mdb_m"] = nlohmann::json::array();
    for (const auto& v : rep.mdb_per_satellite)
      jr["mdb_m"].push_back(v ? nlohmann::json(*v) : nlohmann::json());
    out["reports"].push_back(jr);
    std::cerr << method_name(m) << ": " << (rep.fault ? "FAULT" : "no fault");
    if (rep.identified_fault) std::cerr << " at satellite " << *rep.identified_fault;
    std::cerr << "\n";
  }
  write_output(args, out.dump(2) + "\n");
  return 0;
}

int cmd_montecarlo(const CommonArgs& args, bool timing) {
  ScenarioConfig cfg = load_with_overrides(args);
  write_output(args, metrics_to_csv(run_montecarlo(cfg, timing)));
  return 0;
}

int cmd_cliques(const CommonArgs& args, double epoch_s) {
  ScenarioConfig cfg = load_with_overrides(args);
  RandomStream eph_rng = RandomStream(cfg.seed).derive(1);
  ConstellationState state =
      propagate_constellation(cfg.constellation, epoch_s, cfg.sigma_r_m, eph_rng);
  LinkGraph graph = build_link_graph(state, cfg.body);
  std::vector<SubgraphRecord> subs = epoch_subgraphs(cfg, graph);

  std::ostringstream os;
  os << "members,n_measured_edges\n";
  for (const auto& rec : subs) {
    int measured = 0;
    for (auto p : rec.edge_provenance)
      if (p == EdgeProvenance::measured) ++measured;
    os << rec.members[0];
    for (int t = 1; t < 5; ++t) os << ';' << rec.members[t];
    os << ',' << measured << '\n';
  }
  write_output(args, os.str());
  std::cerr << "epoch " << epoch_s << " s: " << graph.edge_count() << " edges, " << subs.size()
            << (cfg.use_augmentation ? " fault-detectable subgraphs\n" : " 5-cliques\n");
  return 0;
}

int cmd_mdb(const CommonArgs& args, double epoch_s, double alpha) {
  ScenarioConfig cfg = load_with_overrides(args);
  double a = alpha > 0.0 ? alpha : cfg.alpha_grid[0];
  EpochData d = build_epoch(cfg, epoch_s, 0.0);

  std::ostringstream os;
  os << "satellite,method,mdb_m\n";
  for (Method m : cfg.detectors) {
    auto mdbs = compute_mdbs(m, d.meas, d.state, d.subgraphs, cfg.sigma_r_m, cfg.sigma_m_m, a,
                             cfg.power_gamma);
    for (size_t s = 0; s < mdbs.size(); ++s) {
      os << s << ',' << method_name(m) << ',';
      if (mdbs[s]) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", *mdbs[s]);
        os << buf;
      }
      os << '\n';
    }
  }
  write_output(args, os.str());
  return 0;
}

int cmd_thresholds(const CommonArgs& args) {
  ScenarioConfig cfg = load_with_overrides(args);
  ThresholdCache cache;
  const int n = static_cast<int>(cfg.constellation.size());
  for (int l = 1; l <= n; ++l)
    for (double alpha : cfg.alpha_grid)
      cache.correlated_threshold(l, cfg.sigma_r_m, cfg.sigma_m_m, alpha);
  if (args.out_path.empty()) {
    std::ostringstream os;
    os << "l_i,alpha,ratio,critical_value\n";
    for (const auto& [l, alpha, ratio, value] : cache.rows())
      os << l << ',' << alpha << ',' << ratio << ',' << value << '\n';
    std::cout << os.str();
  } else {
    cache.save_csv(args.out_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Satellite clock-jump detection from inter-satellite ranges"};
  app.require_subcommand(1);

  CommonArgs sim_args, mc_args, cl_args, mdb_args, thr_args;
  double epoch_s = 0.0, magnitude = 0.0, alpha = 0.0;
  double cl_epoch = 0.0, mdb_epoch = 0.0, mdb_alpha = 0.0;
  bool timing = false;

  CLI::App* sim = app.add_subcommand("simulate", "Run one epoch and print detection reports");
  add_common(sim, sim_args);
  sim->add_option("--epoch", epoch_s, "Epoch time, seconds past element epoch");
  sim->add_option("--magnitude", magnitude, "Fault bias magnitude, m");
  sim->add_option("--alpha", alpha, "False alarm rate");

  CLI::App* mc = app.add_subcommand("montecarlo", "Run the Monte Carlo grid and emit CSV");
  add_common(mc, mc_args);
  mc->add_flag("--timing", timing,
               "Measure per-trial wall time (breaks byte-for-byte reproducibility)");

  CLI::App* cl = app.add_subcommand("cliques", "Dump the epoch's subgraph list");
  add_common(cl, cl_args);
  cl->add_option("--epoch", cl_epoch, "Epoch time, seconds past element epoch");

  CLI::App* mdb = app.add_subcommand("mdb", "Per-satellite minimum detectable bias table");
  add_common(mdb, mdb_args);
  mdb->add_option("--epoch", mdb_epoch, "Epoch time, seconds past element epoch");
  mdb->add_option("--alpha", mdb_alpha, "False alarm rate");

  CLI::App* thr = app.add_subcommand("thresholds", "Precompute the correlated threshold table");
  add_common(thr, thr_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      if (sim_args.dump_config) return maybe_dump_config(sim_args);
      return cmd_simulate(sim_args, epoch_s, magnitude, alpha);
    }
    if (mc->parsed()) {
      if (mc_args.dump_config) return maybe_dump_config(mc_args);
      return cmd_montecarlo(mc_args, timing);
    }
    if (cl->parsed()) {
      if (cl_args.dump_config) return maybe_dump_config(cl_args);
      return cmd_cliques(cl_args, cl_epoch);
    }
    if (mdb->parsed()) {
      if (mdb_args.dump_config) return maybe_dump_config(mdb_args);
      return cmd_mdb(mdb_args, mdb_epoch, mdb_alpha);
    }
    if (thr->parsed()) {
      if (thr_args.dump_config) return maybe_dump_config(thr_args);
      return cmd_thresholds(thr_args);
    }
  } catch (const isrfd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
