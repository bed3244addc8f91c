#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isrfd/detect.hpp"
#include "isrfd/orbit.hpp"

namespace isrfd {

enum class EpochSampling { fixed, uniform_over_period };

/// Full Monte Carlo scenario. Key names in the JSON schema carry explicit
/// units (sigma_m_m, phi_max_deg, ...).
struct ScenarioConfig {
  BodyModel body;
  std::vector<OrbitalElements> constellation;
  double sigma_m_m = 0.5;
  double sigma_r_m = 1.0;
  std::vector<double> fault_magnitudes_m;
  double fault_ratio = 1.0;
  int n_faults = 1;  // 0 or 1
  std::vector<double> alpha_grid;
  double eta_alpha = 1.5;
  std::vector<Method> detectors;
  int trials = 500;
  std::uint64_t seed = 1;
  EpochSampling epoch_sampling = EpochSampling::uniform_over_period;
  double fixed_epoch_s = 0.0;
  bool use_augmentation = false;
  int max_subgraphs = 0;  // 0 = unlimited
  double power_gamma = 0.8;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

/// Parse and validate a scenario file. Malformed JSON or missing keys raise
/// ConfigError with the offending location/key in the message.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& json_text, const std::string& origin = "<string>");
/// Scenario re-serialized with the canonical key names and defaults resolved.
std::string normalized_config_json(const ScenarioConfig& config);

struct MetricsRow {
  std::string method;
  double fault_magnitude_m = 0.0;
  double fault_ratio = 0.0;
  double alpha = 0.0;
  double sigma_r_m = 0.0;
  std::optional<double> p_md;
  std::optional<double> p_fa;
  long trials = 0;  // available trials aggregated into this cell
  double mean_runtime_ms = 0.0;
};

/// Outcome of one detector x alpha on one trial.
struct TrialVerdict {
  bool available = false;
  std::optional<int> identified;
};

struct TrialResult {
  std::optional<int> fault_satellite;
  /// Indexed [detector][alpha] in config order.
  std::vector<std::vector<TrialVerdict>> verdicts;
  std::vector<double> runtime_ms;  // per detector, 0 unless timing enabled
};

/// One Monte Carlo trial: sample the epoch (uniform within the largest
/// orbital period when configured), pick the fault satellite, build the
/// graph, measurements and subgraphs, and run every configured detector at
/// every alpha. The trial seed fixes everything.
TrialResult run_epoch(const ScenarioConfig& config, double fault_magnitude_m,
                      std::uint64_t trial_seed, bool timing = false);

/// Trial seeds are derived as
///   trial_seed = splitmix64(derive_seed(config.seed, magnitude_index) + trial_index)
/// so parallel and serial execution see identical streams.
std::uint64_t trial_seed_for(std::uint64_t master_seed, int magnitude_index, int trial_index);

/// Aggregate P_md / P_fa per (method, magnitude, alpha) cell. Rows come out
/// in canonical order and are fully reproducible from the seed. Timing is
/// opt-in: without it the runtime column is a deterministic 0.
std::vector<MetricsRow> run_montecarlo(const ScenarioConfig& config, bool timing = false);

/// Header: method,fault_magnitude_m,fault_ratio,alpha,sigma_r_m,p_md,p_fa,trials,mean_runtime_ms
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

/// Subgraph list for the epoch per the scenario's augmentation setting.
std::vector<SubgraphRecord> epoch_subgraphs(const ScenarioConfig& config, const LinkGraph& graph);

}  // namespace isrfd
