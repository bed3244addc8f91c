#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "isrfd/edm.hpp"
#include "isrfd/graph.hpp"
#include "isrfd/measurement.hpp"
#include "isrfd/orbit.hpp"
#include "isrfd/stats.hpp"

namespace isrfd {

enum class Method { ephemeris_comparison, data_snooping, edm };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct SatelliteTest {
  int sat = -1;
  double statistic = 0.0;
  double threshold = 0.0;
  double normalized = 0.0;  // statistic / threshold
  bool testable = true;     // false: no links / no excluding subgraphs this epoch
};

struct DetectionReport {
  Method method = Method::edm;
  std::vector<SatelliteTest> per_satellite;
  bool fault = false;
  std::optional<int> identified_fault;
  /// Fault verdict with no attributable satellite (no candidate passed its
  /// own exclusion test, or the winner is uncovered by any subgraph).
  bool unattributable = false;
  std::vector<std::optional<double>> mdb_per_satellite;
  std::vector<std::string> notes;
};

struct EdmDetectorConfig {
  double alpha = 0.01;
  double eta_alpha = 1.5;  // >= 1; inflates the chi-squared threshold
  bool use_augmentation = false;
  double sigma_m = 0.5;  // measured-edge noise, m
  double sigma_r = 1.0;  // per-axis ephemeris error, m
};

/// One subgraph's scaled statistic.
struct CliqueStatistic {
  std::array<int, 5> members{};
  double gamma = 0.0;
  double s2 = 0.0;
  double scaled = 0.0;
};

// --- ephemeris comparison -------------------------------------------------

struct EphemerisStats {
  std::vector<double> T;       // per-satellite sum of squared normalized residuals
  std::vector<int> link_count; // l_i
};

EphemerisStats ephemeris_statistics(const MeasurementSet& meas, const ConstellationState& state,
                                    double sigma_r, double sigma_m);

DetectionReport detect_ephemeris_comparison(const MeasurementSet& meas,
                                            const ConstellationState& state, double sigma_r,
                                            double sigma_m, double alpha,
                                            ThresholdCache* cache = nullptr);

// --- data snooping ----------------------------------------------------------

struct SnoopingStats {
  std::vector<double> w;        // Baarda w per satellite hypothesis
  std::vector<double> gain;     // c_k^T Sigma^-1 Pperp c_k
  std::vector<bool> testable;
};

SnoopingStats snooping_statistics(const MeasurementSet& meas, const ConstellationState& state,
                                  double sigma_m);

DetectionReport detect_data_snooping(const MeasurementSet& meas, const ConstellationState& state,
                                     double sigma_m, double alpha);

// --- EDM -------------------------------------------------------------------

/// Per-subgraph scaled statistics. Measured edges take sigma_m, computed
/// edges sqrt(2)*sigma_r; computed ranges come from the ephemeris positions.
/// Subgraphs with a degenerate scale are dropped (note appended when `notes`
/// is given).
std::vector<CliqueStatistic> clique_statistics(const MeasurementSet& meas,
                                               const ConstellationState& state,
                                               const std::vector<SubgraphRecord>& subgraphs,
                                               const EdmDetectorConfig& config,
                                               std::vector<std::string>* notes = nullptr);

/// Exclusion-sum test over precomputed clique statistics.
DetectionReport edm_report_from_stats(const std::vector<CliqueStatistic>& stats, int n_sats,
                                      const EdmDetectorConfig& config);

DetectionReport detect_edm(const MeasurementSet& meas, const ConstellationState& state,
                           const std::vector<SubgraphRecord>& subgraphs,
                           const EdmDetectorConfig& config);

// --- MDB --------------------------------------------------------------------

/// Per-satellite minimum detectable bias for the requested method at this
/// epoch. Untestable satellites get no entry. For the EDM method the value is
/// the best (smallest) MDB over the subgraphs containing the satellite.
std::vector<std::optional<double>> compute_mdbs(Method method, const MeasurementSet& meas,
                                                const ConstellationState& state,
                                                const std::vector<SubgraphRecord>& subgraphs,
                                                double sigma_r, double sigma_m, double alpha,
                                                double power_gamma);

}  // namespace isrfd
