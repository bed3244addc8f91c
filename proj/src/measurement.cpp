#include "isrfd/measurement.hpp"

#include <cmath>

#include "isrfd/errors.hpp"

namespace isrfd {

double simulate_clock_free(const Eigen::Vector3d& xi_km, const Eigen::Vector3d& xj_km,
                           double fi_m, double fj_m, double sigma_m, RandomStream& rng) {
  if (!(sigma_m > 0.0)) throw ConfigError("simulate_clock_free: sigma_m must be > 0");
  double range_m = (xi_km - xj_km).norm() * 1000.0;
  return range_m + fi_m - fj_m + rng.gaussian(sigma_m);
}

double simulate_geometry_free(double tau_i_s, double tau_j_s, double fi_m, double fj_m,
                              double sigma_c_m, RandomStream& rng) {
  if (!(sigma_c_m > 0.0)) throw ConfigError("simulate_geometry_free: sigma_c must be > 0");
  constexpr double c_m_s = 299792458.0;
  return c_m_s * (tau_j_s - tau_i_s) + fi_m + fj_m + rng.gaussian(sigma_c_m);
}

MeasurementSet inject_faults(const LinkGraph& graph,
                             const std::vector<Eigen::Vector3d>& truth_km,
                             const FaultScenario& scenario, double sigma_m) {
  const int n = graph.size();
  if (static_cast<int>(truth_km.size()) != n)
    throw ConfigError("inject_faults: position count does not match graph");
  if (!(scenario.fault_ratio >= 0.0 && scenario.fault_ratio <= 1.0))
    throw ConfigError("inject_faults: fault_ratio must be in [0, 1]");
  if (scenario.bias_m.size() != scenario.fault_satellites.size())
    throw ConfigError("inject_faults: bias_m size must match fault_satellites");
  std::vector<double> bias_of(n, 0.0);
  std::vector<bool> is_fault(n, false);
  for (size_t k = 0; k < scenario.fault_satellites.size(); ++k) {
    int s = scenario.fault_satellites[k];
    if (s < 0 || s >= n) throw ConfigError("inject_faults: fault satellite index out of range");
    is_fault[s] = true;
    bias_of[s] = scenario.bias_m[k];
  }

  // Separate substreams: a fault_ratio of 0 must reproduce the no-fault
  // measurement noise exactly.
  RandomStream noise_rng(derive_seed(scenario.seed, 0));
  RandomStream fault_rng(derive_seed(scenario.seed, 1));

  MeasurementSet out;
  out.n_sats = n;
  for (const auto& e : graph.edges()) {
    if (e.provenance != EdgeProvenance::measured) continue;
    double fi = 0.0, fj = 0.0;
    std::optional<int> corrupted;
    if (is_fault[e.i] && fault_rng.uniform() < scenario.fault_ratio) {
      fi = bias_of[e.i];  // lower index carries the transmitter role: +b
      corrupted = e.i;
    }
    if (is_fault[e.j] && fault_rng.uniform() < scenario.fault_ratio) {
      fj = bias_of[e.j];  // receiver role: enters as -b
      if (!corrupted) corrupted = e.j;
    }
    MeasurementEdge me;
    me.i = e.i;
    me.j = e.j;
    me.sigma_m = sigma_m;
    me.range_m = simulate_clock_free(truth_km[e.i], truth_km[e.j], fi, fj, sigma_m, noise_rng);
    me.corrupted_by = corrupted;
    out.edges.push_back(me);
  }
  return out;
}

}  // namespace isrfd
