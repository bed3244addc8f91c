#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "isrfd/graph.hpp"
#include "isrfd/rng.hpp"

namespace isrfd {

/// Clock-jump fault injection settings for one epoch.
///
/// A clock delay dt at a satellite biases its dual one-way ranges by
/// b = c*dt/2. For an edge (i, j) stored with i < j, the lower-index
/// satellite takes the transmitter role: its bias enters with +b, the
/// higher-index side with -b.
struct FaultScenario {
  std::vector<int> fault_satellites;
  std::vector<double> bias_m;  // one magnitude per fault satellite
  double fault_ratio = 1.0;    // per-edge probability that an incident fault fires
  std::uint64_t seed = 0;
};

struct MeasurementEdge {
  int i = 0;  // i < j
  int j = 0;
  double range_m = 0.0;
  double sigma_m = 0.0;
  std::optional<int> corrupted_by;  // set when a fault bias actually fired
};

/// Clock-free range observations for one epoch.
struct MeasurementSet {
  double epoch_s = 0.0;
  int n_sats = 0;
  std::vector<MeasurementEdge> edges;
};

/// Clock-free combination: ||x_i - x_j|| + f_i - f_j + w, w ~ N(0, sigma_m^2).
/// Positions in km, fault biases and result in meters.
double simulate_clock_free(const Eigen::Vector3d& xi_km, const Eigen::Vector3d& xj_km,
                           double fi_m, double fj_m, double sigma_m, RandomStream& rng);

/// Geometry-free combination: c*(tau_j - tau_i) + f_i + f_j + w. Note the
/// fault signs: a jump that enters the clock-free combination as f_i - f_j
/// enters here as f_i + f_j.
double simulate_geometry_free(double tau_i_s, double tau_j_s, double fi_m, double fj_m,
                              double sigma_c_m, RandomStream& rng);

/// Generate the epoch's measurement set over the graph's measured edges.
/// Each edge incident to a fault satellite is biased independently with
/// probability fault_ratio. Noise and fault coin flips are drawn from
/// separate substreams of scenario.seed, so a fault_ratio of zero reproduces
/// the no-fault measurement set exactly.
MeasurementSet inject_faults(const LinkGraph& graph,
                             const std::vector<Eigen::Vector3d>& truth_km,
                             const FaultScenario& scenario, double sigma_m);

}  // namespace isrfd
