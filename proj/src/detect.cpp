#include "isrfd/detect.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "isrfd/errors.hpp"

namespace isrfd {

const char* method_name(Method m) {
  switch (m) {
    case Method::ephemeris_comparison: return "ephemeris_comparison";
    case Method::data_snooping: return "data_snooping";
    case Method::edm: return "edm";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  if (name == "ephemeris_comparison") return Method::ephemeris_comparison;
  if (name == "data_snooping") return Method::data_snooping;
  if (name == "edm") return Method::edm;
  return std::nullopt;
}

namespace {

double ephemeris_range_m(const ConstellationState& state, int i, int j) {
  return (state.ephemeris_km[i] - state.ephemeris_km[j]).norm() * 1000.0;
}

}  // namespace

// --- ephemeris comparison ----------------------------------------------------

EphemerisStats ephemeris_statistics(const MeasurementSet& meas, const ConstellationState& state,
                                    double sigma_r, double sigma_m) {
  const int n = meas.n_sats;
  double var = 2.0 * sigma_r * sigma_r + sigma_m * sigma_m;
  if (!(var > 0.0)) throw ConfigError("ephemeris_statistics: zero residual variance");
  EphemerisStats stats;
  stats.T.assign(n, 0.0);
  stats.link_count.assign(n, 0);
  for (const auto& e : meas.edges) {
    double g = e.range_m - ephemeris_range_m(state, e.i, e.j);
    double t = g * g / var;
    stats.T[e.i] += t;
    stats.T[e.j] += t;
    ++stats.link_count[e.i];
    ++stats.link_count[e.j];
  }
  return stats;
}

DetectionReport detect_ephemeris_comparison(const MeasurementSet& meas,
                                            const ConstellationState& state, double sigma_r,
                                            double sigma_m, double alpha, ThresholdCache* cache) {
  EphemerisStats stats = ephemeris_statistics(meas, state, sigma_r, sigma_m);
  const int n = meas.n_sats;

  DetectionReport rep;
  rep.method = Method::ephemeris_comparison;
  rep.per_satellite.resize(n);
  bool any_fault = false;
  for (int s = 0; s < n; ++s) {
    SatelliteTest& t = rep.per_satellite[s];
    t.sat = s;
    t.statistic = stats.T[s];
    t.testable = stats.link_count[s] >= 1;
    if (!t.testable) {
      rep.notes.push_back("satellite " + std::to_string(s) + " has no links; excluded");
      continue;
    }
    t.threshold = cache ? cache->correlated_threshold(stats.link_count[s], sigma_r, sigma_m, alpha)
                        : correlated_threshold(stats.link_count[s], sigma_r, sigma_m, alpha);
    t.normalized = t.statistic / t.threshold;
    if (t.normalized > 1.0) any_fault = true;
  }
  rep.fault = any_fault;
  if (any_fault) {
    double best = -1.0;
    for (int s = 0; s < n; ++s) {
      if (!rep.per_satellite[s].testable) continue;
      double score = stats.T[s] / std::sqrt(static_cast<double>(stats.link_count[s]));
      if (score > best) {
        best = score;
        rep.identified_fault = s;
      }
    }
  }
  return rep;
}

// --- data snooping -----------------------------------------------------------

SnoopingStats snooping_statistics(const MeasurementSet& meas, const ConstellationState& state,
                                  double sigma_m) {
  const int n = meas.n_sats;
  const int m = static_cast<int>(meas.edges.size());
  if (m < 1) throw ConfigError("snooping_statistics: need at least one measurement");
  if (!(sigma_m > 0.0)) throw ConfigError("snooping_statistics: sigma_m must be > 0");

  // Linearized range model around the ephemeris. Row per edge: +u on the
  // lower-index block, -u on the higher-index block.
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, 3 * n);
  Eigen::VectorXd y(m);
  for (int e = 0; e < m; ++e) {
    const auto& me = meas.edges[e];
    Eigen::Vector3d diff = (state.ephemeris_km[me.i] - state.ephemeris_km[me.j]) * 1000.0;
    double r = diff.norm();
    Eigen::Vector3d u = diff / r;
    h.block<1, 3>(e, 3 * me.i) = u.transpose();
    h.block<1, 3>(e, 3 * me.j) = -u.transpose();
    y(e) = me.range_m - r;
  }

  // Orthogonal projector onto the complement of col(H). The range-network
  // Jacobian has at least a 6-dimensional null space (rigid-body motions), so
  // the normal matrix is built through a rank-revealing decomposition rather
  // than a plain inverse; P_perp H = 0 still holds.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  double tol = sv.size() ? sv(0) * 1e-10 : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  Eigen::MatrixXd q = svd.matrixU().leftCols(rank);  // orthonormal basis of col(H)

  Eigen::VectorXd py = y - q * (q.transpose() * y);

  SnoopingStats stats;
  stats.w.assign(n, 0.0);
  stats.gain.assign(n, 0.0);
  stats.testable.assign(n, false);
  const double inv_var = 1.0 / (sigma_m * sigma_m);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
    double c_norm2 = 0.0;
    for (int e = 0; e < m; ++e) {
      const auto& me = meas.edges[e];
      if (me.i == k)
        c(e) = 1.0;
      else if (me.j == k)
        c(e) = -1.0;
      c_norm2 += c(e) * c(e);
    }
    if (c_norm2 == 0.0) continue;  // no links this epoch
    Eigen::VectorXd qc = q.transpose() * c;
    double cpc = c_norm2 - qc.squaredNorm();  // c^T P_perp c
    if (cpc <= 1e-9 * c_norm2) continue;      // c inside col(H): untestable
    stats.gain[k] = cpc * inv_var;
    stats.w[k] = c.dot(py) / (sigma_m * std::sqrt(cpc));
    stats.testable[k] = true;
  }
  return stats;
}

DetectionReport detect_data_snooping(const MeasurementSet& meas, const ConstellationState& state,
                                     double sigma_m, double alpha) {
  SnoopingStats stats = snooping_statistics(meas, state, sigma_m);
  const int n = meas.n_sats;
  const double threshold = std::sqrt(chi2_quantile(1.0 - alpha, 1.0));

  DetectionReport rep;
  rep.method = Method::data_snooping;
  rep.per_satellite.resize(n);
  double best = -1.0;
  int best_sat = -1;
  for (int s = 0; s < n; ++s) {
    SatelliteTest& t = rep.per_satellite[s];
    t.sat = s;
    t.statistic = std::abs(stats.w[s]);
    t.threshold = threshold;
    t.testable = stats.testable[s];
    if (!t.testable) {
      rep.notes.push_back("satellite " + std::to_string(s) + " untestable this epoch");
      continue;
    }
    t.normalized = t.statistic / threshold;
    if (t.statistic > best) {
      best = t.statistic;
      best_sat = s;
    }
  }
  if (best_sat >= 0 && best >= threshold) {
    rep.fault = true;
    rep.identified_fault = best_sat;
  }
  return rep;
}

// --- EDM ----------------------------------------------------------------------

std::vector<CliqueStatistic> clique_statistics(const MeasurementSet& meas,
                                               const ConstellationState& state,
                                               const std::vector<SubgraphRecord>& subgraphs,
                                               const EdmDetectorConfig& config,
                                               std::vector<std::string>* notes) {
  const int n = meas.n_sats;
  Eigen::MatrixXd range(n, n);
  range.setConstant(-1.0);
  for (const auto& e : meas.edges) {
    range(e.i, e.j) = e.range_m;
    range(e.j, e.i) = e.range_m;
  }

  const double sigma_computed = std::sqrt(2.0) * config.sigma_r;
  std::vector<CliqueStatistic> out;
  out.reserve(subgraphs.size());
  for (const auto& rec : subgraphs) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(5, 5);
    Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(5, 5);
    bool usable = true;
    for (int a = 0; a < 5 && usable; ++a) {
      for (int b = a + 1; b < 5; ++b) {
        int gi = rec.members[a], gj = rec.members[b];
        bool measured = rec.edge_provenance[pair_index(a, b)] == EdgeProvenance::measured;
        double r, s;
        if (measured) {
          r = range(gi, gj);
          s = config.sigma_m;
          if (r < 0.0) {
            usable = false;  // record claims a measured edge the set does not carry
            break;
          }
        } else {
          r = ephemeris_range_m(state, gi, gj);
          s = sigma_computed;
        }
        d(a, b) = d(b, a) = r;
        sig(a, b) = sig(b, a) = s;
      }
    }
    if (!usable) {
      if (notes) notes->push_back("subgraph missing a measured range; dropped");
      continue;
    }
    CliqueStatistic cs;
    cs.members = rec.members;
    try {
      EdmTestResult res = test_statistic_n5(d, sig);
      cs.gamma = res.gamma;
      cs.s2 = res.s2;
      cs.scaled = res.scaled;
    } catch (const NumericalError&) {
      if (notes) {
        std::ostringstream os;
        os << "degenerate subgraph {" << cs.members[0];
        for (int t = 1; t < 5; ++t) os << "," << cs.members[t];
        os << "} dropped";
        notes->push_back(os.str());
      }
      continue;
    }
    out.push_back(cs);
  }
  return out;
}

DetectionReport edm_report_from_stats(const std::vector<CliqueStatistic>& stats, int n_sats,
                                      const EdmDetectorConfig& config) {
  if (!(config.eta_alpha >= 1.0)) throw ConfigError("edm: eta_alpha must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ConfigError("edm: alpha in (0, 1)");

  DetectionReport rep;
  rep.method = Method::edm;
  rep.per_satellite.resize(n_sats);

  std::vector<double> excl_sum(n_sats, 0.0);
  std::vector<int> excl_count(n_sats, 0);
  std::vector<int> incl_count(n_sats, 0);
  double total = 0.0;
  for (const auto& cs : stats) total += cs.scaled;
  for (int s = 0; s < n_sats; ++s) {
    excl_sum[s] = total;
    excl_count[s] = static_cast<int>(stats.size());
  }
  for (const auto& cs : stats) {
    for (int m : cs.members) {
      excl_sum[m] -= cs.scaled;
      --excl_count[m];
      ++incl_count[m];
    }
  }

  bool any_fault = false;
  for (int s = 0; s < n_sats; ++s) {
    SatelliteTest& t = rep.per_satellite[s];
    t.sat = s;
    t.testable = excl_count[s] >= 1;
    if (!t.testable) {
      rep.notes.push_back("satellite " + std::to_string(s) +
                          " has no excluding subgraphs; untestable");
      continue;
    }
    t.statistic = excl_sum[s];
    t.threshold = config.eta_alpha *
                  chi2_quantile(1.0 - config.alpha, static_cast<double>(excl_count[s]));
    t.normalized = t.statistic / t.threshold;
    if (t.normalized >= 1.0) any_fault = true;
  }
  rep.fault = any_fault;
  if (any_fault) {
    // The faulty satellite is the one whose exclusion sum stays nominal.
    // Restrict the argmin to satellites that pass their own exclusion test;
    // if none qualify the fault cannot be attributed.
    double best = std::numeric_limits<double>::infinity();
    int best_sat = -1;
    for (int s = 0; s < n_sats; ++s) {
      const SatelliteTest& t = rep.per_satellite[s];
      if (!t.testable || t.normalized >= 1.0) continue;
      if (incl_count[s] == 0) continue;  // fault on an uncovered satellite is invisible
      if (t.normalized < best) {
        best = t.normalized;
        best_sat = s;
      }
    }
    if (best_sat >= 0) {
      rep.identified_fault = best_sat;
    } else {
      rep.unattributable = true;
      rep.notes.push_back("fault detected but unattributable this epoch");
    }
  }
  return rep;
}

DetectionReport detect_edm(const MeasurementSet& meas, const ConstellationState& state,
                           const std::vector<SubgraphRecord>& subgraphs,
                           const EdmDetectorConfig& config) {
  std::vector<std::string> notes;
  std::vector<CliqueStatistic> stats = clique_statistics(meas, state, subgraphs, config, &notes);
  DetectionReport rep = edm_report_from_stats(stats, meas.n_sats, config);
  rep.notes.insert(rep.notes.begin(), notes.begin(), notes.end());
  return rep;
}

// --- MDB -----------------------------------------------------------------------

namespace {

/// Unit-bias fault matrix for satellite `local` inside a 5-node subgraph,
/// with the lower-global-index transmitter-role sign convention. A clock
/// jump only shows on measured edges; computed pairs stay zero.
Eigen::MatrixXd unit_fault_matrix(const SubgraphRecord& rec, int local) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(5, 5);
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) {
      if (a != local && b != local) continue;
      if (rec.edge_provenance[pair_index(a, b)] != EdgeProvenance::measured) continue;
      // members are sorted ascending, so `a` is the lower global index.
      double v = (a == local) ? 1.0 : -1.0;
      f(a, b) = f(b, a) = v;
    }
  }
  return f;
}

}  // namespace

std::vector<std::optional<double>> compute_mdbs(Method method, const MeasurementSet& meas,
                                                const ConstellationState& state,
                                                const std::vector<SubgraphRecord>& subgraphs,
                                                double sigma_r, double sigma_m, double alpha,
                                                double power_gamma) {
  const int n = meas.n_sats;
  std::vector<std::optional<double>> out(n);

  if (method == Method::ephemeris_comparison) {
    double lambda_bar = solve_noncentrality(alpha, power_gamma, 1.0);
    double mdb = std::sqrt(lambda_bar * (2.0 * sigma_r * sigma_r + sigma_m * sigma_m));
    std::vector<int> links(n, 0);
    for (const auto& e : meas.edges) {
      ++links[e.i];
      ++links[e.j];
    }
    for (int s = 0; s < n; ++s)
      if (links[s] >= 1) out[s] = mdb;
    return out;
  }

  if (method == Method::data_snooping) {
    SnoopingStats stats = snooping_statistics(meas, state, sigma_m);
    double lambda_bar = solve_noncentrality(alpha, power_gamma, 1.0);
    for (int s = 0; s < n; ++s)
      if (stats.testable[s]) out[s] = std::sqrt(lambda_bar / stats.gain[s]);
    return out;
  }

  // EDM: best subgraph (smallest MDB) containing each satellite.
  EdmDetectorConfig cfg;
  cfg.alpha = alpha;
  cfg.sigma_m = sigma_m;
  cfg.sigma_r = sigma_r;
  const double sigma_computed = std::sqrt(2.0) * sigma_r;
  Eigen::MatrixXd range(n, n);
  range.setConstant(-1.0);
  for (const auto& e : meas.edges) {
    range(e.i, e.j) = e.range_m;
    range(e.j, e.i) = e.range_m;
  }
  for (const auto& rec : subgraphs) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(5, 5);
    Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(5, 5);
    bool usable = true;
    for (int a = 0; a < 5 && usable; ++a) {
      for (int b = a + 1; b < 5; ++b) {
        int gi = rec.members[a], gj = rec.members[b];
        bool measured = rec.edge_provenance[pair_index(a, b)] == EdgeProvenance::measured;
        double r = measured ? range(gi, gj) : ephemeris_range_m(state, gi, gj);
        if (measured && r < 0.0) {
          usable = false;
          break;
        }
        d(a, b) = d(b, a) = r;
        sig(a, b) = sig(b, a) = measured ? sigma_m : sigma_computed;
      }
    }
    if (!usable) continue;
    GcedmDecomposition dec;
    double s2;
    try {
      dec = decompose_gcedm(gcedm(build_edm(d)));
      s2 = predicted_scale(d, sig);
    } catch (const NumericalError&) {
      continue;
    }
    for (int local = 0; local < 5; ++local) {
      // Only faults that touch a measured edge inside the subgraph are seen.
      bool touches_measured = false;
      for (int o = 0; o < 5 && !touches_measured; ++o) {
        if (o == local) continue;
        int a = std::min(local, o), b = std::max(local, o);
        touches_measured = rec.edge_provenance[pair_index(a, b)] == EdgeProvenance::measured;
      }
      if (!touches_measured) continue;
      double raw = noncentrality_raw(d, unit_fault_matrix(rec, local), dec);
      if (!(raw > 0.0)) continue;
      double mdb = mdb_edm(alpha, power_gamma, s2, raw);
      int sat = rec.members[local];
      if (!out[sat] || mdb < *out[sat]) out[sat] = mdb;
    }
  }
  return out;
}

}  // namespace isrfd
