#include "isrfd/orbit.hpp"

#include <algorithm>
#include <cmath>

#include "isrfd/errors.hpp"

namespace isrfd {

namespace {
constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
}  // namespace

void OrbitalElements::validate() const {
  if (!(a_km > 0.0)) throw ConfigError("orbital elements: a_km must be > 0");
  if (!(e >= 0.0 && e < 1.0)) throw ConfigError("orbital elements: e must be in [0, 1)");
  if (!(mu_km3_s2 > 0.0)) throw ConfigError("orbital elements: mu_km3_s2 must be > 0");
}

void BodyModel::validate() const {
  if (!(radius_km > 0.0)) throw ConfigError("body: radius_km must be > 0");
  if (!(mask_altitude_km >= 0.0)) throw ConfigError("body: mask_altitude_km must be >= 0");
  if (!(phi_max_deg > 0.0 && phi_max_deg <= 180.0))
    throw ConfigError("body: phi_max_deg must be in (0, 180]");
  if (!(mu_km3_s2 > 0.0)) throw ConfigError("body: mu_km3_s2 must be > 0");
}

double solve_kepler(double M_rad, double e, double tol) {
  if (!(e >= 0.0 && e < 1.0)) throw ConfigError("solve_kepler: e must be in [0, 1)");
  if (!(tol > 0.0)) throw ConfigError("solve_kepler: tol must be > 0");

  // Wrap the mean anomaly into [-pi, pi]; the solution wraps with it.
  double wraps = std::floor((M_rad + kPi) / (2.0 * kPi));
  double M = M_rad - 2.0 * kPi * wraps;

  double E = (e < 0.8) ? M : kPi * (M >= 0 ? 1.0 : -1.0);
  double lo = M - e, hi = M + e;
  for (int it = 0; it < 100; ++it) {
    double f = E - e * std::sin(E) - M;
    if (std::abs(f) <= tol) return E + 2.0 * kPi * wraps;
    if (f > 0)
      hi = std::min(hi, E);
    else
      lo = std::max(lo, E);
    double fp = 1.0 - e * std::cos(E);
    double step = f / fp;
    double En = E - step;
    if (!(En > lo && En < hi)) En = 0.5 * (lo + hi);  // Newton left the bracket
    E = En;
  }
  if (std::abs(E - e * std::sin(E) - M) <= tol) return E + 2.0 * kPi * wraps;
  throw NumericalError("solve_kepler: no convergence after 100 iterations");
}

double orbital_period_s(const OrbitalElements& el) {
  el.validate();
  return 2.0 * kPi * std::sqrt(el.a_km * el.a_km * el.a_km / el.mu_km3_s2);
}

Eigen::Vector3d propagate(const OrbitalElements& el, double t_s) {
  el.validate();
  double n = std::sqrt(el.mu_km3_s2 / (el.a_km * el.a_km * el.a_km));
  double M = deg2rad(el.M0_deg) + n * t_s;
  double E = solve_kepler(M, el.e);

  double cE = std::cos(E), sE = std::sin(E);
  // Perifocal coordinates straight from the eccentric anomaly.
  double xp = el.a_km * (cE - el.e);
  double yp = el.a_km * std::sqrt(1.0 - el.e * el.e) * sE;

  double ci = std::cos(deg2rad(el.i_deg)), si = std::sin(deg2rad(el.i_deg));
  double cO = std::cos(deg2rad(el.raan_deg)), sO = std::sin(deg2rad(el.raan_deg));
  double cw = std::cos(deg2rad(el.argp_deg)), sw = std::sin(deg2rad(el.argp_deg));

  Eigen::Vector3d out;
  out.x() = (cO * cw - sO * sw * ci) * xp + (-cO * sw - sO * cw * ci) * yp;
  out.y() = (sO * cw + cO * sw * ci) * xp + (-sO * sw + cO * cw * ci) * yp;
  out.z() = (sw * si) * xp + (cw * si) * yp;
  return out;
}

bool link_visible(const Eigen::Vector3d& xi_km, const Eigen::Vector3d& xj_km,
                  const BodyModel& body) {
  const double shell = body.radius_km + body.mask_altitude_km;
  const Eigen::Vector3d d = xj_km - xi_km;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return false;

  // Closest approach of the segment to the body center.
  double t = std::clamp(-xi_km.dot(d) / len2, 0.0, 1.0);
  if ((xi_km + t * d).norm() < shell) return false;

  const double phi_max = deg2rad(body.phi_max_deg);
  auto endpoint_ok = [&](const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
    Eigen::Vector3d los = to - from;
    Eigen::Vector3d nadir = -from;
    double c = los.dot(nadir) / (los.norm() * nadir.norm());
    return std::acos(std::clamp(c, -1.0, 1.0)) < phi_max;
  };
  return endpoint_ok(xi_km, xj_km) && endpoint_ok(xj_km, xi_km);
}

LinkGraph build_link_graph(const ConstellationState& state, const BodyModel& body) {
  const int n = static_cast<int>(state.truth_km.size());
  if (n < 2) throw ConfigError("build_link_graph: need at least 2 satellites");
  LinkGraph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (link_visible(state.truth_km[i], state.truth_km[j], body))
        g.add_edge(i, j, EdgeProvenance::measured);
  return g;
}

ConstellationState propagate_constellation(const std::vector<OrbitalElements>& constellation,
                                           double t_s, double sigma_r_m, RandomStream& rng) {
  ConstellationState state;
  state.epoch_s = t_s;
  state.sigma_r_m = sigma_r_m;
  state.truth_km.reserve(constellation.size());
  state.ephemeris_km.reserve(constellation.size());
  const double sigma_km = sigma_r_m / 1000.0;
  for (const auto& el : constellation) {
    Eigen::Vector3d x = propagate(el, t_s);
    state.truth_km.push_back(x);
    Eigen::Vector3d noise(rng.gaussian(sigma_km), rng.gaussian(sigma_km),
                          rng.gaussian(sigma_km));
    state.ephemeris_km.push_back(x + noise);
  }
  return state;
}

}  // namespace isrfd
