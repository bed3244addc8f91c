#pragma once

#include <Eigen/Core>
#include <vector>

#include "isrfd/graph.hpp"
#include "isrfd/rng.hpp"

namespace isrfd {

/// Keplerian state of one satellite. Lengths in km, angles in degrees;
/// all internal math is done in radians.
struct OrbitalElements {
  double a_km = 0.0;       // semi-major axis, > 0
  double e = 0.0;          // eccentricity, in [0, 1)
  double i_deg = 0.0;      // inclination
  double raan_deg = 0.0;   // right ascension of ascending node
  double argp_deg = 0.0;   // argument of periapsis
  double M0_deg = 0.0;     // mean anomaly at epoch
  double mu_km3_s2 = 0.0;  // gravitational parameter, > 0

  void validate() const;
};

/// Central body and link-visibility cutoffs.
struct BodyModel {
  double radius_km = 0.0;
  double mask_altitude_km = 0.0;  // extra occultation shell above the surface
  double phi_max_deg = 0.0;       // max angle between line of sight and nadir, per endpoint
  double mu_km3_s2 = 0.0;

  void validate() const;
};

/// Truth and ephemeris positions of the whole constellation at one epoch.
/// Positions in km; sigma_r_m is the 1-sigma per-axis ephemeris position
/// error in meters.
struct ConstellationState {
  double epoch_s = 0.0;
  std::vector<Eigen::Vector3d> truth_km;
  std::vector<Eigen::Vector3d> ephemeris_km;
  double sigma_r_m = 0.0;
};

/// Solve Kepler's equation E - e*sin(E) = M. Newton iteration with a
/// bisection fallback; throws NumericalError if the residual does not reach
/// `tol` radians within the iteration cap.
double solve_kepler(double M_rad, double e, double tol = 1e-12);

double orbital_period_s(const OrbitalElements& el);

/// Two-body position at time t (seconds past the element epoch), km.
Eigen::Vector3d propagate(const OrbitalElements& el, double t_s);

/// True when the segment between the two satellites clears the occultation
/// sphere (radius + mask) and, at both endpoints, the angle between the line
/// of sight and the satellite-to-body-center direction is below phi_max.
bool link_visible(const Eigen::Vector3d& xi_km, const Eigen::Vector3d& xj_km,
                  const BodyModel& body);

/// Visibility graph over the truth positions; all edges marked measured.
LinkGraph build_link_graph(const ConstellationState& state, const BodyModel& body);

/// Propagate every satellite to epoch t and attach an ephemeris realization:
/// truth + i.i.d. zero-mean Gaussian per axis with sigma = sigma_r_m.
ConstellationState propagate_constellation(const std::vector<OrbitalElements>& constellation,
                                           double t_s, double sigma_r_m, RandomStream& rng);

}  // namespace isrfd
