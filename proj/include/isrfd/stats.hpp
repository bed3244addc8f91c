#pragma once

#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

namespace isrfd {

struct Chi2Spec {
  double dof = 1.0;
  double noncentrality = 0.0;
};

/// Quadratic form sum lambda_k * Z_k^2 with iid standard normal Z.
struct QuadFormSpec {
  std::vector<double> eigenvalues;
};

double chi2_cdf(double x, double dof);
/// Inverse of chi2_cdf; p must lie in (0, 1).
double chi2_quantile(double p, double dof);

double noncentral_chi2_cdf(double x, const Chi2Spec& spec);

/// Noncentrality lambda-bar with
/// P[chi2(dof, lb) <= chi2_{1-alpha}(dof)] = 1 - power_gamma.
/// Returns 0 when power_gamma <= alpha (the test already has that much power).
double solve_noncentrality(double alpha, double power_gamma, double dof);

/// CDF of the quadratic form at q via Imhof's integral
///   F(q) = 1/2 - (1/pi) * Int_0^inf sin(theta(u)) / (u rho(u)) du,
/// integrated by composite Gauss-Legendre over quarter-period chunks with an
/// oscillation-aware truncation point and an analytic integration-by-parts
/// tail correction.
double imhof_cdf(double q, const QuadFormSpec& spec);

/// Eigenvalues of the conservative residual covariance for l links:
/// ones on the diagonal, rho = sigma_r^2 / (2 sigma_r^2 + sigma_m^2) off it.
std::vector<double> correlated_sigma_eigenvalues(int l, double sigma_r, double sigma_m);

/// Critical value q with imhof_cdf(q, eig(Sigma~(l))) = 1 - alpha.
/// Cached per (l, alpha, sigma_r/sigma_m ratio quantized to 1e-3); safe for
/// concurrent readers.
class ThresholdCache {
 public:
  double correlated_threshold(int l, double sigma_r, double sigma_m, double alpha);

  /// Rows of the current cache as (l, alpha, ratio, critical_value).
  std::vector<std::tuple<int, double, double, double>> rows() const;
  void save_csv(const std::string& path) const;
  void load_csv(const std::string& path);

 private:
  mutable std::mutex mutex_;
  std::map<std::tuple<int, long long, long long>, double> cache_;
};

/// Uncached single computation (used by the cache and directly in tests).
double correlated_threshold(int l, double sigma_r, double sigma_m, double alpha);

}  // namespace isrfd
