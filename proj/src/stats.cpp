#include "isrfd/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "isrfd/errors.hpp"

namespace isrfd {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double chi2_cdf(double x, double dof) {
  if (!(dof > 0.0)) throw ConfigError("chi2_cdf: dof must be > 0");
  if (x <= 0.0) return 0.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(dist, x);
}

double chi2_quantile(double p, double dof) {
  if (!(dof > 0.0)) throw ConfigError("chi2_quantile: dof must be > 0");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("chi2_quantile: p must be in (0, 1)");
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(dist, p);
}

double noncentral_chi2_cdf(double x, const Chi2Spec& spec) {
  if (!(spec.dof > 0.0)) throw ConfigError("noncentral_chi2_cdf: dof must be > 0");
  if (!(spec.noncentrality >= 0.0))
    throw ConfigError("noncentral_chi2_cdf: noncentrality must be >= 0");
  if (x <= 0.0) return 0.0;
  if (spec.noncentrality == 0.0) return chi2_cdf(x, spec.dof);
  try {
    boost::math::non_central_chi_squared dist(spec.dof, spec.noncentrality);
    return boost::math::cdf(dist, x);
  } catch (const std::exception& e) {
    throw NumericalError(std::string("noncentral_chi2_cdf: ") + e.what());
  }
}

double solve_noncentrality(double alpha, double power_gamma, double dof) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("solve_noncentrality: alpha in (0, 1)");
  if (!(power_gamma > 0.0 && power_gamma < 1.0))
    throw ConfigError("solve_noncentrality: power_gamma in (0, 1)");
  // At lambda = 0 the test already has power alpha; no offset is needed below that.
  if (power_gamma <= alpha) return 0.0;

  const double q = chi2_quantile(1.0 - alpha, dof);
  const double target = 1.0 - power_gamma;
  auto miss_rate = [&](double lam) { return noncentral_chi2_cdf(q, {dof, lam}); };

  double lo = 0.0, hi = 4.0;
  int guard = 0;
  while (miss_rate(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 64) throw NumericalError("solve_noncentrality: no bracket");
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (miss_rate(mid) > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

namespace {

struct ImhofTerms {
  double theta;  // 0.5 * sum atan(lam*u) - 0.5 * q * u
  double g;      // 1 / (u * rho(u))
};

ImhofTerms imhof_eval(double u, double q, const std::vector<double>& lam) {
  double theta = -0.5 * q * u;
  double log_rho = 0.0;
  for (double l : lam) {
    theta += 0.5 * std::atan(l * u);
    log_rho += 0.25 * std::log1p(l * l * u * u);
  }
  return {theta, std::exp(-log_rho) / u};
}

// 15-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlNodes[15] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272, -0.7244177313601701,
    -0.5709721726085388, -0.3941513470775634, -0.2011940939974345, 0.0,
    0.2011940939974345,  0.3941513470775634,  0.5709721726085388,  0.7244177313601701,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr double kGlWeights[15] = {
    0.0307532419961173, 0.0703660474881081, 0.1071592204671719, 0.1395706779261543,
    0.1662692058169939, 0.1861610000155622, 0.1984314853271116, 0.2025782419255613,
    0.1984314853271116, 0.1861610000155622, 0.1662692058169939, 0.1395706779261543,
    0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

}  // namespace

double imhof_cdf(double q, const QuadFormSpec& spec) {
  const auto& lam = spec.eigenvalues;
  if (lam.empty()) throw ConfigError("imhof_cdf: eigenvalues must be nonempty");
  for (double l : lam)
    if (!(l > 0.0) || !std::isfinite(l))
      throw ConfigError("imhof_cdf: eigenvalues must be positive and finite");
  if (q <= 0.0) return 0.0;

  const int L = static_cast<int>(lam.size());
  double sum_lam = 0.0, min_lam = std::numeric_limits<double>::infinity();
  double log_prod_sqrt = 0.0;
  for (double l : lam) {
    sum_lam += l;
    min_lam = std::min(min_lam, l);
    log_prod_sqrt += 0.5 * std::log(l);
  }
  const double nu = 1.0 + 0.5 * L;  // integrand envelope decays like u^-nu
  const double b_slope = 0.5 * q;   // asymptotic phase slope

  // Truncation point from two valid tail bounds:
  //  monotone (Imhof): (1/pi) * 2 / (L * T^{L/2} * prod sqrt(lam))
  //  two integration-by-parts sweeps against the e^{-i q u / 2} oscillation:
  //    ~ 4 (nu + 2)^2 / (pi * b^2 * T^{nu + 1} * prod sqrt(lam)),
  // whose boundary terms are added analytically below.
  const double eps_tail = 1e-9;
  const double log_pe = std::log(kPi * eps_tail) + log_prod_sqrt;
  double T_mono = std::exp((std::log(2.0 / L) - log_pe) * 2.0 / L);
  double T_parts = std::exp(
      (std::log(4.0 * (nu + 2.0) * (nu + 2.0)) - 2.0 * std::log(b_slope) - log_pe) / (nu + 1.0));
  // The by-parts expansion needs the asymptotic regime and a phase slope
  // dominated by -q/2.
  T_parts = std::max({T_parts, 8.0 / min_lam, 8.0 * sum_lam / q, 4.0 * (nu + 2.0) / b_slope});
  const bool use_correction = T_parts <= T_mono;
  const double T = use_correction ? T_parts : T_mono;

  // Composite Gauss-Legendre over half-period chunks. The local oscillation
  // bound 0.5 * (q + sum lam / (1 + lam^2 u^2)) only decays with u, so a
  // chunk length valid at its left edge is valid throughout.
  double integral = 0.0;
  double u0 = 0.0;
  long guard = 0;
  while (u0 < T) {
    double local = 0.0;
    for (double l : lam) local += l / (1.0 + l * l * u0 * u0);
    double rate = 0.5 * (q + local);
    double h = std::min(kPi / rate, T - u0);
    const double mid = u0 + 0.5 * h, half = 0.5 * h;
    double acc = 0.0;
    for (int k = 0; k < 15; ++k) {
      double u = mid + half * kGlNodes[k];
      ImhofTerms t = imhof_eval(u, q, lam);
      acc += kGlWeights[k] * std::sin(t.theta) * t.g;
    }
    integral += half * acc;
    u0 += h;
    if (++guard > 2000000) throw NumericalError("imhof_cdf: integration span too large");
  }

  if (use_correction) {
    // tail = g cos(theta)/theta' - (g/theta')' sin(theta)/theta' + O(T^-nu-2)
    ImhofTerms t = imhof_eval(T, q, lam);
    double theta_p = -b_slope, theta_pp = 0.0, dlog_rho = 0.0;
    for (double l : lam) {
      double w = 1.0 + l * l * T * T;
      theta_p += 0.5 * l / w;
      theta_pp -= l * l * l * T / (w * w);
      dlog_rho += 0.5 * l * l * T / w;
    }
    if (theta_p < -1e-300) {
      double g_prime = -t.g * (1.0 / T + dlog_rho);
      double d_g_over_tp = g_prime / theta_p - t.g * theta_pp / (theta_p * theta_p);
      integral += t.g * std::cos(t.theta) / theta_p;
      integral -= d_g_over_tp * std::sin(t.theta) / theta_p;
    }
  }

  double f = 0.5 - integral / kPi;
  return std::min(1.0, std::max(0.0, f));
}

std::vector<double> correlated_sigma_eigenvalues(int l, double sigma_r, double sigma_m) {
  if (l < 1) throw ConfigError("correlated_sigma_eigenvalues: l must be >= 1");
  double denom = 2.0 * sigma_r * sigma_r + sigma_m * sigma_m;
  if (!(denom > 0.0)) throw ConfigError("correlated_sigma_eigenvalues: zero variance");
  double rho = sigma_r * sigma_r / denom;
  // Sigma~ = (1 - rho) I + rho * ones: eigenvalues 1 + (l-1) rho and 1 - rho (l-1 times).
  std::vector<double> eig(l, 1.0 - rho);
  eig[0] = 1.0 + (l - 1) * rho;
  return eig;
}

double correlated_threshold(int l, double sigma_r, double sigma_m, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("correlated_threshold: alpha in (0, 1)");
  QuadFormSpec spec{correlated_sigma_eigenvalues(l, sigma_r, sigma_m)};
  if (sigma_r == 0.0) return chi2_quantile(1.0 - alpha, static_cast<double>(l));

  const double target = 1.0 - alpha;
  double lo = 0.0;
  double hi = chi2_quantile(1.0 - alpha, static_cast<double>(l));
  // Positive correlation fattens the upper tail; expand until bracketed.
  int guard = 0;
  while (imhof_cdf(hi, spec) < target) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 64) throw NumericalError("correlated_threshold: no bracket");
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (imhof_cdf(mid, spec) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-10 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

double ThresholdCache::correlated_threshold(int l, double sigma_r, double sigma_m, double alpha) {
  double ratio = (sigma_m > 0.0) ? sigma_r / sigma_m : std::numeric_limits<double>::infinity();
  auto key = std::make_tuple(l, static_cast<long long>(std::llround(alpha * 1e9)),
                             static_cast<long long>(std::llround(ratio * 1e3)));
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  double value = isrfd::correlated_threshold(l, sigma_r, sigma_m, alpha);
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(key, value);
  return value;
}

std::vector<std::tuple<int, double, double, double>> ThresholdCache::rows() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<std::tuple<int, double, double, double>> out;
  out.reserve(cache_.size());
  for (const auto& [key, value] : cache_)
    out.emplace_back(std::get<0>(key), std::get<1>(key) / 1e9, std::get<2>(key) / 1e3, value);
  return out;
}

void ThresholdCache::save_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ConfigError("ThresholdCache: cannot open " + path);
  f << "l_i,alpha,ratio,critical_value\n";
  for (const auto& [l, alpha, ratio, value] : rows()) {
    std::ostringstream line;
    line.precision(17);
    line << l << ',' << alpha << ',' << ratio << ',' << value << '\n';
    f << line.str();
  }
}

void ThresholdCache::load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("ThresholdCache: cannot open " + path);
  std::string line;
  std::getline(f, line);  // header
  std::lock_guard<std::mutex> lock(mutex_);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    int l;
    double alpha, ratio, value;
    std::getline(ss, tok, ',');
    l = std::stoi(tok);
    std::getline(ss, tok, ',');
    alpha = std::stod(tok);
    std::getline(ss, tok, ',');
    ratio = std::stod(tok);
    std::getline(ss, tok, ',');
    value = std::stod(tok);
    cache_[std::make_tuple(l, static_cast<long long>(std::llround(alpha * 1e9)),
                           static_cast<long long>(std::llround(ratio * 1e3)))] = value;
  }
}

}  // namespace isrfd
