#include "isrfd/edm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "isrfd/errors.hpp"
#include "isrfd/stats.hpp"

namespace isrfd {

namespace {

void check_distance_matrix(const Eigen::MatrixXd& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() < 2) throw ConfigError(std::string(who) + ": square matrix required");
  for (int i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 0.0) throw ConfigError(std::string(who) + ": nonzero diagonal");
    for (int j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) throw ConfigError(std::string(who) + ": non-finite entry");
      if (m(i, j) != m(j, i)) throw ConfigError(std::string(who) + ": asymmetric entry");
    }
  }
}

void fix_column_signs(Eigen::MatrixXd& u) {
  for (int c = 0; c < u.cols(); ++c) {
    for (int r = 0; r < u.rows(); ++r) {
      if (std::abs(u(r, c)) > 1e-12) {
        if (u(r, c) < 0.0) u.col(c) = -u.col(c);
        break;
      }
    }
  }
}

/// Accumulated variance of B_l^T (D ∘ E) B_r over symmetric Gaussian E with
/// per-edge sigma: sum over basis columns (a, b) and unordered pairs i < j of
/// (sigma_ij D_ij)^2 (L_ia R_jb + L_ja R_ib)^2.
double projected_noise_variance(const Eigen::MatrixXd& bl, const Eigen::MatrixXd& br,
                                const Eigen::MatrixXd& d, const Eigen::MatrixXd& sigma_edge) {
  const int n = static_cast<int>(d.rows());
  double total = 0.0;
  for (int a = 0; a < bl.cols(); ++a) {
    for (int b = 0; b < br.cols(); ++b) {
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          double coeff = sigma_edge(i, j) * d(i, j);
          double mix = bl(i, a) * br(j, b) + bl(j, a) * br(i, b);
          total += coeff * coeff * mix * mix;
        }
      }
    }
  }
  return total;
}

Eigen::MatrixXd center(const Eigen::MatrixXd& cols) {
  Eigen::MatrixXd out = cols;
  for (int c = 0; c < out.cols(); ++c) out.col(c).array() -= out.col(c).mean();
  return out;
}

}  // namespace

Eigen::MatrixXd build_edm(const Eigen::MatrixXd& ranges) {
  check_distance_matrix(ranges, "build_edm");
  return ranges.cwiseProduct(ranges);
}

Eigen::MatrixXd gcedm(const Eigen::MatrixXd& edm) {
  if (edm.rows() != edm.cols()) throw ConfigError("gcedm: square matrix required");
  const int n = static_cast<int>(edm.rows());
  Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n, n) -
                      Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  return -0.5 * j * edm * j;
}

GcedmDecomposition decompose_gcedm(const Eigen::MatrixXd& g) {
  if (g.rows() != g.cols()) throw ConfigError("decompose_gcedm: square matrix required");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.info() != Eigen::Success) throw NumericalError("decompose_gcedm: eigensolver failed");
  const int n = static_cast<int>(g.rows());

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const auto& ev = es.eigenvalues();
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    double fa = std::abs(ev(a)), fb = std::abs(ev(b));
    if (fa != fb) return fa > fb;
    return a < b;
  });

  GcedmDecomposition dec;
  dec.singular_values.resize(n);
  dec.U.resize(n, n);
  for (int c = 0; c < n; ++c) {
    dec.singular_values(c) = std::abs(ev(idx[c]));
    dec.U.col(c) = es.eigenvectors().col(idx[c]);
  }
  fix_column_signs(dec.U);
  dec.V = dec.U;
  for (int c = 0; c < n; ++c)
    if (ev(idx[c]) < 0.0) dec.V.col(c) = -dec.V.col(c);
  return dec;
}

int numerical_rank(const Eigen::VectorXd& singular_values, double rel_tol) {
  if (singular_values.size() == 0) return 0;
  double top = singular_values(0);
  if (top <= 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < singular_values.size(); ++i)
    if (singular_values(i) / top > rel_tol) ++rank;
  return rank;
}

RankProfile rank_profile(const Eigen::MatrixXd& points, const Eigen::MatrixXd& range_bias,
                         double noise_sigma, RandomStream& rng) {
  const int d = static_cast<int>(points.rows());
  const int n = static_cast<int>(points.cols());
  if (n < d + 2) throw ConfigError("rank_profile: need n >= d + 2 points");
  if (range_bias.rows() != n || range_bias.cols() != n)
    throw ConfigError("rank_profile: bias matrix size mismatch");

  Eigen::MatrixXd ranges = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double r = (points.col(i) - points.col(j)).norm() + range_bias(i, j);
      if (noise_sigma > 0.0) r += rng.gaussian(noise_sigma);
      ranges(i, j) = ranges(j, i) = r;
    }
  }
  GcedmDecomposition dec = decompose_gcedm(gcedm(build_edm(ranges)));

  RankProfile out;
  out.singular_values = dec.singular_values;
  out.numerical_rank = numerical_rank(dec.singular_values);
  out.degenerate = (range_bias.isZero(0.0) && noise_sigma == 0.0 && out.numerical_rank < d);
  return out;
}

EdmTestResult test_statistic_n5(const Eigen::MatrixXd& D_tilde,
                                const Eigen::MatrixXd& sigma_edge) {
  check_distance_matrix(D_tilde, "test_statistic_n5");
  if (D_tilde.rows() != 5) throw ConfigError("test_statistic_n5: n must be 5");
  GcedmDecomposition dec = decompose_gcedm(gcedm(build_edm(D_tilde)));

  // J-centered 4th/5th columns; centering annihilates the structural null
  // direction along the ones vector, leaving one active noise column.
  Eigen::MatrixXd u_hat = center(dec.U.rightCols(2));
  Eigen::MatrixXd v_hat = center(dec.V.rightCols(2));

  EdmTestResult res;
  res.gamma = dec.singular_values(3) * dec.singular_values(3);
  res.s2 = projected_noise_variance(u_hat, v_hat, D_tilde, sigma_edge);
  res.dof = 1;
  if (!(res.s2 > 0.0) || !std::isfinite(res.s2))
    throw NumericalError("test_statistic_n5: degenerate scale");
  res.scaled = res.gamma / res.s2;
  return res;
}

EdmTestResult test_statistic_general(const Eigen::MatrixXd& D_tilde,
                                     const Eigen::MatrixXd& sigma_edge) {
  check_distance_matrix(D_tilde, "test_statistic_general");
  const int n = static_cast<int>(D_tilde.rows());
  if (n < 5) throw ConfigError("test_statistic_general: n must be >= 5");
  GcedmDecomposition dec = decompose_gcedm(gcedm(build_edm(D_tilde)));

  // Noise subspace: singular columns 4..n-1 (1-based). The last column is the
  // structural zero along the ones vector and is excluded.
  const int k = (n - 4) * (n - 3) / 2;
  Eigen::MatrixXd u_noise = center(dec.U.middleCols(3, n - 4));
  Eigen::MatrixXd v_noise = center(dec.V.middleCols(3, n - 4));

  EdmTestResult res;
  res.gamma = dec.singular_values.segment(3, n - 4).squaredNorm();
  res.s2 = projected_noise_variance(u_noise, v_noise, D_tilde, sigma_edge) / k;
  res.dof = k;
  if (!(res.s2 > 0.0) || !std::isfinite(res.s2))
    throw NumericalError("test_statistic_general: degenerate scale");
  res.scaled = res.gamma / res.s2;
  return res;
}

double predicted_scale(const Eigen::MatrixXd& D, const Eigen::MatrixXd& sigma_edge) {
  check_distance_matrix(D, "predicted_scale");
  const int n = static_cast<int>(D.rows());
  if (n < 5) throw ConfigError("predicted_scale: n must be >= 5");
  GcedmDecomposition dec = decompose_gcedm(gcedm(build_edm(D)));
  const int k = (n - 4) * (n - 3) / 2;
  // Null basis of the noiseless matrix: columns 4..n. Centering projects out
  // the ones direction, so the arbitrary rotation within the null space does
  // not matter.
  Eigen::MatrixXd u0 = center(dec.U.rightCols(n - 3));
  Eigen::MatrixXd v0 = center(dec.V.rightCols(n - 3));
  double s2 = projected_noise_variance(u0, v0, D, sigma_edge) / k;
  if (!(s2 > 0.0) || !std::isfinite(s2)) throw NumericalError("predicted_scale: degenerate scale");
  return s2;
}

double noncentrality_raw(const Eigen::MatrixXd& D, const Eigen::MatrixXd& F,
                         const GcedmDecomposition& noiseless) {
  check_distance_matrix(D, "noncentrality");
  const int n = static_cast<int>(D.rows());
  if (F.rows() != n || F.cols() != n) throw ConfigError("noncentrality: bias matrix size mismatch");
  Eigen::MatrixXd u0 = center(noiseless.U.rightCols(n - 3));
  Eigen::MatrixXd v0 = center(noiseless.V.rightCols(n - 3));
  return (u0.transpose() * D.cwiseProduct(F) * v0).squaredNorm();
}

double noncentrality(const Eigen::MatrixXd& D, const Eigen::MatrixXd& F,
                     const GcedmDecomposition& noiseless, double s2) {
  if (!(s2 > 0.0)) throw ConfigError("noncentrality: s2 must be > 0");
  return noncentrality_raw(D, F, noiseless) / s2;
}

double mdb_edm(double alpha, double power_gamma, double s2, double lambda_raw_unit) {
  if (!(lambda_raw_unit > 0.0)) throw ConfigError("mdb_edm: lambda_raw_unit must be > 0");
  if (!(s2 > 0.0)) throw ConfigError("mdb_edm: s2 must be > 0");
  double lambda_bar = solve_noncentrality(alpha, power_gamma, 1.0);
  return std::sqrt(lambda_bar * s2 / lambda_raw_unit);
}

}  // namespace isrfd
