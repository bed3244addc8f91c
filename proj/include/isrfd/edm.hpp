#pragma once

#include <Eigen/Core>

#include "isrfd/rng.hpp"

namespace isrfd {

/// Relative singular-value cutoff for numerical rank decisions. Sits between
/// double-precision noise (~1e-15) and the smallest physically meaningful
/// ratios seen in faulted/noisy distance matrices.
inline constexpr double kRankRelTol = 1e-9;

/// Singular structure of a geometric-centered EDM. The matrix is symmetric,
/// so the decomposition is derived from the eigendecomposition: values are
/// |eigenvalues| sorted descending, V = U * sign(eigenvalue). Each column's
/// sign is fixed so its first component above 1e-12 is positive; results are
/// reproducible across runs.
struct GcedmDecomposition {
  Eigen::VectorXd singular_values;  // descending; last one is the structural zero
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
};

/// Scaled test result for one subgraph.
struct EdmTestResult {
  double gamma = 0.0;  // sum of squared noise-subspace singular values, m^4
  double s2 = 0.0;     // squared scale of the statistic, m^4
  int dof = 0;         // (n-4)(n-3)/2
  double scaled = 0.0; // gamma / s2
};

struct RankProfile {
  Eigen::VectorXd singular_values;
  int numerical_rank = 0;
  bool degenerate = false;  // points spanned fewer than d dimensions
};

/// Elementwise square of a distance matrix. Input must be square, symmetric,
/// nonnegative with zero diagonal.
Eigen::MatrixXd build_edm(const Eigen::MatrixXd& ranges);

/// G = -1/2 * J D J with J = I - (1/n) 1 1^T. Row sums of the result vanish.
Eigen::MatrixXd gcedm(const Eigen::MatrixXd& edm);

GcedmDecomposition decompose_gcedm(const Eigen::MatrixXd& g);

int numerical_rank(const Eigen::VectorXd& singular_values, double rel_tol = kRankRelTol);

/// Singular-value profile of the GCEDM built from a point set with optional
/// per-edge range biases and Gaussian range noise. `points` is d x n;
/// `range_bias_m` is an n x n symmetric bias matrix added to the ranges
/// (pass a zero matrix for none).
RankProfile rank_profile(const Eigen::MatrixXd& points, const Eigen::MatrixXd& range_bias,
                         double noise_sigma, RandomStream& rng);

/// n = 5 statistic: gamma = lambda_4^2 of the GCEDM of D~ ∘ D~, with the
/// squared scale accumulated over the J-centered 4th/5th singular-vector
/// columns and the unordered edge pairs:
///   s^2 = sum_{a,b} sum_{i<j} (sigma_ij D~_ij)^2 (U^_{ia} V^_{jb} + U^_{ja} V^_{ib})^2.
/// Throws NumericalError when the scale degenerates.
EdmTestResult test_statistic_n5(const Eigen::MatrixXd& D_tilde,
                                const Eigen::MatrixXd& sigma_edge);

/// n >= 5 statistic: gamma = sum_{k=4}^{n-1} lambda_k^2 over the active noise
/// subspace (the structural null direction along 1 is excluded); s^2 is the
/// per-degree-of-freedom average of the same accumulation over the noise
/// basis. For n = 5 this matches test_statistic_n5.
EdmTestResult test_statistic_general(const Eigen::MatrixXd& D_tilde,
                                     const Eigen::MatrixXd& sigma_edge);

/// Squared scale of the statistic predicted from the noiseless distance
/// matrix (basis taken from its own decomposition). Used for analytic
/// predictions and MDBs.
double predicted_scale(const Eigen::MatrixXd& D, const Eigen::MatrixXd& sigma_edge);

/// Noncentrality for a fault-bias matrix F (nonzero only in the rows/columns
/// of the fault satellite): lambda = ||U^T J (D ∘ F) J V||_F^2 / s2 over the
/// J-centered null basis of the noiseless decomposition.
double noncentrality(const Eigen::MatrixXd& D, const Eigen::MatrixXd& F,
                     const GcedmDecomposition& noiseless, double s2);

/// The same Frobenius term without the 1/s2 factor (units m^4).
double noncentrality_raw(const Eigen::MatrixXd& D, const Eigen::MatrixXd& F,
                         const GcedmDecomposition& noiseless);

/// Minimum detectable bias from the subgraph statistic: bias whose
/// noncentrality reaches lambda-bar solving
/// P[chi2(1, lb) <= chi2_{1-alpha}(1)] = 1 - power_gamma.
/// `lambda_raw_unit` is ||U^T J (D ∘ F_unit) J V||_F^2 at a 1 m bias, without
/// the 1/s2 factor; MDB = sqrt(lambda_bar * s2 / lambda_raw_unit).
double mdb_edm(double alpha, double power_gamma, double s2, double lambda_raw_unit);

}  // namespace isrfd
