#include <cmath>

#include "doctest.h"
#include "isrfd/edm.hpp"
#include "isrfd/errors.hpp"
#include "isrfd/stats.hpp"
#include "test_util.hpp"

using namespace isrfd;
using test_util::distance_matrix;
using test_util::fault_matrix;
using test_util::random_points;
using test_util::symmetric_noise;

TEST_CASE("build_edm squares the ranges") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
  d(0, 1) = d(1, 0) = 1.0;
  d(0, 2) = d(2, 0) = 1.0;
  d(1, 2) = d(2, 1) = 1.0;
  Eigen::MatrixXd e = build_edm(d);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(e(i, j) == (i == j ? 0.0 : 1.0));

  RandomStream rng(1);
  Eigen::MatrixXd pts = random_points(3, 6, rng);
  Eigen::MatrixXd dm = distance_matrix(pts);
  Eigen::MatrixXd edm = build_edm(dm);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      double d2 = (pts.col(i) - pts.col(j)).squaredNorm();
      CHECK(edm(i, j) == doctest::Approx(d2).epsilon(1e-12));
    }
}

TEST_CASE("gcedm zeroes row sums and vanishes for D = 0") {
  CHECK(gcedm(Eigen::MatrixXd::Zero(5, 5)).norm() == 0.0);

  RandomStream rng(2);
  Eigen::MatrixXd g = gcedm(build_edm(distance_matrix(random_points(3, 7, rng))));
  CHECK((g - g.transpose()).norm() < 1e-12);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(7);
  CHECK((g * ones).norm() < 1e-9 * g.norm());

  // J idempotence
  Eigen::MatrixXd j = Eigen::MatrixXd::Identity(7, 7) - Eigen::MatrixXd::Constant(7, 7, 1.0 / 7);
  CHECK((j * j - j).norm() < 1e-14);
}

TEST_CASE("noiseless 5-point GCEDM has rank 3; noise lifts lambda4 only") {
  RandomStream rng(3);
  Eigen::MatrixXd pts = random_points(3, 5, rng);
  Eigen::MatrixXd d = distance_matrix(pts);
  GcedmDecomposition clean = decompose_gcedm(gcedm(build_edm(d)));
  CHECK(clean.singular_values(3) / clean.singular_values(0) < 1e-10);
  CHECK(clean.singular_values(4) / clean.singular_values(0) < 1e-10);
  CHECK(numerical_rank(clean.singular_values) == 3);

  Eigen::MatrixXd noisy = d + symmetric_noise(5, 1e-6, rng);
  GcedmDecomposition dec = decompose_gcedm(gcedm(build_edm(noisy)));
  CHECK(dec.singular_values(3) > 0.0);
  CHECK(dec.singular_values(4) / dec.singular_values(0) < 1e-10);
  CHECK(numerical_rank(dec.singular_values) == 4);
}

TEST_CASE("rank_profile obeys the fault rank laws at n = 12") {
  RandomStream rng(4);
  Eigen::MatrixXd pts = random_points(3, 12, rng);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(12, 12);

  RankProfile clean = rank_profile(pts, zero, 0.0, rng);
  CHECK(clean.numerical_rank == 3);
  CHECK_FALSE(clean.degenerate);

  RankProfile one_fault = rank_profile(pts, fault_matrix(12, 4, 1e-3), 0.0, rng);
  CHECK(one_fault.numerical_rank <= 5);

  Eigen::MatrixXd two = fault_matrix(12, 4, 1e-3) + fault_matrix(12, 9, 1.7e-3);
  RankProfile two_fault = rank_profile(pts, two, 0.0, rng);
  CHECK(two_fault.numerical_rank <= 7);

  RankProfile noisy = rank_profile(pts, two, 1e-6, rng);
  CHECK(noisy.numerical_rank == 11);

  // coplanar points are flagged
  Eigen::MatrixXd flat = pts;
  flat.row(2).setZero();
  CHECK(rank_profile(flat, zero, 0.0, rng).degenerate);
}

TEST_CASE("noiseless faultless statistic sits at the double-precision floor") {
  RandomStream rng(5);
  Eigen::MatrixXd d = distance_matrix(random_points(3, 5, rng));
  Eigen::MatrixXd sig = Eigen::MatrixXd::Constant(5, 5, 1e-6);
  sig.diagonal().setZero();
  EdmTestResult res = test_statistic_n5(d, sig);
  GcedmDecomposition dec = decompose_gcedm(gcedm(build_edm(d)));
  double l1 = dec.singular_values(0);
  CHECK(res.gamma / (l1 * l1) < 1e-18);
  CHECK(res.dof == 1);
  CHECK(res.s2 > 0.0);
}

TEST_CASE("scaled statistic is chi-squared(1) under noise") {
  RandomStream rng(6);
  Eigen::MatrixXd d = distance_matrix(random_points(3, 5, rng));
  const double sigma = 1e-6;
  Eigen::MatrixXd sig = Eigen::MatrixXd::Constant(5, 5, sigma);
  sig.diagonal().setZero();

  const int n_draws = 4000;
  std::vector<double> scaled;
  scaled.reserve(n_draws);
  for (int t = 0; t < n_draws; ++t) {
    Eigen::MatrixXd noisy = d + symmetric_noise(5, sigma, rng);
    scaled.push_back(test_statistic_n5(noisy, sig).scaled);
  }
  double ks = test_util::ks_statistic(scaled, [](double x) { return chi2_cdf(x, 1.0); });
  CHECK(ks < test_util::ks_critical(0.01, n_draws));
}

TEST_CASE("general statistic equals the n=5 path and scales like sigma^2") {
  RandomStream rng(7);
  Eigen::MatrixXd d = distance_matrix(random_points(3, 5, rng));
  std::vector<double> log_sigma, log_s2;
  for (double sigma : {1e-8, 1e-7, 1e-6, 1e-5}) {
    Eigen::MatrixXd sig = Eigen::MatrixXd::Constant(5, 5, sigma);
    sig.diagonal().setZero();
    Eigen::MatrixXd noisy = d + symmetric_noise(5, sigma, rng);
    EdmTestResult five = test_statistic_n5(noisy, sig);
    EdmTestResult gen = test_statistic_general(noisy, sig);
    CHECK(gen.dof == 1);
    CHECK(gen.gamma == doctest::Approx(five.gamma).epsilon(1e-12));
    CHECK(gen.s2 == doctest::Approx(five.s2).epsilon(1e-12));
    log_sigma.push_back(std::log(sigma));
    log_s2.push_back(std::log(five.s2));
  }
  CHECK(test_util::regression_slope(log_sigma, log_s2) == doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("n=6 noiseless floor and dof bookkeeping") {
  RandomStream rng(8);
  Eigen::MatrixXd d = distance_matrix(random_points(3, 6, rng));
  Eigen::MatrixXd sig = Eigen::MatrixXd::Constant(6, 6, 1e-6);
  sig.diagonal().setZero();
  EdmTestResult res = test_statistic_general(d, sig);
  GcedmDecomposition dec = decompose_gcedm(gcedm(build_edm(d)));
  double l1 = dec.singular_values(0);
  CHECK(res.gamma / (l1 * l1) < 1e-18);
  CHECK(res.dof == 3);
}

TEST_CASE("noncentrality vanishes without faults and grows as bias^2") {
  RandomStream rng(9);
  Eigen::MatrixXd d = distance_matrix(random_points(3, 5, rng));
  Eigen::MatrixXd sig = Eigen::MatrixXd::Constant(5, 5, 1e-6);
  sig.diagonal().setZero();
  GcedmDecomposition dec = decompose_gcedm(gcedm(build_edm(d)));
  double s2 = predicted_scale(d, sig);
  CHECK(noncentrality(d, Eigen::MatrixXd::Zero(5, 5), dec, s2) == 0.0);

  std::vector<double> log_b, log_l;
  for (double b : {1e-7, 1e-6, 1e-5, 1e-4}) {
    double lam = noncentrality(d, fault_matrix(5, 2, b), dec, s2);
    CHECK(lam >= 0.0);
    log_b.push_back(std::log(b));
    log_l.push_back(std::log(lam));
  }
  CHECK(test_util::regression_slope(log_b, log_l) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("UGV invariance ties lambda4^2 to the projected block") {
  RandomStream rng(10);
  Eigen::MatrixXd d = distance_matrix(random_points(3, 5, rng));
  Eigen::MatrixXd noisy = d + symmetric_noise(5, 1e-6, rng);
  Eigen::MatrixXd g = gcedm(build_edm(noisy));
  GcedmDecomposition dec = decompose_gcedm(g);
  double l1 = dec.singular_values(0), l4 = dec.singular_values(3);
  double block = (dec.U.rightCols(2).transpose() * g * dec.V.rightCols(2)).squaredNorm();
  CHECK(std::abs(l4 * l4 - block) < 1e-12 * l1 * l1);
}

TEST_CASE("mdb_edm scaling identities") {
  double alpha = 0.05, gamma = 0.8;
  double base = mdb_edm(alpha, gamma, 1e-24, 2.5e-13);
  CHECK(mdb_edm(alpha, gamma, 4e-24, 2.5e-13) == doctest::Approx(2.0 * base).epsilon(1e-12));
  CHECK(mdb_edm(alpha, gamma, 1e-24, 1.25e-13) ==
        doctest::Approx(std::sqrt(2.0) * base).epsilon(1e-12));
  CHECK_THROWS_AS(mdb_edm(alpha, gamma, 1e-24, 0.0), ConfigError);
}

TEST_CASE("rank laws hold over a randomized grid") {
  RandomStream rng(11);
  for (int n : {5, 8, 12}) {
    for (int m : {0, 1, 2}) {
      for (int rep = 0; rep < 20; ++rep) {
        Eigen::MatrixXd pts = random_points(3, n, rng);
        Eigen::MatrixXd bias = Eigen::MatrixXd::Zero(n, n);
        for (int f = 0; f < m; ++f) bias += fault_matrix(n, (f * 3 + rep) % n, 1e-3);
        RankProfile prof = rank_profile(pts, bias, 0.0, rng);
        CHECK(prof.numerical_rank <= std::min(3 + 2 * m, n - 1));
      }
    }
  }
}
