#include "osr/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_oracles.hpp"

using osr::MatrixXd;
using osr::VectorXd;

TEST(Cholesky, Identity) {
  const MatrixXd m = MatrixXd::Identity(2, 2);
  EXPECT_TRUE(osr::cholesky(m).lower().isApprox(m, 1e-15));
}

TEST(Cholesky, HandEliminated2x2) {
  MatrixXd m(2, 2);
  m << 4, 2, 2, 3;
  const auto f = osr::cholesky(m);
  EXPECT_NEAR(f.lower()(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(f.lower()(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(f.lower()(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(f.lower()(1, 1), std::sqrt(2.0), 1e-15);
  EXPECT_TRUE(f.reconstruct().isApprox(m, 1e-14));
}

TEST(Cholesky, IndefiniteThrows) {
  MatrixXd m(2, 2);
  m << 1, 2, 2, 1;  // eigenvalues {3, -1}
  EXPECT_THROW(osr::cholesky(m), osr::NotPositiveDefinite);
}

TEST(Cholesky, ReconstructionProperty) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 8);
    const MatrixXd m = oracle::random_pd(d, rng);
    const MatrixXd back = osr::cholesky(m).reconstruct();
    EXPECT_LE((back - m).norm(), 1e-10 * m.norm());
  }
}

TEST(LogDet, Examples) {
  EXPECT_NEAR(osr::cholesky(MatrixXd::Identity(3, 3)).log_det(), 0.0, 1e-15);
  MatrixXd diag = MatrixXd::Zero(2, 2);
  diag(0, 0) = 2.0;
  diag(1, 1) = 8.0;
  EXPECT_NEAR(osr::cholesky(diag).log_det(), std::log(16.0), 1e-12);
  MatrixXd scalar(1, 1);
  scalar << 3.0;
  EXPECT_NEAR(osr::cholesky(scalar).log_det(), std::log(3.0), 1e-12);
}

TEST(QuadForm, Examples) {
  VectorXd w(2);
  w << 3, 4;
  EXPECT_NEAR(osr::cholesky(MatrixXd::Identity(2, 2)).quad_form(w), 25.0, 1e-12);
  MatrixXd diag = MatrixXd::Zero(2, 2);
  diag(0, 0) = 4.0;
  diag(1, 1) = 1.0;
  VectorXd v(2);
  v << 2, 0;
  EXPECT_NEAR(osr::cholesky(diag).quad_form(v), 1.0, 1e-12);
  EXPECT_EQ(osr::cholesky(diag).quad_form(VectorXd::Zero(2)), 0.0);
}

TEST(QuadForm, MatchesExplicitInverse) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 5);
    const MatrixXd m = oracle::random_pd(d, rng);
    const VectorXd w = oracle::random_vector(d, rng);
    const double direct = w.dot(m.inverse() * w);
    const double via_factor = osr::cholesky(m).quad_form(w);
    EXPECT_LE(std::abs(direct - via_factor), 1e-9 * (1.0 + std::abs(direct)));
  }
}

TEST(QuadForm, DimensionMismatchThrows) {
  EXPECT_THROW(
      osr::cholesky(MatrixXd::Identity(2, 2)).quad_form(VectorXd::Zero(3)),
      osr::DimensionMismatch);
}

TEST(SampleMoments, HandArithmetic) {
  MatrixXd data(4, 2);
  data << 0, 0, 2, 0, 0, 2, 2, 2;
  const auto mp = osr::sample_moments(data);
  EXPECT_TRUE(mp.mean().isApprox(VectorXd::Constant(2, 1.0), 1e-15));
  EXPECT_TRUE(mp.cov().isApprox(MatrixXd::Identity(2, 2), 1e-15));
}

TEST(SampleMoments, IdenticalRowsDegenerate) {
  MatrixXd data(3, 2);
  data << 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(osr::sample_moments(data), osr::DegenerateSample);
}

TEST(SampleMoments, OneOverNNormalization) {
  MatrixXd data(2, 1);
  data << 0, 2;
  const auto mp = osr::sample_moments(data);
  EXPECT_NEAR(mp.mean()(0), 1.0, 1e-15);
  EXPECT_NEAR(mp.cov()(0, 0), 1.0, 1e-15);  // (1 + 1)/2, not /(n-1)
}

TEST(SampleMoments, MatchesNaiveDoubleLoop) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> entry(-5, 5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 20);
    const int d = 1 + static_cast<int>(rng() % 4);
    MatrixXd data(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) data(i, j) = entry(rng);
    const MatrixXd expected = oracle::naive_covariance(data);
    try {
      const auto mp = osr::sample_moments(data);
      EXPECT_TRUE(mp.cov().isApprox(expected, 1e-12));
    } catch (const osr::DegenerateSample&) {
      // integer data can collapse; the oracle result must then be singular
      EXPECT_THROW(osr::cholesky(expected), osr::NotPositiveDefinite);
    }
  }
}

TEST(LedoitWolf, IsotropicSampleIsFixedPoint) {
  // rows whose 1/n covariance is already the identity, so S = m I
  MatrixXd data(4, 2);
  data << 0, 0, 2, 0, 0, 2, 2, 2;
  const auto mp = osr::ledoit_wolf(data);
  EXPECT_TRUE(mp.cov().isApprox(MatrixXd::Identity(2, 2), 1e-14));
}

TEST(LedoitWolf, UnivariateEqualsSampleCovariance) {
  MatrixXd data(5, 1);
  data << 0, 1, 2, 3, 10;
  const auto lw = osr::ledoit_wolf(data);
  const auto sm = osr::sample_moments(data);
  EXPECT_NEAR(lw.cov()(0, 0), sm.cov()(0, 0), 1e-12);
}

TEST(LedoitWolf, MatchesHandComputedShrinkage) {
  MatrixXd data(4, 2);
  data << 1, 2, 3, 5, 0, 1, 4, 0;
  // the four scalars, recomputed here step by step
  const MatrixXd s = oracle::naive_covariance(data);
  const double m = s.trace() / 2.0;
  const MatrixXd target = m * MatrixXd::Identity(2, 2);
  const double delta2 = (s - target).squaredNorm() / 2.0;
  VectorXd mean = data.colwise().mean();
  double bbar2 = 0.0;
  for (int t = 0; t < 4; ++t) {
    const VectorXd xt = data.row(t).transpose() - mean;
    bbar2 += (xt * xt.transpose() - s).squaredNorm() / 2.0;
  }
  bbar2 /= 16.0;
  const double b2 = std::min(bbar2, delta2);
  const MatrixXd expected = (b2 / delta2) * target + (1.0 - b2 / delta2) * s;

  const auto mp = osr::ledoit_wolf(data);
  EXPECT_TRUE(mp.cov().isApprox(expected, 1e-12));
}

TEST(LedoitWolf, AllRowsIdenticalDegenerate) {
  MatrixXd data(3, 2);
  data << 4, 4, 4, 4, 4, 4;
  EXPECT_THROW(osr::ledoit_wolf(data), osr::DegenerateSample);
}

TEST(LedoitWolf, AlwaysPositiveDefinite) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 10);
    const int n = 2 + static_cast<int>(rng() % 15);  // often n < d
    MatrixXd data(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) data(i, j) = normal(rng);
    try {
      const auto mp = osr::ledoit_wolf(data);
      EXPECT_NO_THROW(osr::cholesky(mp.cov()));
    } catch (const osr::DegenerateSample&) {
      // only the n = 2, d > 1 family has zero dispersion and a singular S
      EXPECT_EQ(n, 2);
      EXPECT_GT(d, 1);
    }
  }
}

TEST(MomentPair, RejectsAsymmetryAndIndefiniteness) {
  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.2, 1;
  EXPECT_THROW(osr::MomentPair(VectorXd::Zero(2), asym), osr::DataError);
  MatrixXd indef(2, 2);
  indef << 1, 2, 2, 1;
  EXPECT_THROW(osr::MomentPair(VectorXd::Zero(2), indef),
               osr::NotPositiveDefinite);
}

TEST(Dataset, Validation) {
  MatrixXd ok(2, 1);
  ok << 1, 2;
  EXPECT_NO_THROW(osr::Dataset(ok, {0, 1}));
  EXPECT_THROW(osr::Dataset(ok, {0, 2}), osr::DataError);
  EXPECT_THROW(osr::Dataset(ok, {0}), osr::DimensionMismatch);
  MatrixXd bad(1, 1);
  bad << std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(osr::Dataset{bad}, osr::DataError);
}
