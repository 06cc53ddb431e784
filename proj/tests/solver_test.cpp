#include "osr/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_oracles.hpp"

using osr::AmbiguitySpec;
using osr::MatrixXd;
using osr::MomentPair;
using osr::ScoreMode;
using osr::VectorXd;

namespace {

MomentPair scalar_pair(double mean, double var) {
  VectorXd m(1);
  m << mean;
  MatrixXd c(1, 1);
  c << var;
  return MomentPair(m, c);
}

VectorXd scalar(double v) {
  VectorXd x(1);
  x << v;
  return x;
}

}  // namespace

TEST(Phi1, DerivativesMatchCentralDifferences) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> rho_dist(0.0, 3.0);
  std::uniform_real_distribution<double> alpha_dist(0.0, 10.0);
  const double gammas[] = {0.01, 0.1, 1.0, 10.0, 100.0};
  for (int trial = 0; trial < 50; ++trial) {
    const double rho = rho_dist(rng);
    const double alpha = alpha_dist(rng);
    for (double g : gammas) {
      const double h = 1e-5;
      const auto e = osr::phi1(g, rho, alpha);
      const double fd1 =
          (osr::phi1(g + h, rho, alpha).value - osr::phi1(g - h, rho, alpha).value) /
          (2.0 * h);
      // second derivative checked against differences of the analytic first
      // derivative; value-based differences lose too many digits at this step
      const double fd2 =
          (osr::phi1(g + h, rho, alpha).first - osr::phi1(g - h, rho, alpha).first) /
          (2.0 * h);
      EXPECT_LE(std::abs(e.first - fd1), 1e-5 * (1.0 + std::abs(fd1)));
      EXPECT_LE(std::abs(e.second - fd2), 1e-5 * (1.0 + std::abs(fd2)));
    }
  }
}

TEST(Phi2, DerivativesMatchCentralDifferences) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> rho_dist(0.01, 3.0);
  std::uniform_real_distribution<double> alpha_dist(0.0, 10.0);
  const double gammas[] = {0.01, 0.1, 1.0, 10.0, 100.0};
  const int dims[] = {1, 2, 5, 20};
  for (int trial = 0; trial < 30; ++trial) {
    const double rho = rho_dist(rng);
    const double alpha = alpha_dist(rng);
    for (int d : dims)
      for (double g : gammas) {
        const auto e = osr::phi2(g, rho, alpha, d);
        const double h = std::min(1e-5, g / 4.0);
        const double fd1 = (osr::phi2(g + h, rho, alpha, d).value -
                            osr::phi2(g - h, rho, alpha, d).value) /
                           (2.0 * h);
        const double fd2 = (osr::phi2(g + h, rho, alpha, d).first -
                            osr::phi2(g - h, rho, alpha, d).first) /
                           (2.0 * h);
        EXPECT_LE(std::abs(e.first - fd1), 1e-5 * (1.0 + std::abs(fd1)));
        EXPECT_LE(std::abs(e.second - fd2), 1e-5 * (1.0 + std::abs(fd2)));
      }
  }
}

TEST(Phi2, RejectsNonpositiveGamma) {
  EXPECT_THROW(osr::phi2(0.0, 1.0, 1.0, 1), osr::DomainError);
  EXPECT_THROW(osr::phi2(-1.0, 1.0, 1.0, 1), osr::DomainError);
}

TEST(MinimizePhi, NonparamBoundaryWhenRadiusSaturates) {
  // phi1'(0) = rho - log(1 + alpha) >= 0 puts the minimum at gamma = 0.
  const auto r = osr::minimize_phi(ScoreMode::Nonparametric, 2.0, 1.0, 1);
  EXPECT_EQ(r.gamma_star, 0.0);
  EXPECT_EQ(r.iterations, 0);
}

TEST(MinimizePhi, MatchesGridSearch) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> rho_dist(0.01, 3.0);
  std::uniform_real_distribution<double> alpha_dist(0.1, 10.0);
  for (int trial = 0; trial < 40; ++trial) {
    const double rho = rho_dist(rng);
    const double alpha = alpha_dist(rng);
    for (int d : {1, 2, 3}) {
      {
        const auto r = osr::minimize_phi(ScoreMode::Nonparametric, rho, alpha, d);
        const double grid = oracle::grid_min(
            [&](double g) { return osr::phi1(g, rho, alpha).value; }, 1e-8,
            1e8, 200000, true);
        const double at_star = osr::phi1(r.gamma_star, rho, alpha).value;
        EXPECT_LE(at_star, grid + 1e-9 * (1.0 + std::abs(grid)));
      }
      {
        const auto r = osr::minimize_phi(ScoreMode::Gaussian, rho, alpha, d);
        const double grid = oracle::grid_min(
            [&](double g) { return osr::phi2(g, rho, alpha, d).value; }, 1e-8,
            1e8, 200000, false);
        const double at_star = osr::phi2(r.gamma_star, rho, alpha, d).value;
        EXPECT_LE(at_star, grid + 1e-9 * (1.0 + std::abs(grid)));
        EXPECT_LE(r.residual, 1e-8);
      }
    }
  }
}

TEST(MinimizePhi, GaussianRequiresPositiveRadius) {
  EXPECT_THROW(osr::minimize_phi(ScoreMode::Gaussian, 0.0, 1.0, 1),
               osr::DomainError);
}

TEST(NonparamScore, CenterPointScoresOne) {
  const AmbiguitySpec spec(scalar_pair(0, 1), 0.5);
  const auto r = osr::optimistic_nonparam_score(scalar(0.0), spec);
  EXPECT_EQ(r.score, 1.0);
  EXPECT_EQ(r.gamma_star, 0.0);
}

TEST(NonparamScore, SaturationIsExact) {
  // rho >= log(1 + alpha) lets the ball reach mu* = x, so the score is 1.
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> alpha_dist(0.1, 5.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = alpha_dist(rng);
    const double x = std::sqrt(a);  // alpha = x^2 against N(0, 1) moments
    const double margin = (trial % 2 == 0) ? 1e-6 : -1e-6;
    const double rho = std::log1p(a) + margin;
    const auto r =
        osr::optimistic_nonparam_score(scalar(x), AmbiguitySpec(scalar_pair(0, 1), rho));
    if (margin > 0.0)
      EXPECT_EQ(r.score, 1.0);
    else
      EXPECT_LT(r.score, 1.0);
  }
}

TEST(NonparamScore, ZeroRadiusClosedForm) {
  const AmbiguitySpec spec(scalar_pair(0, 1), 0.0);
  const auto r = osr::optimistic_nonparam_score(scalar(2.0), spec);
  EXPECT_TRUE(r.gamma_at_infinity);
  EXPECT_NEAR(r.score, 1.0 / (1.0 + 4.0), 1e-12);
}

TEST(NonparamScore, OptimizerStaysInUncertaintySet) {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> rho_dist(0.01, 2.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const MomentPair nominal(oracle::random_vector(d, rng),
                             oracle::random_pd(d, rng));
    const AmbiguitySpec spec(nominal, rho_dist(rng));
    const VectorXd x = 2.0 * oracle::random_vector(d, rng);
    const auto r = osr::optimistic_nonparam_score(x, spec);
    EXPECT_TRUE(osr::in_uncertainty_set(spec, r.optimizer));
    // optimism: the optimizer can only improve on the nominal score
    const double nominal_score = 1.0 / (1.0 + r.alpha);
    EXPECT_GE(r.score, nominal_score - 1e-12);
    EXPECT_LE(r.score, 1.0);
  }
}

TEST(NonparamScore, ConstraintActiveWhenUnsaturated) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const MomentPair nominal(oracle::random_vector(d, rng),
                             oracle::random_pd(d, rng));
    const VectorXd x = nominal.mean() + 3.0 * oracle::random_vector(d, rng);
    const double alpha = osr::cholesky(nominal.cov()).quad_form(x - nominal.mean());
    if (alpha < 0.5) continue;
    const double rho = 0.5 * std::log1p(alpha);  // strictly inside saturation
    const auto r = osr::optimistic_nonparam_score(x, AmbiguitySpec(nominal, rho));
    EXPECT_NEAR(osr::divergence(nominal, r.optimizer), rho, 1e-6 * (1.0 + rho));
  }
}

TEST(GaussianScore, ScalarCenterExample) {
  // x = mu, d = 1, sigma = 1, rho = 1: the stationarity condition reduces to
  // 1 + log(1 + 1/g) - 1/g = 0 with root g ~ 0.4657.
  const AmbiguitySpec spec(scalar_pair(0, 1), 1.0);
  const auto r = osr::optimistic_gaussian_loglik(scalar(0.0), spec);
  EXPECT_NEAR(r.gamma_star, 0.46594, 5e-4);
  const double var_star = r.gamma_star / (1.0 + r.gamma_star);
  EXPECT_NEAR(r.optimizer.cov()(0, 0), var_star, 1e-9);
  EXPECT_NEAR(r.score, -std::log(var_star), 1e-8);
}

TEST(GaussianScore, ZeroRadiusClosedForm) {
  MatrixXd cov(1, 1);
  cov << 2.0;
  const AmbiguitySpec spec(MomentPair(scalar(1.0), cov), 0.0);
  const auto r = osr::optimistic_gaussian_loglik(scalar(3.0), spec);
  EXPECT_TRUE(r.gamma_at_infinity);
  EXPECT_NEAR(r.score, -2.0 - std::log(2.0), 1e-12);
}

TEST(GaussianScore, DualityGapVanishes) {
  // primal value of the optimizer equals d + log det S_hat - min phi2, by
  // strong duality; check both sides numerically
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> rho_dist(0.05, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const MomentPair nominal(oracle::random_vector(d, rng),
                             oracle::random_pd(d, rng));
    const double rho = rho_dist(rng);
    const VectorXd x = oracle::random_vector(d, rng);
    const auto r = osr::optimistic_gaussian_loglik(x, AmbiguitySpec(nominal, rho));
    const double phi_min = osr::phi2(r.gamma_star, rho, r.alpha, d).value;
    const double dual = d + osr::cholesky(nominal.cov()).log_det() - phi_min;
    EXPECT_NEAR(-r.score, dual, 1e-6 * (1.0 + std::abs(dual)));
  }
}

TEST(GaussianScore, OptimizerStaysInUncertaintySet) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> rho_dist(0.05, 2.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const MomentPair nominal(oracle::random_vector(d, rng),
                             oracle::random_pd(d, rng));
    const AmbiguitySpec spec(nominal, rho_dist(rng));
    const VectorXd x = 2.0 * oracle::random_vector(d, rng);
    const auto r = osr::optimistic_gaussian_loglik(x, spec);
    EXPECT_TRUE(osr::in_uncertainty_set(spec, r.optimizer));
    const auto nominal_factor = osr::cholesky(nominal.cov());
    const double nominal_loglik = -r.alpha - nominal_factor.log_det();
    EXPECT_GE(r.score, nominal_loglik - 1e-9);
  }
}

TEST(ProjectMean, HandExample) {
  // Omega = I, x = 3, mu_hat = 0, eps = 1: lambda* = 3 - 1 = 2, mu* = 1,
  // g = (sqrt(1) - sqrt(9))^2 = 4
  const auto f = osr::cholesky(MatrixXd::Identity(1, 1));
  const auto p = osr::project_mean(f, scalar(0.0), scalar(3.0), 1.0);
  EXPECT_NEAR(p.lambda_star, 2.0, 1e-12);
  EXPECT_NEAR(p.mu_star(0), 1.0, 1e-12);
  EXPECT_NEAR(p.g_value, 4.0, 1e-12);
}

TEST(ProjectMean, InactiveConstraint) {
  const auto f = osr::cholesky(MatrixXd::Identity(2, 2));
  VectorXd mu_hat = VectorXd::Zero(2);
  VectorXd x(2);
  x << 0.5, 0.5;
  const auto p = osr::project_mean(f, mu_hat, x, 1.0);  // eps >= |x|^2 = 0.5
  EXPECT_EQ(p.lambda_star, 0.0);
  EXPECT_EQ(p.g_value, 0.0);
  EXPECT_TRUE(p.mu_star.isApprox(x));
}

TEST(ProjectMean, ZeroEpsilonLimit) {
  const auto f = osr::cholesky(MatrixXd::Identity(1, 1));
  const auto p = osr::project_mean(f, scalar(1.0), scalar(4.0), 0.0);
  EXPECT_TRUE(std::isinf(p.lambda_star));
  EXPECT_NEAR(p.mu_star(0), 1.0, 1e-15);
  EXPECT_NEAR(p.g_value, 9.0, 1e-12);
}

TEST(ProjectMean, BeatsFeasibleGrid) {
  // the reported optimum should weakly dominate any feasible point on a line
  // between mu_hat and x
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const MatrixXd sigma = oracle::random_pd(d, rng);
    const auto f = osr::cholesky(sigma);
    const VectorXd mu_hat = oracle::random_vector(d, rng);
    const VectorXd x = oracle::random_vector(d, rng);
    const double eps = 0.3;
    const auto p = osr::project_mean(f, mu_hat, x, eps);
    EXPECT_LE(f.quad_form(p.mu_star - mu_hat), eps + 1e-9);
    EXPECT_NEAR(f.quad_form(p.mu_star - x), p.g_value, 1e-9 * (1.0 + p.g_value));
    for (int i = 0; i <= 100; ++i) {
      const double t = i / 100.0;
      const VectorXd mu = (1.0 - t) * mu_hat + t * x;
      if (f.quad_form(mu - mu_hat) <= eps)
        EXPECT_GE(f.quad_form(mu - x), p.g_value - 1e-9);
    }
  }
}

TEST(ProjectMean, NegativeEpsilonRejected) {
  const auto f = osr::cholesky(MatrixXd::Identity(1, 1));
  EXPECT_THROW(osr::project_mean(f, scalar(0.0), scalar(1.0), -1.0),
               osr::DomainError);
}

TEST(SolverResult, DimensionMismatchThrows) {
  const AmbiguitySpec spec(scalar_pair(0, 1), 1.0);
  EXPECT_THROW(osr::optimistic_nonparam_score(VectorXd::Zero(2), spec),
               osr::DimensionMismatch);
  EXPECT_THROW(osr::optimistic_gaussian_loglik(VectorXd::Zero(2), spec),
               osr::DimensionMismatch);
}
