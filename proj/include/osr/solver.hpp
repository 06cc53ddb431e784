#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "osr/divergence.hpp"
#include "osr/linalg.hpp"

namespace osr {

enum class ScoreMode { Nonparametric, Gaussian };

inline const char* to_string(ScoreMode mode) {
  return mode == ScoreMode::Nonparametric ? "nonparam" : "gaussian";
}

inline constexpr double kStationarityTol = 1e-10;
inline constexpr double kBracketCap = 1e12;
inline constexpr int kMaxIterations = 200;
inline constexpr double kAlphaZeroTol = 1e-14;

struct PhiEval {
  double value;
  double first;
  double second;
};

// phi1(g) = g*rho - g*log(1 + alpha/(1+g)), the nonparametric dual objective.
inline PhiEval phi1(double gamma, double rho, double alpha) {
  const double u = 1.0 + gamma;
  const double t = 1.0 + alpha / u;
  PhiEval e;
  e.value = gamma * rho - gamma * std::log(t);
  e.first = rho - std::log(t) + gamma * alpha / (u * (u + alpha));
  e.second = alpha * (2.0 * u + 2.0 * alpha + alpha * gamma) /
             (u * u * (u + alpha) * (u + alpha));
  return e;
}

// phi2(g) = g*rho + d*(g+1)*log(1+1/g) - (1+g)*log(1 + alpha/(1+g)), the
// Gaussian dual objective; defined for g > 0 only.
inline PhiEval phi2(double gamma, double rho, double alpha, int d) {
  if (!(gamma > 0.0))
    throw DomainError("phi2: gamma must be strictly positive");
  const double u = 1.0 + gamma;
  const double lg = std::log1p(1.0 / gamma);
  const double t = 1.0 + alpha / u;
  PhiEval e;
  e.value = gamma * rho + d * u * lg - u * std::log(t);
  e.first = rho + d * (lg - 1.0 / gamma) -
            (std::log(t) - alpha / (u + alpha));
  e.second = d / (gamma * gamma * u) +
             alpha * alpha / ((u + alpha) * (u + alpha) * u);
  return e;
}

struct MinimizeResult {
  double gamma_star;
  double residual;  // |phi'(gamma_star)|, or 0 at the gamma = 0 boundary
  int iterations;
};

namespace detail {

// Safeguarded Newton on a strictly increasing derivative with a sign-change
// bracket [lo, hi]. Falls back to bisection when a step leaves the bracket.
template <typename Deriv>
MinimizeResult newton_on_bracket(Deriv deriv, double lo, double hi,
                                 double gamma, int iterations) {
  for (; iterations < kMaxIterations; ++iterations) {
    const auto [d1, d2] = deriv(gamma);
    if (std::abs(d1) <= kStationarityTol)
      return {gamma, std::abs(d1), iterations};
    if (d1 > 0.0)
      hi = gamma;
    else
      lo = gamma;
    double next = gamma - d1 / d2;
    if (!std::isfinite(next) || next <= lo || next >= hi)
      next = 0.5 * (lo + hi);
    gamma = next;
    if (hi - lo <= 1e-12 * (1.0 + gamma))
      return {gamma, std::abs(deriv(gamma).first), iterations + 1};
  }
  throw NoConvergence("minimize_phi: no convergence after " +
                      std::to_string(kMaxIterations) + " iterations, residual " +
                      std::to_string(std::abs(deriv(gamma).first)));
}

}  // namespace detail

// Minimizes phi1 over gamma >= 0 (Nonparametric) or phi2 over gamma > 0
// (Gaussian, rho > 0). Bracket by doubling/halving from gamma = 1, then
// safeguarded Newton.
inline MinimizeResult minimize_phi(ScoreMode mode, double rho, double alpha,
                                   int d) {
  if (mode == ScoreMode::Nonparametric) {
    // phi1'(0) = rho - log(1 + alpha); nonnegative means 0 is optimal.
    if (rho - std::log1p(alpha) >= 0.0) return {0.0, 0.0, 0};
    auto deriv = [&](double g) {
      const PhiEval e = phi1(g, rho, alpha);
      return std::pair<double, double>(e.first, e.second);
    };
    double lo = 0.0, hi = 1.0;
    int it = 0;
    while (deriv(hi).first <= 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > kBracketCap || ++it > kMaxIterations)
        throw NoConvergence("minimize_phi: nonparametric bracket exceeded cap");
    }
    return detail::newton_on_bracket(deriv, lo, hi, 0.5 * (lo + hi), it);
  }
  if (!(rho > 0.0))
    throw DomainError("minimize_phi: Gaussian mode requires rho > 0");
  auto deriv = [&](double g) {
    const PhiEval e = phi2(g, rho, alpha, d);
    return std::pair<double, double>(e.first, e.second);
  };
  // phi2' tends to -inf as gamma drops to 0 and to rho > 0 at infinity, so a
  // sign change always exists.
  double lo = 1.0, hi = 1.0;
  int it = 0;
  if (deriv(1.0).first > 0.0) {
    do {
      hi = lo;
      lo /= 2.0;
      if (lo < 1e-300 || ++it > kMaxIterations)
        throw NoConvergence("minimize_phi: Gaussian lower bracket exhausted");
    } while (deriv(lo).first > 0.0);
  } else {
    do {
      lo = hi;
      hi *= 2.0;
      if (hi > kBracketCap || ++it > kMaxIterations)
        throw NoConvergence("minimize_phi: Gaussian bracket exceeded cap");
    } while (deriv(hi).first <= 0.0);
  }
  return detail::newton_on_bracket(deriv, lo, hi, 0.5 * (lo + hi), it);
}

// Result of an optimistic score evaluation. For the nonparametric mode the
// score is a probability in (0, 1]; for the Gaussian mode it is the translated
// log-likelihood L = -(mu*-x)' (S*)^{-1} (mu*-x) - log det S*, never
// exponentiated here.
struct SolverResult {
  double gamma_star;
  bool gamma_at_infinity;  // rho = 0 limit; gamma_star holds +inf
  MomentPair optimizer;
  double score;
  double alpha;  // (x - mu_hat)' S_hat^{-1} (x - mu_hat)
  int iterations;
  double residual;
};

// Optimistic nonparametric probability of the singleton {x} over the
// ambiguity ball: score = [1 + (mu*-x)' (S*)^{-1} (mu*-x)]^{-1} with
//   mu* = (x + g* mu_hat) / (1 + g*),
//   S*  = S_hat + (x - mu_hat)(x - mu_hat)' / (1 + g*).
inline SolverResult optimistic_nonparam_score(const VectorXd& x,
                                              const AmbiguitySpec& spec) {
  if (x.size() != spec.dim())
    throw DimensionMismatch("optimistic_nonparam_score: dimension mismatch");
  const MomentPair& nominal = spec.nominal();
  const VectorXd w = x - nominal.mean();
  const double alpha = cholesky(nominal.cov()).quad_form(w);
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (spec.radius() == 0.0) {
    // Attained only in the gamma -> infinity limit of the dual.
    return {inf, true, nominal, 1.0 / (1.0 + alpha), alpha, 0, 0.0};
  }
  if (alpha <= kAlphaZeroTol) {
    return {0.0, false, MomentPair(x, nominal.cov()), 1.0, alpha, 0, 0.0};
  }
  const MinimizeResult opt =
      minimize_phi(ScoreMode::Nonparametric, spec.radius(), alpha, spec.dim());
  const double g = opt.gamma_star;
  VectorXd mu_star = (x + g * nominal.mean()) / (1.0 + g);
  MatrixXd cov_star = nominal.cov() + (w * w.transpose()) / (1.0 + g);
  MomentPair optimizer(std::move(mu_star), std::move(cov_star));
  const double q = cholesky(optimizer.cov()).quad_form(optimizer.mean() - x);
  return {g,     false,          std::move(optimizer), 1.0 / (1.0 + q),
          alpha, opt.iterations, opt.residual};
}

// Optimistic Gaussian translated log-likelihood over the ambiguity ball
// intersected with the Gaussian family:
//   mu* = (x + g* mu_hat) / (1 + g*),
//   S*  = g*/(1+g*) S_hat + g*/(1+g*)^2 (x - mu_hat)(x - mu_hat)'.
inline SolverResult optimistic_gaussian_loglik(const VectorXd& x,
                                               const AmbiguitySpec& spec) {
  if (x.size() != spec.dim())
    throw DimensionMismatch("optimistic_gaussian_loglik: dimension mismatch");
  const MomentPair& nominal = spec.nominal();
  const VectorXd w = x - nominal.mean();
  const CholeskyFactor nominal_factor = cholesky(nominal.cov());
  const double alpha = nominal_factor.quad_form(w);
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (spec.radius() == 0.0) {
    const double score = -alpha - nominal_factor.log_det();
    return {inf, true, nominal, score, alpha, 0, 0.0};
  }
  const MinimizeResult opt =
      minimize_phi(ScoreMode::Gaussian, spec.radius(), alpha, spec.dim());
  const double g = opt.gamma_star;
  const double shrink = g / (1.0 + g);
  VectorXd mu_star = (x + g * nominal.mean()) / (1.0 + g);
  MatrixXd cov_star =
      shrink * nominal.cov() + (shrink / (1.0 + g)) * (w * w.transpose());
  MomentPair optimizer(std::move(mu_star), std::move(cov_star));
  const CholeskyFactor star_factor = cholesky(optimizer.cov());
  const double score =
      -star_factor.quad_form(optimizer.mean() - x) - star_factor.log_det();
  return {g,     false,          std::move(optimizer), score,
          alpha, opt.iterations, opt.residual};
}

struct MeanProjection {
  VectorXd mu_star;
  double lambda_star;
  double g_value;
};

// Closed-form solution of
//   min (mu - x)' Omega (mu - x)  s.t.  (mu - mu_hat)' Omega (mu - mu_hat) <= eps
// with Omega the inverse of the matrix behind sigma_factor. The eps = 0 case
// follows the eps -> 0 limit: mu* = mu_hat, lambda* reported as +inf.
inline MeanProjection project_mean(const CholeskyFactor& sigma_factor,
                                   const VectorXd& mu_hat, const VectorXd& x,
                                   double epsilon) {
  if (!(epsilon >= 0.0))
    throw DomainError("project_mean: epsilon must be nonnegative");
  const VectorXd w = x - mu_hat;
  const double wow = sigma_factor.quad_form(w);
  if (epsilon >= wow) return {x, 0.0, 0.0};
  if (epsilon == 0.0)
    return {mu_hat, std::numeric_limits<double>::infinity(), wow};
  const double lambda = std::sqrt(wow / epsilon) - 1.0;
  const double root_gap = std::sqrt(epsilon) - std::sqrt(wow);
  return {(x + lambda * mu_hat) / (1.0 + lambda), lambda, root_gap * root_gap};
}

}  // namespace osr
