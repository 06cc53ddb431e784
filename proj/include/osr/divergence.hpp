#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "osr/linalg.hpp"

namespace osr {

inline constexpr double kDivergenceClamp = 1e-9;
inline constexpr double kMembershipSlack = 1e-9;

// Moment-based divergence
//   D((mu1,S1) || (mu2,S2)) = (mu2-mu1)' S2^{-1} (mu2-mu1)
//                           + Tr(S1 S2^{-1}) - log det(S1 S2^{-1}) - d.
// Asymmetric in its arguments. Round-off negatives within kDivergenceClamp
// are clamped to zero; anything more negative means the linear algebra is
// broken and raises InternalError.
inline double divergence(const MomentPair& from, const MomentPair& to) {
  if (from.dim() != to.dim())
    throw DimensionMismatch("divergence: dimensions " +
                            std::to_string(from.dim()) + " vs " +
                            std::to_string(to.dim()));
  const int d = from.dim();
  const CholeskyFactor f_to = cholesky(to.cov());
  const CholeskyFactor f_from = cholesky(from.cov());
  const double mahalanobis = f_to.quad_form(to.mean() - from.mean());
  double trace = 0.0;
  for (int j = 0; j < d; ++j) trace += f_to.solve(from.cov().col(j))(j);
  const double log_det_ratio = f_from.log_det() - f_to.log_det();
  double value = mahalanobis + trace - log_det_ratio - d;
  if (value < 0.0) {
    if (value < -kDivergenceClamp)
      throw InternalError("divergence: value " + std::to_string(value) +
                          " below the negativity clamp");
    value = 0.0;
  }
  return value;
}

// Twice the KL divergence between the Gaussians N(p) and N(q) equals the
// moment-based divergence; same code path by construction.
inline double kl_gaussian(const MomentPair& p, const MomentPair& q) {
  return divergence(p, q) / 2.0;
}

// Nominal moment pair with a divergence-ball radius around it. Membership is
// measured FROM the nominal TO the candidate.
class AmbiguitySpec {
 public:
  AmbiguitySpec(MomentPair nominal, double radius)
      : nominal_(std::move(nominal)), radius_(radius) {
    if (!(radius >= 0.0))
      throw DomainError("AmbiguitySpec: radius " + std::to_string(radius) +
                        " must be nonnegative");
  }

  const MomentPair& nominal() const { return nominal_; }
  double radius() const { return radius_; }
  int dim() const { return nominal_.dim(); }

 private:
  MomentPair nominal_;
  double radius_;
};

// Additive slack keeps boundary optimizers from the solvers feasible.
inline bool in_uncertainty_set(const AmbiguitySpec& spec,
                               const MomentPair& candidate) {
  return divergence(spec.nominal(), candidate) <=
         spec.radius() + kMembershipSlack;
}

}  // namespace osr
