#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "osr/divergence.hpp"
#include "osr/linalg.hpp"

namespace osr {

// ---------------------------------------------------------------------------
// Chi-square machinery
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr int kGammaMaxTerms = 200;
inline constexpr double kGammaTermTol = 1e-14;

// Regularized lower incomplete gamma P(a, x), series expansion; converges
// quickly for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < kGammaMaxTerms; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kGammaTermTol) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) via Lentz's continued fraction;
// the right tool for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kGammaMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kGammaTermTol) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

}  // namespace detail

// CDF of the chi-square distribution with k degrees of freedom.
inline double chi2_cdf(double x, int k) {
  if (k < 1) throw DomainError("chi2_cdf: degrees of freedom must be >= 1");
  return detail::gamma_p(k / 2.0, x / 2.0);
}

// alpha-quantile of chi-square(k) by bisection on the CDF.
inline double chi2_quantile(double alpha, int k) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("chi2_quantile: alpha must lie in (0, 1)");
  if (k < 1)
    throw DomainError("chi2_quantile: degrees of freedom must be >= 1");
  double lo = 0.0;
  double hi = k + 10.0 * std::sqrt(2.0 * k) + 50.0;
  while (chi2_cdf(hi, k) < alpha) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, k) < alpha)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-12 * (1.0 + mid)) break;
  }
  return 0.5 * (lo + hi);
}

// Radius rule: rho = chi2_quantile(alpha, d(d+3)/2) / n.
inline double clt_radius(int n, int d, double alpha = 0.5) {
  if (n < 1 || d < 1) throw DomainError("clt_radius: need n >= 1 and d >= 1");
  return chi2_quantile(alpha, d * (d + 3) / 2) / n;
}

// ---------------------------------------------------------------------------
// Limiting-law sampling
// ---------------------------------------------------------------------------

// Third and fourth moment tensors of a random vector in isotropic coordinates
// (unit second moments). Fully symmetric under index permutation.
class MomentTensors {
 public:
  // Analytic standard-Gaussian tensors: third = 0, fourth by Isserlis.
  static MomentTensors gaussian(int d) {
    MomentTensors t(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l)
            t.fourth_[t.idx4(i, j, k, l)] = (i == j && k == l ? 1.0 : 0.0) +
                                            (i == k && j == l ? 1.0 : 0.0) +
                                            (i == l && j == k ? 1.0 : 0.0);
    return t;
  }

  int dim() const { return d_; }
  double third(int i, int j, int k) const { return third_[idx3(i, j, k)]; }
  double fourth(int i, int j, int k, int l) const {
    return fourth_[idx4(i, j, k, l)];
  }

 private:
  explicit MomentTensors(int d)
      : d_(d),
        third_(static_cast<std::size_t>(d) * d * d, 0.0),
        fourth_(static_cast<std::size_t>(d) * d * d * d, 0.0) {}

  std::size_t idx3(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * d_ + j) * d_ + k;
  }
  std::size_t idx4(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * d_ + j) * d_ + k) * d_ + l;
  }

  friend MomentTensors estimate_moment_tensors(const MatrixXd& samples);

  int d_;
  std::vector<double> third_;
  std::vector<double> fourth_;
};

// Empirical plug-in tensors from samples already in isotropic coordinates.
// Symmetric by construction (products of coordinates commute).
inline MomentTensors estimate_moment_tensors(const MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  const int d = static_cast<int>(samples.cols());
  if (n < d + 1)
    throw DegenerateSample("estimate_moment_tensors: need more than d samples");
  MomentTensors t(d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = samples.row(r);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double ij = row(i) * row(j);
        for (int k = 0; k < d; ++k) {
          t.third_[t.idx3(i, j, k)] += ij * row(k);
          for (int l = 0; l < d; ++l)
            t.fourth_[t.idx4(i, j, k, l)] += ij * row(k) * row(l);
        }
      }
  }
  for (double& v : t.third_) v /= static_cast<double>(n);
  for (double& v : t.fourth_) v /= static_cast<double>(n);
  return t;
}

namespace detail {

// Deterministic per-task RNG stream.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t task) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(task),
                    static_cast<std::uint32_t>(task >> 32)};
  return std::mt19937_64(seq);
}

// Factors a symmetric PSD matrix, tolerating round-off: exact Cholesky first,
// then a jittered retry, then an eigenvalue-clamped square root.
inline MatrixXd psd_factor(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
  if (eig.eigenvalues().minCoeff() < -1e-6)
    throw NotPsd("psd_factor: eigenvalue " +
                 std::to_string(eig.eigenvalues().minCoeff()) +
                 " signals inconsistent moment tensors");
  try {
    return cholesky(m).lower();
  } catch (const NotPositiveDefinite&) {
  }
  try {
    return cholesky(m + 1e-10 * MatrixXd::Identity(m.rows(), m.cols())).lower();
  } catch (const NotPositiveDefinite&) {
  }
  VectorXd clamped = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * clamped.asDiagonal();
}

}  // namespace detail

// Draws of H'H + Tr(Z^2)/2 where (H, upper triangle of Z) is jointly Gaussian:
//   cov(H) = I,  cov(H_i, Z_jk) = E[eta_i eta_j eta_k],
//   cov(Z_jk, Z_j'k') = E[eta_j eta_k eta_j' eta_k'] - delta_jk delta_j'k'.
// Deterministic given the seed; draw r uses the stream (seed, r).
inline std::vector<double> sample_limiting_law(const MomentTensors& tensors,
                                               int reps, std::uint64_t seed) {
  const int d = tensors.dim();
  const int nz = d * (d + 1) / 2;
  const int dim = d + nz;
  MatrixXd cov = MatrixXd::Zero(dim, dim);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(nz);
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) pairs.emplace_back(j, k);
  for (int i = 0; i < d; ++i) {
    cov(i, i) = 1.0;
    for (int p = 0; p < nz; ++p) {
      const auto [j, k] = pairs[static_cast<std::size_t>(p)];
      cov(i, d + p) = cov(d + p, i) = tensors.third(i, j, k);
    }
  }
  for (int p = 0; p < nz; ++p)
    for (int q = 0; q < nz; ++q) {
      const auto [j, k] = pairs[static_cast<std::size_t>(p)];
      const auto [j2, k2] = pairs[static_cast<std::size_t>(q)];
      cov(d + p, d + q) = tensors.fourth(j, k, j2, k2) -
                          (j == k ? 1.0 : 0.0) * (j2 == k2 ? 1.0 : 0.0);
    }
  const MatrixXd factor = detail::psd_factor(cov);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    auto rng = detail::make_rng(seed, static_cast<std::uint64_t>(r));
    std::normal_distribution<double> normal;
    VectorXd u(dim);
    for (int i = 0; i < dim; ++i) u(i) = normal(rng);
    const VectorXd v = factor * u;
    double hh = v.head(d).squaredNorm();
    double tr_z2 = 0.0;
    for (int p = 0; p < nz; ++p) {
      const auto [j, k] = pairs[static_cast<std::size_t>(p)];
      const double z = v(d + p);
      tr_z2 += (j == k ? 1.0 : 2.0) * z * z;
    }
    out.push_back(hh + 0.5 * tr_z2);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite-sample divergence simulation
// ---------------------------------------------------------------------------

enum class SampleGenerator { Gaussian, NormalizedChi2 };

inline const char* to_string(SampleGenerator g) {
  return g == SampleGenerator::Gaussian ? "gaussian" : "normalized_chi2";
}

struct DivergenceSimulation {
  std::vector<double> values;  // n * D((mu_n, S_n) || (m, S)) per rep
  int redraws;                 // reps re-drawn due to a singular S_n
};

// Each rep draws n i.i.d. vectors xi = C * zeta + m with unit-variance
// independent entries zeta, forms the 1/n sample moments and records
// n * D((mu_n, S_n) || (m, C C')). Singular reps are re-drawn and counted.
inline DivergenceSimulation simulate_divergence_distribution(
    SampleGenerator generator, int d, int n, int reps, std::uint64_t seed,
    const MatrixXd& transform, const VectorXd& shift) {
  if (n <= d + 1)
    throw DomainError("simulate_divergence_distribution: need n > d + 1");
  if (transform.rows() != d || transform.cols() != d || shift.size() != d)
    throw DimensionMismatch("simulate_divergence_distribution: transform/shift");
  MatrixXd s = transform * transform.transpose();
  s = ((s + s.transpose()) / 2.0).eval();
  const MomentPair truth(shift, s);
  DivergenceSimulation sim{{}, 0};
  sim.values.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      auto rng = detail::make_rng(
          seed, (static_cast<std::uint64_t>(r) << 20) + attempt);
      std::normal_distribution<double> normal;
      MatrixXd data(n, d);
      for (int t = 0; t < n; ++t)
        for (int j = 0; j < d; ++j) {
          const double g = normal(rng);
          data(t, j) = generator == SampleGenerator::Gaussian
                           ? g
                           : (g * g - 1.0) / std::sqrt(2.0);
        }
      data = ((data * transform.transpose()).rowwise() + shift.transpose())
                 .eval();
      try {
        const MomentPair moments = sample_moments(data);
        sim.values.push_back(n * divergence(moments, truth));
        break;
      } catch (const DegenerateSample&) {
        ++sim.redraws;
        if (attempt > 100)
          throw DegenerateSample(
              "simulate_divergence_distribution: persistent singular sample "
              "covariance");
      }
    }
  }
  return sim;
}

inline DivergenceSimulation simulate_divergence_distribution(
    SampleGenerator generator, int d, int n, int reps, std::uint64_t seed) {
  return simulate_divergence_distribution(generator, d, n, reps, seed,
                                          MatrixXd::Identity(d, d),
                                          VectorXd::Zero(d));
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov distances
// ---------------------------------------------------------------------------

// One-sample KS distance against a reference CDF.
inline double ks_distance(std::vector<double> samples,
                          const std::function<double(double)>& cdf) {
  if (samples.empty()) throw EmptyInput("ks_distance: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::max(f - i / n, (i + 1) / n - f));
  }
  return d;
}

// Two-sample KS distance.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw EmptyInput("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

}  // namespace osr
