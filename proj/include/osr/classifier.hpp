#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "osr/calibration.hpp"
#include "osr/divergence.hpp"
#include "osr/linalg.hpp"
#include "osr/solver.hpp"

namespace osr {

// ---------------------------------------------------------------------------
// Radius policies and estimators
// ---------------------------------------------------------------------------

struct CltPolicy {
  double alpha = 0.5;
};

struct FixedPolicy {
  double rho0 = 0.0;
  double rho1 = 0.0;
};

struct CrossValidationPolicy {
  std::vector<double> grid;
  int folds = 5;
  int trials = 1;
};

using RadiusPolicy = std::variant<CltPolicy, CrossValidationPolicy, FixedPolicy>;

// Default log-spaced CV grid, 10^-3 .. 10^1 over 9 points.
inline std::vector<double> default_radius_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 9; ++i) grid.push_back(std::pow(10.0, -3.0 + 0.5 * i));
  return grid;
}

enum class Estimator { Sample, LedoitWolf };

inline const char* to_string(Estimator e) {
  return e == Estimator::Sample ? "sample" : "ledoit-wolf";
}

inline MomentPair estimate_moments(Estimator estimator, const MatrixXd& data) {
  return estimator == Estimator::Sample ? sample_moments(data)
                                        : ledoit_wolf(data);
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

// Two ambiguity specs plus a tuned log-threshold. Immutable after training;
// prediction is pure.
struct ClassifierModel {
  ScoreMode mode;
  AmbiguitySpec spec0;
  AmbiguitySpec spec1;
  double log_threshold = 0.0;  // log tau*
  struct Metadata {
    std::string estimator;
    std::string radius_policy;
    std::uint64_t seed = 0;
  } metadata;

  int dim() const { return spec0.dim(); }
};

// log R(x). Nonparametric: log(1+q0) - log(1+q1) with q_c the optimal
// constrained Mahalanobis value; Gaussian: (L1 - L0)/2 from the translated
// log-likelihoods. Everything stays in log space.
inline double log_ratio(const ClassifierModel& model, const VectorXd& x) {
  if (x.size() != model.dim())
    throw DimensionMismatch("log_ratio: point dimension " +
                            std::to_string(x.size()) + " vs model " +
                            std::to_string(model.dim()));
  if (model.mode == ScoreMode::Nonparametric) {
    const SolverResult r0 = optimistic_nonparam_score(x, model.spec0);
    const SolverResult r1 = optimistic_nonparam_score(x, model.spec1);
    auto mahalanobis = [&x](const SolverResult& r) {
      return cholesky(r.optimizer.cov()).quad_form(r.optimizer.mean() - x);
    };
    return std::log1p(mahalanobis(r0)) - std::log1p(mahalanobis(r1));
  }
  const SolverResult r0 = optimistic_gaussian_loglik(x, model.spec0);
  const SolverResult r1 = optimistic_gaussian_loglik(x, model.spec1);
  return 0.5 * (r1.score - r0.score);
}

// Exact maximizer of
//   sum 1{lr0_i < t} + sum 1{lr1_i >= t}
// over all real t. Candidates are the distinct observed log-ratios plus
// max + 1; ties break to the smallest candidate.
inline double tune_threshold(const std::vector<double>& log_ratios0,
                             const std::vector<double>& log_ratios1) {
  if (log_ratios0.empty() && log_ratios1.empty())
    throw EmptyInput("tune_threshold: both classes empty");
  std::vector<double> candidates;
  candidates.reserve(log_ratios0.size() + log_ratios1.size() + 1);
  candidates.insert(candidates.end(), log_ratios0.begin(), log_ratios0.end());
  candidates.insert(candidates.end(), log_ratios1.begin(), log_ratios1.end());
  const double top = *std::max_element(candidates.begin(), candidates.end());
  candidates.push_back(top + 1.0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  double best_t = candidates.front();
  std::size_t best_objective = 0;
  for (const double t : candidates) {
    std::size_t objective = 0;
    for (const double r : log_ratios0) objective += (r < t) ? 1 : 0;
    for (const double r : log_ratios1) objective += (r >= t) ? 1 : 0;
    if (objective > best_objective) {
      best_objective = objective;
      best_t = t;
    }
  }
  return best_t;
}

// Label 1 iff log R(x) >= log tau* (ties go to 1).
inline int predict(const ClassifierModel& model, const VectorXd& x) {
  return log_ratio(model, x) >= model.log_threshold ? 1 : 0;
}

// Fraction of correctly labeled rows under an arbitrary predictor.
inline double ccr(const Dataset& data,
                  const std::function<int(const VectorXd&)>& predictor) {
  if (!data.has_labels()) throw EmptyInput("ccr: dataset has no labels");
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    if (predictor(data.features().row(i)) ==
        data.labels()[static_cast<std::size_t>(i)])
      ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.rows());
}

inline double ccr(const ClassifierModel& model, const Dataset& data) {
  return ccr(data, [&model](const VectorXd& x) { return predict(model, x); });
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

enum class Baseline { Mdc, Lda, Qda, Rqda };

struct BaselineSpec {
  Baseline kind = Baseline::Mdc;
  double rho0 = 0.0;  // RQDA shrinkage per class
  double rho1 = 0.0;
  std::size_t n0 = 1;  // class counts, used by the LDA pooled covariance
  std::size_t n1 = 1;
};

// MDC: argmin_c (mu_c - x)' S_c^{-1} (mu_c - x); QDA adds log det S_c;
// LDA uses the count-weighted pooled covariance; RQDA is QDA on S_c + rho_c I.
// Ties classify as 1, matching predict.
inline int baseline_predict(const BaselineSpec& spec, const MomentPair& class0,
                            const MomentPair& class1, const VectorXd& x) {
  if (class0.dim() != class1.dim() || x.size() != class0.dim())
    throw DimensionMismatch("baseline_predict: dimension mismatch");
  const int d = class0.dim();
  auto discriminant = [&x](const MomentPair& m, bool with_log_det) {
    const CholeskyFactor f = cholesky(m.cov());
    return f.quad_form(x - m.mean()) + (with_log_det ? f.log_det() : 0.0);
  };
  double d0 = 0.0, d1 = 0.0;
  switch (spec.kind) {
    case Baseline::Mdc:
      d0 = discriminant(class0, false);
      d1 = discriminant(class1, false);
      break;
    case Baseline::Lda: {
      const double n0 = static_cast<double>(spec.n0);
      const double n1 = static_cast<double>(spec.n1);
      MatrixXd pooled = (n0 * class0.cov() + n1 * class1.cov()) / (n0 + n1);
      const CholeskyFactor f = cholesky(pooled);
      d0 = f.quad_form(x - class0.mean());
      d1 = f.quad_form(x - class1.mean());
      break;
    }
    case Baseline::Qda:
      d0 = discriminant(class0, true);
      d1 = discriminant(class1, true);
      break;
    case Baseline::Rqda: {
      const MatrixXd eye = MatrixXd::Identity(d, d);
      d0 = discriminant(MomentPair(class0.mean(), class0.cov() + spec.rho0 * eye),
                        true);
      d1 = discriminant(MomentPair(class1.mean(), class1.cov() + spec.rho1 * eye),
                        true);
      break;
    }
  }
  return d1 <= d0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Training and cross-validation
// ---------------------------------------------------------------------------

namespace detail {

struct ClassSplit {
  MatrixXd data0;
  MatrixXd data1;
};

inline MatrixXd take_rows(const MatrixXd& m,
                          const std::vector<Eigen::Index>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

inline ClassSplit split_by_class(const Dataset& data) {
  if (!data.has_labels()) throw ClassMissing("train: dataset has no labels");
  const auto idx0 = data.class_indices(0);
  const auto idx1 = data.class_indices(1);
  if (idx0.empty()) throw ClassMissing("train: class 0 has no samples");
  if (idx1.empty()) throw ClassMissing("train: class 1 has no samples");
  return {take_rows(data.features(), idx0), take_rows(data.features(), idx1)};
}

}  // namespace detail

struct TrainOptions {
  Estimator estimator = Estimator::Sample;
  bool tune_threshold = true;  // when false, tau = 1 (log_threshold = 0)
  std::uint64_t seed = 0;
  double jitter = 0.0;  // scale of the optional diagonal repair, 0 = off
};

namespace detail {

inline MomentPair estimate_with_jitter(Estimator estimator, const MatrixXd& data,
                                       double jitter) {
  if (jitter <= 0.0) return estimate_moments(estimator, data);
  try {
    return estimate_moments(estimator, data);
  } catch (const DegenerateSample&) {
    VectorXd mean = data.colwise().mean();
    MatrixXd centered = data.rowwise() - mean.transpose();
    MatrixXd s =
        (centered.transpose() * centered) / static_cast<double>(data.rows());
    s = ((s + s.transpose()) / 2.0).eval();
    const double scale = jitter * s.trace() / data.cols();
    s += scale * MatrixXd::Identity(data.cols(), data.cols());
    return MomentPair(std::move(mean), std::move(s));
  }
}

}  // namespace detail

inline ClassifierModel train(const Dataset& data, ScoreMode mode,
                             const RadiusPolicy& policy,
                             const TrainOptions& options);

struct CrossValidationResult {
  double best_radius = 0.0;
  // (radius, mean CCR over folds and trials), in grid order after dedup
  std::vector<std::pair<double, double>> table;
};

// Stratified k-fold search over a shared radius rho0 = rho1. Fold assignment
// preserves class proportions within one sample; deterministic for a fixed
// seed; duplicate grid entries are collapsed.
inline CrossValidationResult cross_validate(const Dataset& data, ScoreMode mode,
                                            std::vector<double> grid, int folds,
                                            int trials, Estimator estimator,
                                            std::uint64_t seed) {
  if (grid.empty()) throw EmptyInput("cross_validate: empty radius grid");
  if (folds < 2) throw DomainError("cross_validate: need at least 2 folds");
  if (trials < 1) throw DomainError("cross_validate: need at least 1 trial");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const auto idx0 = data.class_indices(0);
  const auto idx1 = data.class_indices(1);
  if (idx0.size() < static_cast<std::size_t>(folds) ||
      idx1.size() < static_cast<std::size_t>(folds))
    throw ClassMissing("cross_validate: each class needs >= folds samples");

  std::vector<double> mean_ccr(grid.size(), 0.0);
  int cells = 0;
  for (int trial = 0; trial < trials; ++trial) {
    auto rng = detail::make_rng(seed, static_cast<std::uint64_t>(trial));
    auto shuffled0 = idx0;
    auto shuffled1 = idx1;
    std::shuffle(shuffled0.begin(), shuffled0.end(), rng);
    std::shuffle(shuffled1.begin(), shuffled1.end(), rng);
    // round-robin keeps per-fold class counts within one of each other
    std::vector<std::vector<Eigen::Index>> fold_rows(
        static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < shuffled0.size(); ++i)
      fold_rows[i % folds].push_back(shuffled0[i]);
    for (std::size_t i = 0; i < shuffled1.size(); ++i)
      fold_rows[i % folds].push_back(shuffled1[i]);

    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> train_rows, test_rows = fold_rows[f];
      for (int g = 0; g < folds; ++g)
        if (g != f)
          train_rows.insert(train_rows.end(), fold_rows[g].begin(),
                            fold_rows[g].end());
      auto subset = [&data](const std::vector<Eigen::Index>& rows) {
        std::vector<int> labels;
        labels.reserve(rows.size());
        for (Eigen::Index r : rows)
          labels.push_back(data.labels()[static_cast<std::size_t>(r)]);
        return Dataset(detail::take_rows(data.features(), rows),
                       std::move(labels));
      };
      const Dataset train_set = subset(train_rows);
      const Dataset test_set = subset(test_rows);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        TrainOptions opts;
        opts.estimator = estimator;
        opts.seed = seed;
        const ClassifierModel model =
            train(train_set, mode, FixedPolicy{grid[g], grid[g]}, opts);
        mean_ccr[g] += ccr(model, test_set);
      }
      ++cells;
    }
  }
  CrossValidationResult result;
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    mean_ccr[g] /= cells;
    result.table.emplace_back(grid[g], mean_ccr[g]);
    if (mean_ccr[g] > mean_ccr[best]) best = g;
  }
  result.best_radius = grid[best];
  return result;
}

// One pass over the training data: per-class nominal moments, radii from the
// policy, ratio values for every training sample, then the exact threshold.
inline ClassifierModel train(const Dataset& data, ScoreMode mode,
                             const RadiusPolicy& policy,
                             const TrainOptions& options) {
  const auto split = detail::split_by_class(data);
  const int d = data.dim();
  if (split.data0.rows() < d + 1 || split.data1.rows() < d + 1)
    throw DegenerateSample("train: each class needs at least d + 1 samples");

  double rho0 = 0.0, rho1 = 0.0;
  std::string policy_name;
  if (const auto* clt = std::get_if<CltPolicy>(&policy)) {
    rho0 = clt_radius(static_cast<int>(split.data0.rows()), d, clt->alpha);
    rho1 = clt_radius(static_cast<int>(split.data1.rows()), d, clt->alpha);
    policy_name = "clt";
  } else if (const auto* fixed = std::get_if<FixedPolicy>(&policy)) {
    rho0 = fixed->rho0;
    rho1 = fixed->rho1;
    policy_name = "fixed";
  } else {
    const auto& cv = std::get<CrossValidationPolicy>(policy);
    const CrossValidationResult cvr =
        cross_validate(data, mode, cv.grid.empty() ? default_radius_grid() : cv.grid,
                       cv.folds, cv.trials, options.estimator, options.seed);
    rho0 = rho1 = cvr.best_radius;
    policy_name = "cv";
  }

  MomentPair nominal0 =
      detail::estimate_with_jitter(options.estimator, split.data0, options.jitter);
  MomentPair nominal1 =
      detail::estimate_with_jitter(options.estimator, split.data1, options.jitter);
  ClassifierModel model{mode,
                        AmbiguitySpec(std::move(nominal0), rho0),
                        AmbiguitySpec(std::move(nominal1), rho1),
                        0.0,
                        {std::string(to_string(options.estimator)), policy_name,
                         options.seed}};
  if (options.tune_threshold) {
    std::vector<double> lr0, lr1;
    lr0.reserve(static_cast<std::size_t>(split.data0.rows()));
    lr1.reserve(static_cast<std::size_t>(split.data1.rows()));
    for (Eigen::Index i = 0; i < split.data0.rows(); ++i)
      lr0.push_back(log_ratio(model, split.data0.row(i)));
    for (Eigen::Index i = 0; i < split.data1.rows(); ++i)
      lr1.push_back(log_ratio(model, split.data1.row(i)));
    model.log_threshold = tune_threshold(lr0, lr1);
  }
  return model;
}

}  // namespace osr
