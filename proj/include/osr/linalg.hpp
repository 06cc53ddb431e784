#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "osr/errors.hpp"

namespace osr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kPivotTol = 1e-13;

// Lower-triangular Cholesky factor of a positive definite matrix.
class CholeskyFactor {
 public:
  const MatrixXd& lower() const { return lower_; }
  int dim() const { return static_cast<int>(lower_.rows()); }

  // log det of the factored matrix: 2 * sum of log diagonal entries.
  double log_det() const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += std::log(lower_(i, i));
    return 2.0 * s;
  }

  // Solves M y = b for the factored matrix M via two triangular solves.
  VectorXd solve(const VectorXd& b) const {
    VectorXd y = lower_.triangularView<Eigen::Lower>().solve(b);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
  }

  // w' M^{-1} w for the factored matrix M.
  double quad_form(const VectorXd& w) const {
    if (w.size() != lower_.rows())
      throw DimensionMismatch("quad_form: vector length " +
                              std::to_string(w.size()) + " vs dimension " +
                              std::to_string(lower_.rows()));
    VectorXd y = lower_.triangularView<Eigen::Lower>().solve(w);
    return y.squaredNorm();
  }

  // Reconstructs the source matrix L L'.
  MatrixXd reconstruct() const { return lower_ * lower_.transpose(); }

 private:
  explicit CholeskyFactor(MatrixXd lower) : lower_(std::move(lower)) {}
  friend CholeskyFactor cholesky(const MatrixXd& m);

  MatrixXd lower_;
};

// Plain left-looking Cholesky. Reads the lower triangle of m only.
// Throws NotPositiveDefinite when a pivot falls below kPivotTol times the
// largest diagonal entry.
inline CholeskyFactor cholesky(const MatrixXd& m) {
  if (m.rows() != m.cols())
    throw DimensionMismatch("cholesky: matrix is not square");
  const int d = static_cast<int>(m.rows());
  const double threshold = kPivotTol * m.diagonal().maxCoeff();
  MatrixXd lower = MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    double pivot = m(j, j);
    for (int k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (pivot <= threshold || !(pivot > 0.0))
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(pivot) +
                                " at column " + std::to_string(j));
    lower(j, j) = std::sqrt(pivot);
    for (int i = j + 1; i < d; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / lower(j, j);
    }
  }
  return CholeskyFactor(std::move(lower));
}

// A mean vector paired with a symmetric positive definite covariance matrix.
// Immutable after construction; construction validates both invariants.
class MomentPair {
 public:
  MomentPair(VectorXd mean, MatrixXd cov)
      : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size())
      throw DimensionMismatch("MomentPair: mean length " +
                              std::to_string(mean_.size()) + " vs covariance " +
                              std::to_string(cov_.rows()) + "x" +
                              std::to_string(cov_.cols()));
    for (int i = 0; i < cov_.rows(); ++i)
      for (int j = i + 1; j < cov_.cols(); ++j)
        if (std::abs(cov_(i, j) - cov_(j, i)) > kSymmetryTol)
          throw DataError("MomentPair: covariance is not symmetric at (" +
                          std::to_string(i) + "," + std::to_string(j) + ")");
    cholesky(cov_);  // positive definiteness gate
  }

  const VectorXd& mean() const { return mean_; }
  const MatrixXd& cov() const { return cov_; }
  int dim() const { return static_cast<int>(mean_.size()); }

 private:
  VectorXd mean_;
  MatrixXd cov_;
};

// Feature matrix with optional binary labels. Labels, when present, must be
// 0/1 and cover every row.
class Dataset {
 public:
  Dataset(MatrixXd features, std::vector<int> labels = {})
      : features_(std::move(features)), labels_(std::move(labels)) {
    if (features_.rows() < 1 || features_.cols() < 1)
      throw EmptyInput("Dataset: need at least one row and one column");
    if (!features_.allFinite())
      throw DataError("Dataset: non-finite feature entry");
    if (!labels_.empty()) {
      if (static_cast<Eigen::Index>(labels_.size()) != features_.rows())
        throw DimensionMismatch("Dataset: label count " +
                                std::to_string(labels_.size()) + " vs " +
                                std::to_string(features_.rows()) + " rows");
      for (int y : labels_)
        if (y != 0 && y != 1)
          throw DataError("Dataset: label " + std::to_string(y) +
                          " is not 0 or 1");
    }
  }

  const MatrixXd& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  bool has_labels() const { return !labels_.empty(); }
  Eigen::Index rows() const { return features_.rows(); }
  int dim() const { return static_cast<int>(features_.cols()); }

  // Row indices belonging to class c.
  std::vector<Eigen::Index> class_indices(int c) const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < rows(); ++i)
      if (labels_[static_cast<std::size_t>(i)] == c) out.push_back(i);
    return out;
  }

 private:
  MatrixXd features_;
  std::vector<int> labels_;
};

// Sample mean and 1/n covariance. The 1/n normalization (not 1/(n-1)) is
// deliberate and load-bearing for the radius calibration downstream.
inline MomentPair sample_moments(const MatrixXd& data) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw DomainError("sample_moments: need at least 2 rows");
  VectorXd mean = data.colwise().mean();
  MatrixXd centered = data.rowwise() - mean.transpose();
  MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
  cov = ((cov + cov.transpose()) / 2.0).eval();
  try {
    return MomentPair(std::move(mean), std::move(cov));
  } catch (const NotPositiveDefinite&) {
    throw DegenerateSample("sample_moments: covariance is not positive definite");
  }
}

// Ledoit-Wolf shrinkage toward the scaled identity, on top of the 1/n sample
// covariance. Always positive definite unless every row is identical.
inline MomentPair ledoit_wolf(const MatrixXd& data) {
  const Eigen::Index n = data.rows();
  const int d = static_cast<int>(data.cols());
  if (n < 2) throw DomainError("ledoit_wolf: need at least 2 rows");
  VectorXd mean = data.colwise().mean();
  MatrixXd centered = data.rowwise() - mean.transpose();
  MatrixXd s = (centered.transpose() * centered) / static_cast<double>(n);
  s = ((s + s.transpose()) / 2.0).eval();
  const double m = s.trace() / d;
  if (m <= 0.0) throw DegenerateSample("ledoit_wolf: all rows identical");
  const MatrixXd target = m * MatrixXd::Identity(d, d);
  const double delta2 = (s - target).squaredNorm() / d;
  if (delta2 == 0.0) return MomentPair(std::move(mean), target);
  double bbar2 = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const VectorXd xt = centered.row(t);
    bbar2 += (xt * xt.transpose() - s).squaredNorm() / d;
  }
  bbar2 /= static_cast<double>(n) * static_cast<double>(n);
  const double b2 = std::min(bbar2, delta2);
  MatrixXd cov = (b2 / delta2) * target + (1.0 - b2 / delta2) * s;
  try {
    return MomentPair(std::move(mean), std::move(cov));
  } catch (const NotPositiveDefinite&) {
    // b2 = 0 with a singular S (e.g. n = 2, where both centered rows are
    // negatives of each other) leaves nothing to shrink with
    throw DegenerateSample("ledoit_wolf: shrinkage weight vanished on a "
                           "singular sample covariance");
  }
}

}  // namespace osr
