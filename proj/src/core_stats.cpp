#include "fidlens/core_stats.hpp"

#include <cmath>
#include <string>

#include "fidlens/error.hpp"
#include "fidlens/kernels.hpp"

namespace fidlens {
namespace {

void Symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace

void CheckFinite(const FeatureMatrix& features, const char* what) {
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index k = 0; k < features.cols(); ++k) {
      if (!std::isfinite(features(i, k))) {
        Fail(ErrorKind::kInvalidData,
             std::string(what) + " has a non-finite entry at row " +
                 std::to_string(i) + ", column " + std::to_string(k));
      }
    }
  }
}

GaussianStats ComputeStats(const FeatureMatrix& features) {
  if (features.rows() < 2) {
    Fail(ErrorKind::kInsufficientSamples,
         "covariance needs at least 2 rows, got " +
             std::to_string(features.rows()));
  }
  CheckFinite(features, "feature matrix");

  GaussianStats stats;
  stats.count = static_cast<std::size_t>(features.rows());
  stats.mean = kernels::omp::ColumnMeans(features);
  stats.cov = kernels::omp::Scatter(features, stats.mean, Vector()) /
              static_cast<double>(features.rows() - 1);
  Symmetrize(stats.cov);
  return stats;
}

GaussianStats UpdateStats(const GaussianStats& stats, const Vector& f,
                          std::size_t new_count) {
  Require(new_count >= 3, "incremental update needs an updated set size >= 3");
  Require(stats.count + 1 == new_count,
          "stats.count must be new_count - 1 (count " +
              std::to_string(stats.count) + ", new_count " +
              std::to_string(new_count) + ")");
  Require(f.size() == stats.dim(), "feature dimension mismatch");

  const double n = static_cast<double>(new_count);
  const Vector delta = f - stats.mean;

  GaussianStats out;
  out.count = new_count;
  out.mean = ((n - 1.0) / n) * stats.mean + f / n;
  out.cov = ((n - 2.0) / (n - 1.0)) * stats.cov +
            (delta * delta.transpose()) / n;
  Symmetrize(out.cov);
  return out;
}

GaussianStats WeightedStatsLinear(const FeatureMatrix& features,
                                  const Vector& weights) {
  Require(weights.size() == features.rows(),
          "weight vector length " + std::to_string(weights.size()) +
              " does not match row count " + std::to_string(features.rows()));
  Require(features.rows() >= 1, "weighted stats need at least one row");

  GaussianStats stats;
  stats.count = static_cast<std::size_t>(features.rows());
  stats.mean = kernels::omp::WeightedColumnMeans(features, weights);
  stats.cov = kernels::omp::Scatter(features, stats.mean, weights) /
              weights.sum();
  Symmetrize(stats.cov);
  return stats;
}

Vector NormalizedLinearWeights(const SampleWeights& weights) {
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights.logw[i])) {
      Fail(ErrorKind::kInvalidData,
           "log-weight " + std::to_string(i) + " is not finite");
    }
  }
  if (weights.size() == 0) return Vector();
  const double top = weights.logw.maxCoeff();
  return (weights.logw.array() - top).exp().matrix();
}

GaussianStats WeightedStats(const FeatureMatrix& features,
                            const SampleWeights& weights) {
  return WeightedStatsLinear(features, NormalizedLinearWeights(weights));
}

}  // namespace fidlens
