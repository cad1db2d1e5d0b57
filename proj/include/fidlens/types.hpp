#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace fidlens {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// n x d, one sample per row. Row-major so a sample's features are contiguous.
using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-major 2-D grid used for importance maps, heatmaps and probability blocks.
using Grid = FeatureMatrix;

// Mean and covariance summary of a feature set. `count` is the number of rows
// the summary was computed from; the incremental update needs it.
struct GaussianStats {
  Vector mean;
  Matrix cov;
  std::size_t count = 0;

  Eigen::Index dim() const { return mean.size(); }
};

// Log-parameterized, strictly positive per-sample weights.
struct SampleWeights {
  Vector logw;

  static SampleWeights Uniform(Eigen::Index n) {
    return SampleWeights{Vector::Zero(n)};
  }
  Eigen::Index size() const { return logw.size(); }
};

}  // namespace fidlens
