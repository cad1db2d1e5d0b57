#pragma once

// Row-reduction kernels shared by every metric. Each kernel exists twice: a
// plain serial reference kept for testing and benchmarking, and an OpenMP
// version used by the library. The OpenMP versions reduce over fixed-size row
// blocks in a fixed order, so their results do not depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "fidlens/types.hpp"

namespace fidlens::kernels {

enum class KernelType { kPolynomial, kRbf };

// kPolynomial: (gamma * <x, y> + 1)^3, gamma = 1/d for standard KID.
// kRbf: exp(-gamma * |x - y|^2).
struct KernelSpec {
  KernelType type = KernelType::kPolynomial;
  double gamma = 1.0;
};

double EvaluateKernel(const KernelSpec& spec, const double* x, const double* y,
                      Eigen::Index d);

// xx and yy sum k over unordered pairs i < j within a subset; xy sums over all
// (i, j) pairs across the two subsets.
struct KernelSums {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
};

using IndexSpan = std::span<const std::size_t>;

// 0/1 matrix stored as the column indices of the ones, row by row.
struct BinaryRows {
  Eigen::Index cols = 0;
  std::vector<Eigen::Index> offsets{0};  // row r: [offsets[r], offsets[r+1])
  std::vector<Eigen::Index> indices;

  Eigen::Index rows() const {
    return static_cast<Eigen::Index>(offsets.size()) - 1;
  }
};

// False when some entry is neither 0 nor 1.
bool ToBinaryRows(const FeatureMatrix& x, BinaryRows* out);

// Rows per reduction block in the parallel kernels.
inline constexpr Eigen::Index kRowBlock = 1024;

namespace serial {

Vector ColumnMeans(const FeatureMatrix& x);
// sum_i w_i x_i / sum_i w_i
Vector WeightedColumnMeans(const FeatureMatrix& x, const Vector& w);
// sum_i w_i (x_i - c)(x_i - c)^T; empty `w` means unit weights.
Matrix Scatter(const FeatureMatrix& x, const Vector& center, const Vector& w);
// h_i = <linear, x_i - c> + (x_i - c)^T quad (x_i - c)
Vector RowQuadraticForms(const FeatureMatrix& x, const Vector& center,
                         const Vector& linear, const Matrix& quad);
KernelSums KernelBlockSums(const FeatureMatrix& x, IndexSpan x_rows,
                           const FeatureMatrix& y, IndexSpan y_rows,
                           const KernelSpec& spec);

// sum_i w_i x_i
Vector BinaryWeightedSums(const BinaryRows& x, const Vector& w);
// sum_i w_i x_i x_i^T, uncentered
Matrix BinaryScatter(const BinaryRows& x, const Vector& w);
// h_i = <linear, x_i> + x_i^T quad x_i, quad symmetric
Vector BinaryQuadraticForms(const BinaryRows& x, const Vector& linear,
                            const Matrix& quad);

}  // namespace serial

namespace omp {

Vector ColumnMeans(const FeatureMatrix& x);
Vector WeightedColumnMeans(const FeatureMatrix& x, const Vector& w);
Matrix Scatter(const FeatureMatrix& x, const Vector& center, const Vector& w);
Vector RowQuadraticForms(const FeatureMatrix& x, const Vector& center,
                         const Vector& linear, const Matrix& quad);
KernelSums KernelBlockSums(const FeatureMatrix& x, IndexSpan x_rows,
                           const FeatureMatrix& y, IndexSpan y_rows,
                           const KernelSpec& spec);
Vector BinaryWeightedSums(const BinaryRows& x, const Vector& w);
Matrix BinaryScatter(const BinaryRows& x, const Vector& w);
Vector BinaryQuadraticForms(const BinaryRows& x, const Vector& linear,
                            const Matrix& quad);

}  // namespace omp

// Caps the worker threads used by the omp kernels. Values < 1 restore the
// runtime default.
void SetThreadCount(int threads);
int ThreadCount();

}  // namespace fidlens::kernels
