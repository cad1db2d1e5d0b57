#include <algorithm>
#include <vector>

#include <omp.h>

#include "fidlens/kernels.hpp"

namespace fidlens::kernels {
namespace {

int g_thread_cap = 0;

constexpr Eigen::Index kScatterChunks = 8;

int Threads() { return g_thread_cap > 0 ? g_thread_cap : omp_get_max_threads(); }

Eigen::Index BlockCount(Eigen::Index n) {
  return (n + kRowBlock - 1) / kRowBlock;
}

// Per-block partial sums of w_i * x_i (w empty: unit weights), combined in
// block order so the result is independent of scheduling.
Vector BlockedColumnSums(const FeatureMatrix& x, const Vector& w,
                         double* total_weight) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::Index blocks = BlockCount(n);
  Matrix partial = Matrix::Zero(d, blocks);
  Vector partial_w = Vector::Zero(blocks);

#pragma omp parallel for schedule(static) num_threads(Threads())
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index lo = b * kRowBlock;
    const Eigen::Index hi = std::min(n, lo + kRowBlock);
    double* acc = partial.col(b).data();
    double wsum = 0.0;
    for (Eigen::Index i = lo; i < hi; ++i) {
      const double wi = w.size() == 0 ? 1.0 : w[i];
      wsum += wi;
      for (Eigen::Index k = 0; k < d; ++k) acc[k] += wi * x(i, k);
    }
    partial_w[b] = wsum;
  }

  Vector sum = Vector::Zero(d);
  double wtotal = 0.0;
  for (Eigen::Index b = 0; b < blocks; ++b) {
    sum += partial.col(b);
    wtotal += partial_w[b];
  }
  *total_weight = wtotal;
  return sum;
}

}  // namespace

void SetThreadCount(int threads) { g_thread_cap = threads > 0 ? threads : 0; }

int ThreadCount() { return Threads(); }

namespace omp {

Vector ColumnMeans(const FeatureMatrix& x) {
  double total = 0.0;
  Vector sum = BlockedColumnSums(x, Vector(), &total);
  return sum / total;
}

Vector WeightedColumnMeans(const FeatureMatrix& x, const Vector& w) {
  double total = 0.0;
  Vector sum = BlockedColumnSums(x, w, &total);
  return sum / total;
}

Matrix Scatter(const FeatureMatrix& x, const Vector& center, const Vector& w) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  // Rows are split into a fixed number of contiguous chunks regardless of the
  // thread count; each chunk accumulates its own partial scatter block by
  // block and the partials are summed in chunk order.
  const Eigen::Index chunks = std::max<Eigen::Index>(
      1, std::min<Eigen::Index>(kScatterChunks, BlockCount(n)));
  const Eigen::Index per_chunk = (n + chunks - 1) / chunks;
  std::vector<Matrix> partial(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(static, 1) num_threads(Threads())
  for (Eigen::Index c = 0; c < chunks; ++c) {
    Matrix acc = Matrix::Zero(d, d);
    const Eigen::Index end = std::min(n, (c + 1) * per_chunk);
    for (Eigen::Index lo = c * per_chunk; lo < end; lo += kRowBlock) {
      const Eigen::Index rows = std::min(kRowBlock, end - lo);
      const Matrix centered =
          x.middleRows(lo, rows).rowwise() - center.transpose();
      if (w.size() == 0) {
        acc.noalias() += centered.transpose() * centered;
      } else {
        const Matrix weighted = w.segment(lo, rows).asDiagonal() * centered;
        acc.noalias() += centered.transpose() * weighted;
      }
    }
    partial[static_cast<std::size_t>(c)] = std::move(acc);
  }

  Matrix out = Matrix::Zero(d, d);
  for (const auto& p : partial) out += p;
  return out;
}

Vector RowQuadraticForms(const FeatureMatrix& x, const Vector& center,
                         const Vector& linear, const Matrix& quad) {
  const Eigen::Index n = x.rows();
  const Eigen::Index blocks = BlockCount(n);
  Vector out(n);

#pragma omp parallel for schedule(static) num_threads(Threads())
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index lo = b * kRowBlock;
    const Eigen::Index rows = std::min(kRowBlock, n - lo);
    const Matrix centered = x.middleRows(lo, rows).rowwise() - center.transpose();
    Matrix projected = centered * quad;
    projected.rowwise() += linear.transpose();
    out.segment(lo, rows) =
        centered.cwiseProduct(projected).rowwise().sum();
  }
  return out;
}

Vector BinaryWeightedSums(const BinaryRows& x, const Vector& w) {
  const Eigen::Index n = x.rows();
  const Eigen::Index blocks = BlockCount(n);
  Matrix partial = Matrix::Zero(x.cols, blocks);

#pragma omp parallel for schedule(static) num_threads(Threads())
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index hi = std::min(n, (b + 1) * kRowBlock);
    for (Eigen::Index i = b * kRowBlock; i < hi; ++i) {
      for (Eigen::Index a = x.offsets[i]; a < x.offsets[i + 1]; ++a) {
        partial(x.indices[a], b) += w[i];
      }
    }
  }
  return partial.rowwise().sum();
}

Matrix BinaryScatter(const BinaryRows& x, const Vector& w) {
  const Eigen::Index n = x.rows();
  const Eigen::Index chunks = std::max<Eigen::Index>(
      1, std::min<Eigen::Index>(kScatterChunks, BlockCount(n)));
  const Eigen::Index per_chunk = (n + chunks - 1) / chunks;
  std::vector<Matrix> partial(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(static, 1) num_threads(Threads())
  for (Eigen::Index c = 0; c < chunks; ++c) {
    // Upper triangle only; indices within a row are ascending.
    Matrix acc = Matrix::Zero(x.cols, x.cols);
    const Eigen::Index end = std::min(n, (c + 1) * per_chunk);
    for (Eigen::Index i = c * per_chunk; i < end; ++i) {
      const double wi = w[i];
      for (Eigen::Index a = x.offsets[i]; a < x.offsets[i + 1]; ++a) {
        const Eigen::Index p = x.indices[a];
        for (Eigen::Index b = a; b < x.offsets[i + 1]; ++b) {
          acc(p, x.indices[b]) += wi;
        }
      }
    }
    partial[static_cast<std::size_t>(c)] = std::move(acc);
  }

  Matrix out = Matrix::Zero(x.cols, x.cols);
  for (const auto& p : partial) out += p;
  out.triangularView<Eigen::StrictlyLower>() = out.transpose();
  return out;
}

Vector BinaryQuadraticForms(const BinaryRows& x, const Vector& linear,
                            const Matrix& quad) {
  const Eigen::Index n = x.rows();
  Vector out(n);

#pragma omp parallel for schedule(static) num_threads(Threads())
  for (Eigen::Index i = 0; i < n; ++i) {
    double h = 0.0;
    for (Eigen::Index a = x.offsets[i]; a < x.offsets[i + 1]; ++a) {
      const Eigen::Index p = x.indices[a];
      h += linear[p] + quad(p, p);
      double off = 0.0;
      for (Eigen::Index b = a + 1; b < x.offsets[i + 1]; ++b) {
        off += quad(p, x.indices[b]);
      }
      h += 2.0 * off;
    }
    out[i] = h;
  }
  return out;
}

KernelSums KernelBlockSums(const FeatureMatrix& x, IndexSpan x_rows,
                           const FeatureMatrix& y, IndexSpan y_rows,
                           const KernelSpec& spec) {
  const Eigen::Index d = x.cols();
  const auto mx = static_cast<std::ptrdiff_t>(x_rows.size());
  const auto my = static_cast<std::ptrdiff_t>(y_rows.size());
  std::vector<double> row_xx(mx, 0.0), row_xy(mx, 0.0), row_yy(my, 0.0);

#pragma omp parallel num_threads(Threads())
  {
#pragma omp for schedule(dynamic, 8) nowait
    for (std::ptrdiff_t a = 0; a < mx; ++a) {
      const double* xa = x.row(x_rows[a]).data();
      double sxx = 0.0;
      for (std::ptrdiff_t b = a + 1; b < mx; ++b) {
        sxx += EvaluateKernel(spec, xa, x.row(x_rows[b]).data(), d);
      }
      double sxy = 0.0;
      for (std::ptrdiff_t b = 0; b < my; ++b) {
        sxy += EvaluateKernel(spec, xa, y.row(y_rows[b]).data(), d);
      }
      row_xx[a] = sxx;
      row_xy[a] = sxy;
    }
#pragma omp for schedule(dynamic, 8)
    for (std::ptrdiff_t a = 0; a < my; ++a) {
      const double* ya = y.row(y_rows[a]).data();
      double syy = 0.0;
      for (std::ptrdiff_t b = a + 1; b < my; ++b) {
        syy += EvaluateKernel(spec, ya, y.row(y_rows[b]).data(), d);
      }
      row_yy[a] = syy;
    }
  }

  KernelSums sums;
  for (std::ptrdiff_t a = 0; a < mx; ++a) {
    sums.xx += row_xx[a];
    sums.xy += row_xy[a];
  }
  for (std::ptrdiff_t a = 0; a < my; ++a) sums.yy += row_yy[a];
  return sums;
}

}  // namespace omp
}  // namespace fidlens::kernels
