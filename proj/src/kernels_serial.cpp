#include <cmath>

#include "fidlens/kernels.hpp"

namespace fidlens::kernels {

double EvaluateKernel(const KernelSpec& spec, const double* x, const double* y,
                      Eigen::Index d) {
  if (spec.type == KernelType::kPolynomial) {
    double dot = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) dot += x[k] * y[k];
    const double base = spec.gamma * dot + 1.0;
    return base * base * base;
  }
  double dist2 = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double diff = x[k] - y[k];
    dist2 += diff * diff;
  }
  return std::exp(-spec.gamma * dist2);
}

bool ToBinaryRows(const FeatureMatrix& x, BinaryRows* out) {
  BinaryRows rows;
  rows.cols = x.cols();
  rows.offsets.reserve(static_cast<std::size_t>(x.rows()) + 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double v = x(i, j);
      if (v == 1.0) {
        rows.indices.push_back(j);
      } else if (v != 0.0) {
        return false;
      }
    }
    rows.offsets.push_back(static_cast<Eigen::Index>(rows.indices.size()));
  }
  *out = std::move(rows);
  return true;
}

namespace serial {

Vector ColumnMeans(const FeatureMatrix& x) {
  Vector sum = Vector::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) sum[k] += x(i, k);
  }
  return sum / static_cast<double>(x.rows());
}

Vector WeightedColumnMeans(const FeatureMatrix& x, const Vector& w) {
  Vector sum = Vector::Zero(x.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    total += w[i];
    for (Eigen::Index k = 0; k < x.cols(); ++k) sum[k] += w[i] * x(i, k);
  }
  return sum / total;
}

Matrix Scatter(const FeatureMatrix& x, const Vector& center, const Vector& w) {
  const Eigen::Index d = x.cols();
  Matrix out = Matrix::Zero(d, d);
  Vector c(d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    c = x.row(i).transpose() - center;
    const double wi = w.size() == 0 ? 1.0 : w[i];
    for (Eigen::Index j = 0; j < d; ++j) {
      const double a = wi * c[j];
      for (Eigen::Index k = 0; k <= j; ++k) out(j, k) += a * c[k];
    }
  }
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

Vector RowQuadraticForms(const FeatureMatrix& x, const Vector& center,
                         const Vector& linear, const Matrix& quad) {
  const Eigen::Index d = x.cols();
  Vector out(x.rows());
  Vector c(d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    c = x.row(i).transpose() - center;
    double h = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      double row = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) row += quad(j, k) * c[k];
      h += c[j] * (linear[j] + row);
    }
    out[i] = h;
  }
  return out;
}

KernelSums KernelBlockSums(const FeatureMatrix& x, IndexSpan x_rows,
                           const FeatureMatrix& y, IndexSpan y_rows,
                           const KernelSpec& spec) {
  const Eigen::Index d = x.cols();
  KernelSums sums;
  for (std::size_t a = 0; a < x_rows.size(); ++a) {
    for (std::size_t b = a + 1; b < x_rows.size(); ++b) {
      sums.xx += EvaluateKernel(spec, x.row(x_rows[a]).data(),
                                x.row(x_rows[b]).data(), d);
    }
    for (std::size_t b = 0; b < y_rows.size(); ++b) {
      sums.xy += EvaluateKernel(spec, x.row(x_rows[a]).data(),
                                y.row(y_rows[b]).data(), d);
    }
  }
  for (std::size_t a = 0; a < y_rows.size(); ++a) {
    for (std::size_t b = a + 1; b < y_rows.size(); ++b) {
      sums.yy += EvaluateKernel(spec, y.row(y_rows[a]).data(),
                                y.row(y_rows[b]).data(), d);
    }
  }
  return sums;
}

Vector BinaryWeightedSums(const BinaryRows& x, const Vector& w) {
  Vector sum = Vector::Zero(x.cols);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index a = x.offsets[i]; a < x.offsets[i + 1]; ++a) {
      sum[x.indices[a]] += w[i];
    }
  }
  return sum;
}

Matrix BinaryScatter(const BinaryRows& x, const Vector& w) {
  Matrix out = Matrix::Zero(x.cols, x.cols);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index a = x.offsets[i]; a < x.offsets[i + 1]; ++a) {
      for (Eigen::Index b = x.offsets[i]; b < x.offsets[i + 1]; ++b) {
        out(x.indices[a], x.indices[b]) += w[i];
      }
    }
  }
  return out;
}

Vector BinaryQuadraticForms(const BinaryRows& x, const Vector& linear,
                            const Matrix& quad) {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double h = 0.0;
    for (Eigen::Index a = x.offsets[i]; a < x.offsets[i + 1]; ++a) {
      h += linear[x.indices[a]];
      for (Eigen::Index b = x.offsets[i]; b < x.offsets[i + 1]; ++b) {
        h += quad(x.indices[a], x.indices[b]);
      }
    }
    out[i] = h;
  }
  return out;
}

}  // namespace serial
}  // namespace fidlens::kernels
