#include "fidlens/frechet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "fidlens/core_stats.hpp"
#include "fidlens/error.hpp"

namespace fidlens {
namespace {

Matrix Symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void CheckSymmetric(const Matrix& m, const char* what) {
  Require(m.rows() == m.cols(), std::string(what) + " must be square");
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kClampRel * scale) {
    std::ostringstream msg;
    msg << what << " is not symmetric (max |m - m^T| = " << asym
        << ", max |m| = " << scale << ")";
    Fail(ErrorKind::kInvalidData, msg.str());
  }
}

// Eigenvalues with round-off negatives clamped to zero.
Vector ClampedEigenvalues(const Vector& eig, const char* what) {
  const double largest = eig.cwiseAbs().maxCoeff();
  const double tol = kClampRel * largest;
  Vector out = eig;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig[i] < -tol) {
      std::ostringstream msg;
      msg << what << " has eigenvalue " << eig[i]
          << " below the clamp threshold " << -tol;
      Fail(ErrorKind::kNotPsd, msg.str());
    }
    if (eig[i] < 0.0) out[i] = 0.0;
  }
  return out;
}

Eigen::SelfAdjointEigenSolver<Matrix> Decompose(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    Fail(ErrorKind::kInvalidData, "eigendecomposition did not converge");
  }
  return solver;
}

void CheckPair(const GaussianStats& real, const GaussianStats& gen) {
  Require(real.dim() == gen.dim(),
          "dimension mismatch: real " + std::to_string(real.dim()) +
              " vs generated " + std::to_string(gen.dim()));
  Require(real.cov.rows() == real.dim() && gen.cov.rows() == gen.dim(),
          "covariance shape does not match the mean");
}

}  // namespace

Matrix SqrtmPsd(const Matrix& m) {
  CheckSymmetric(m, "matrix");
  if (m.size() == 0) return m;
  const auto solver = Decompose(Symmetrized(m));
  const Vector lambda = ClampedEigenvalues(solver.eigenvalues(), "matrix");
  const Matrix& v = solver.eigenvectors();
  return Symmetrized(v * lambda.cwiseSqrt().asDiagonal() * v.transpose());
}

FrechetReference::FrechetReference(GaussianStats real)
    : real_(std::move(real)) {
  CheckSymmetric(real_.cov, "real covariance");
  real_sqrt_ = SqrtmPsd(real_.cov);
  real_trace_ = real_.cov.trace();
}

double FrechetReference::Distance(const GaussianStats& gen) const {
  CheckPair(real_, gen);
  CheckSymmetric(gen.cov, "generated covariance");
  const Matrix s = Symmetrized(real_sqrt_ * gen.cov * real_sqrt_);
  const Vector lambda = ClampedEigenvalues(Decompose(s).eigenvalues(),
                                           "Sigma_r^1/2 Sigma_g Sigma_r^1/2");
  const double value = (real_.mean - gen.mean).squaredNorm() + real_trace_ +
                       gen.cov.trace() - 2.0 * lambda.cwiseSqrt().sum();
  return std::max(value, 0.0);
}

double FrechetReference::DistanceAndGradients(const GaussianStats& gen,
                                              FrechetGradients* grads) const {
  CheckPair(real_, gen);
  CheckSymmetric(gen.cov, "generated covariance");
  const Eigen::Index d = gen.dim();
  const Matrix s = Symmetrized(real_sqrt_ * gen.cov * real_sqrt_);
  const auto solver = Decompose(s);
  const Vector lambda = ClampedEigenvalues(solver.eigenvalues(),
                                           "Sigma_r^1/2 Sigma_g Sigma_r^1/2");

  const double trace_s = s.trace();
  if (!(trace_s > 0.0)) {
    std::ostringstream msg;
    msg << "Sigma_r^1/2 Sigma_g Sigma_r^1/2 has no positive eigenvalue "
           "(largest eigenvalue "
        << (lambda.size() ? solver.eigenvalues().maxCoeff() : 0.0) << ")";
    Fail(ErrorKind::kSingular, msg.str());
  }
  const double floor = kRegularizationRel * trace_s / static_cast<double>(d);
  const Vector inv_sqrt = lambda.cwiseMax(floor).cwiseSqrt().cwiseInverse();
  const Matrix& v = solver.eigenvectors();
  const Matrix s_inv_sqrt = v * inv_sqrt.asDiagonal() * v.transpose();

  grads->d_mean = 2.0 * (gen.mean - real_.mean);
  grads->d_cov = Symmetrized(Matrix::Identity(d, d) -
                             real_sqrt_ * s_inv_sqrt * real_sqrt_);

  const double value = (real_.mean - gen.mean).squaredNorm() + real_trace_ +
                       gen.cov.trace() - 2.0 * lambda.cwiseSqrt().sum();
  return std::max(value, 0.0);
}

double FrechetDistance(const GaussianStats& real, const GaussianStats& gen) {
  CheckPair(real, gen);
  return FrechetReference(real).Distance(gen);
}

double FrechetDiagonal(const Vector& mu1, const Vector& var1, const Vector& mu2,
                       const Vector& var2) {
  const Eigen::Index d = mu1.size();
  Require(var1.size() == d && mu2.size() == d && var2.size() == d,
          "diagonal Frechet inputs must share one dimension");
  double total = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    Require(var1[i] >= 0.0 && var2[i] >= 0.0,
            "variance " + std::to_string(i) + " is negative");
    const double dm = mu1[i] - mu2[i];
    total += dm * dm + var1[i] + var2[i] - 2.0 * std::sqrt(var1[i] * var2[i]);
  }
  return total;
}

FrechetGradients FidGradients(const GaussianStats& real,
                              const GaussianStats& gen) {
  CheckPair(real, gen);
  FrechetGradients grads;
  FrechetReference(real).DistanceAndGradients(gen, &grads);
  return grads;
}

Vector FidGradSample(const GaussianStats& real, const GaussianStats& gen_base,
                     const Vector& f, std::size_t n) {
  // Chain rule through the rank-1 update: dmu'/df = I/N and
  // d tr(G Sigma')/df = (2/N) G (f - mu).
  const GaussianStats updated = UpdateStats(gen_base, f, n);
  const FrechetGradients grads = FidGradients(real, updated);
  const double inv_n = 1.0 / static_cast<double>(n);
  return inv_n * grads.d_mean +
         (2.0 * inv_n) * (grads.d_cov * (f - gen_base.mean));
}

}  // namespace fidlens
