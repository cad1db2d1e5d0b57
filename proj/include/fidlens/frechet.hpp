#pragma once

#include "fidlens/types.hpp"

namespace fidlens {

// Relative eigenvalue tolerance: eigenvalues in [-kClampRel * |lambda|_max, 0)
// are treated as round-off and clamped to 0; anything lower is an error.
inline constexpr double kClampRel = 1e-10;
// Floor for the eigenvalues of S when forming S^{-1/2}, relative to trace(S)/d.
inline constexpr double kRegularizationRel = 1e-12;

// Symmetric PSD square root via eigendecomposition.
Matrix SqrtmPsd(const Matrix& m);

// ||mu_r - mu_g||^2 + tr(Sigma_r + Sigma_g - 2 (Sigma_r Sigma_g)^{1/2}),
// evaluated through the symmetric product Sigma_r^{1/2} Sigma_g Sigma_r^{1/2}.
double FrechetDistance(const GaussianStats& real, const GaussianStats& gen);

// Closed form for diagonal covariances.
double FrechetDiagonal(const Vector& mu1, const Vector& var1, const Vector& mu2,
                       const Vector& var2);

struct FrechetGradients {
  Vector d_mean;  // dFID/dmu_g
  Matrix d_cov;   // dFID/dSigma_g, symmetric
};

FrechetGradients FidGradients(const GaussianStats& real,
                              const GaussianStats& gen);

// Gradient of FrechetDistance(real, UpdateStats(gen_base, f, n)) w.r.t. f.
Vector FidGradSample(const GaussianStats& real, const GaussianStats& gen_base,
                     const Vector& f, std::size_t n);

// Caches Sigma_r^{1/2} for repeated evaluation against one real-side summary,
// e.g. inside an optimization loop.
class FrechetReference {
 public:
  explicit FrechetReference(GaussianStats real);

  const GaussianStats& real() const { return real_; }
  const Matrix& real_sqrt() const { return real_sqrt_; }

  double Distance(const GaussianStats& gen) const;
  // Distance together with gradients w.r.t. the generated moments.
  double DistanceAndGradients(const GaussianStats& gen,
                              FrechetGradients* grads) const;

 private:
  GaussianStats real_;
  Matrix real_sqrt_;
  double real_trace_ = 0.0;
};

}  // namespace fidlens
