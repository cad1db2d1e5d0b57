#pragma once

#include <cstdint>
#include <vector>

#include "fidlens/kernels.hpp"
#include "fidlens/types.hpp"

namespace fidlens {

struct KidOptions {
  std::size_t subset_size = 1000;
  std::size_t subsets = 100;
  std::uint64_t seed = 0;
};

// Unbiased squared MMD between the selected rows of x and y:
//   1/(m(m-1)) sum_{i!=j} k(x_i,x_j) + 1/(n(n-1)) sum_{i!=j} k(y_i,y_j)
//   - 2/(mn) sum_{i,j} k(x_i,y_j)
// Symmetric in its two arguments. May be negative.
double MmdUnbiased(const FeatureMatrix& x, kernels::IndexSpan x_rows,
                   const FeatureMatrix& y, kernels::IndexSpan y_rows,
                   const kernels::KernelSpec& spec);

// Average of MmdUnbiased over `subsets` random subset pairs, each drawn
// without replacement. One value per subset is returned through `per_subset`
// when non-null.
double SubsetAveragedMmd(const FeatureMatrix& real, const FeatureMatrix& gen,
                         const kernels::KernelSpec& spec,
                         const KidOptions& options,
                         std::vector<double>* per_subset = nullptr);

// Standard KID, cubic polynomial kernel (x.y/d + 1)^3.
double KidPolynomial(const FeatureMatrix& real, const FeatureMatrix& gen,
                     const KidOptions& options = {});

// KID with k(x,y) = exp(-gamma |x-y|^2).
double KidRbf(const FeatureMatrix& real, const FeatureMatrix& gen, double gamma,
              const KidOptions& options = {});

inline double DefaultRbfGamma(Eigen::Index d) {
  return 1.0 / static_cast<double>(d);
}

}  // namespace fidlens
