#pragma once

#include "fidlens/types.hpp"

namespace fidlens {

// Throws kInvalidData naming the first non-finite entry.
void CheckFinite(const FeatureMatrix& features, const char* what);

// Column mean and unbiased (n - 1) covariance, two-pass, accumulated in double.
// Requires n >= 2.
GaussianStats ComputeStats(const FeatureMatrix& features);

// Statistics of the original set with `f` appended, where `new_count` is the
// size of the updated set:
//   mean' = (N-1)/N mean + f/N
//   cov'  = (N-2)/(N-1) cov + (1/N) (f - mean)(f - mean)^T
// Requires stats.count == new_count - 1 and new_count >= 3.
GaussianStats UpdateStats(const GaussianStats& stats, const Vector& f,
                          std::size_t new_count);

// Weighted mean and covariance with weights exp(logw). The covariance is
// normalized by the weight sum (biased), so for uniform weights it equals
// ComputeStats().cov * (n-1)/n. `count` is set to n.
GaussianStats WeightedStats(const FeatureMatrix& features,
                            const SampleWeights& weights);

// Same as WeightedStats with linear (already exponentiated) weights.
GaussianStats WeightedStatsLinear(const FeatureMatrix& features,
                                  const Vector& weights);

// exp(logw - max(logw)); the common scale cancels in every weighted moment.
Vector NormalizedLinearWeights(const SampleWeights& weights);

}  // namespace fidlens
