#include "fidlens/kernel_distance.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "fidlens/core_stats.hpp"
#include "fidlens/error.hpp"

namespace fidlens {
namespace {

void CheckSets(const FeatureMatrix& real, const FeatureMatrix& gen,
               const KidOptions& options) {
  Require(real.cols() == gen.cols(),
          "dimension mismatch: " + std::to_string(real.cols()) + " vs " +
              std::to_string(gen.cols()));
  Require(options.subset_size >= 2, "KID subset size must be at least 2");
  Require(options.subsets >= 1, "KID needs at least one subset");
  Require(static_cast<std::size_t>(real.rows()) >= options.subset_size &&
              static_cast<std::size_t>(gen.rows()) >= options.subset_size,
          "subset size " + std::to_string(options.subset_size) +
              " exceeds the available rows (" + std::to_string(real.rows()) +
              " real, " + std::to_string(gen.rows()) + " generated)");
}

std::vector<std::size_t> DrawSubset(std::size_t population, std::size_t m,
                                    std::mt19937_64& rng) {
  std::vector<std::size_t> all(population);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> out;
  out.reserve(m);
  std::sample(all.begin(), all.end(), std::back_inserter(out), m, rng);
  return out;
}

}  // namespace

double MmdUnbiased(const FeatureMatrix& x, kernels::IndexSpan x_rows,
                   const FeatureMatrix& y, kernels::IndexSpan y_rows,
                   const kernels::KernelSpec& spec) {
  Require(x.cols() == y.cols(), "dimension mismatch in MMD");
  Require(x_rows.size() >= 2 && y_rows.size() >= 2,
          "MMD subsets need at least 2 rows each");
  const auto sums = kernels::omp::KernelBlockSums(x, x_rows, y, y_rows, spec);
  const double m = static_cast<double>(x_rows.size());
  const double n = static_cast<double>(y_rows.size());
  // Off-diagonal pair sums are over i < j; the i != j sum is twice that.
  return 2.0 * sums.xx / (m * (m - 1.0)) + 2.0 * sums.yy / (n * (n - 1.0)) -
         2.0 * sums.xy / (m * n);
}

double SubsetAveragedMmd(const FeatureMatrix& real, const FeatureMatrix& gen,
                         const kernels::KernelSpec& spec,
                         const KidOptions& options,
                         std::vector<double>* per_subset) {
  CheckSets(real, gen, options);
  CheckFinite(real, "real features");
  CheckFinite(gen, "generated features");
  std::mt19937_64 rng(options.seed);
  if (per_subset) per_subset->clear();
  double total = 0.0;
  for (std::size_t t = 0; t < options.subsets; ++t) {
    const auto xs = DrawSubset(real.rows(), options.subset_size, rng);
    const auto ys = DrawSubset(gen.rows(), options.subset_size, rng);
    const double value = MmdUnbiased(real, xs, gen, ys, spec);
    if (per_subset) per_subset->push_back(value);
    total += value;
  }
  return total / static_cast<double>(options.subsets);
}

double KidPolynomial(const FeatureMatrix& real, const FeatureMatrix& gen,
                     const KidOptions& options) {
  const kernels::KernelSpec spec{kernels::KernelType::kPolynomial,
                                 1.0 / static_cast<double>(real.cols())};
  return SubsetAveragedMmd(real, gen, spec, options);
}

double KidRbf(const FeatureMatrix& real, const FeatureMatrix& gen, double gamma,
              const KidOptions& options) {
  Require(gamma > 0.0, "RBF gamma must be positive");
  const kernels::KernelSpec spec{kernels::KernelType::kRbf, gamma};
  return SubsetAveragedMmd(real, gen, spec, options);
}

}  // namespace fidlens
