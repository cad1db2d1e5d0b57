#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fidlens/types.hpp"

namespace fidlens {

// One diagonal Gaussian component. Components with weight 0 are never sampled
// but still act as class prototypes when class probabilities are computed.
struct MixtureComponent {
  double weight = 0.0;
  std::size_t label = 0;
  Vector mean;
  Vector variance;
};

// Text format, one directive per line, '#' starts a comment:
//   dim 16
//   temperature 1.0
//   component weight=0.25 label=0 mean=0,1,... var=1,1,...
// `var` (and `mean`) may be given as a single value broadcast to all dims.
struct MixtureSpec {
  std::size_t dim = 0;
  double temperature = 1.0;
  std::vector<MixtureComponent> components;

  std::size_t ClassCount() const;
  void Validate() const;

  static MixtureSpec Parse(const std::string& text);
  static MixtureSpec Load(const std::string& path);
  std::string ToText() const;
};

struct SyntheticDraw {
  FeatureMatrix features;       // n x dim
  FeatureMatrix probabilities;  // n x ClassCount()
  std::vector<std::size_t> components;
};

// Seeded draws. Class probabilities come from a noisy nearest-prototype
// classifier: logits_k = -|x - mean_k|^2 / (2 T) + Gumbel noise, softmax over
// components, summed per class label. The arg max therefore follows
// softmax(-|x - mean_k|^2 / (2 T)), so T controls Top-1 label noise.
SyntheticDraw SynthGenerate(const MixtureSpec& spec, std::size_t n,
                            std::uint64_t seed);

// Closed-form FID between two single-component specs.
double OracleFrechet(const MixtureSpec& a, const MixtureSpec& b);

struct BiasRow {
  std::size_t sample_size = 0;
  double mean_fid = 0.0;
};

// Mean FID between two independent same-spec draws, per sample size.
std::vector<BiasRow> BiasProbe(const MixtureSpec& spec,
                               std::span<const std::size_t> sizes,
                               std::size_t repeats, std::uint64_t seed);

struct AffineMap {
  Matrix weights;  // C x d
  Vector bias;     // C
};

struct AffineCorrelationReport {
  double correlation = 0.0;
  std::vector<double> feature_fids;
  std::vector<double> mapped_fids;
  Eigen::Index rank = 0;
  bool low_rank = false;
};

// Pearson correlation between FIDs of an ensemble of generated specs against
// one real spec, computed in feature space and after the affine map.
AffineCorrelationReport AffineCorrelationProbe(
    const MixtureSpec& real, std::span<const MixtureSpec> ensemble,
    const AffineMap& map, std::size_t samples, std::uint64_t seed);

// Random C x d map with singular values spread over [1, condition].
AffineMap RandomAffineMap(Eigen::Index rows, Eigen::Index cols,
                          double condition, std::uint64_t seed);

// `count` perturbations of `base` with linearly increasing magnitude: shifted
// component means, rescaled variances and reweighted proportions.
std::vector<MixtureSpec> PerturbedEnsemble(const MixtureSpec& base,
                                           std::size_t count,
                                           std::uint64_t seed);

// Stable 64-bit seed derived from a base seed and a path of indices.
std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> path);

// The desk-scale test instance: 8 populated components in 16 dimensions plus
// zero-weight prototype classes. The real spec has uniform proportions, the
// generated one skewed proportions over the same components.
MixtureSpec StandardRealSpec();
MixtureSpec StandardGeneratedSpec();

}  // namespace fidlens
