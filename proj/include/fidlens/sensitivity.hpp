#pragma once

#include <cstdint>
#include <vector>

#include "fidlens/image_io.hpp"
#include "fidlens/types.hpp"

namespace fidlens {

// k x s x s spatial activations A^k (or gradients with the same layout),
// stored channel-major: value(k, i, j) = data[(k * s + i) * s + j].
class ActivationTensor {
 public:
  ActivationTensor() = default;
  ActivationTensor(Eigen::Index channels, Eigen::Index size);

  Eigen::Index channels() const { return channels_; }
  Eigen::Index size() const { return size_; }

  double& at(Eigen::Index k, Eigen::Index i, Eigen::Index j) {
    return data_[static_cast<std::size_t>((k * size_ + i) * size_ + j)];
  }
  double at(Eigen::Index k, Eigen::Index i, Eigen::Index j) const {
    return data_[static_cast<std::size_t>((k * size_ + i) * size_ + j)];
  }

  Eigen::Map<Grid> channel(Eigen::Index k);
  Eigen::Map<const Grid> channel(Eigen::Index k) const;

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // Per-channel spatial mean, i.e. the pooled feature vector.
  Vector SpatialAverages() const;

  ActivationTensor operator-() const;

 private:
  Eigen::Index channels_ = 0;
  Eigen::Index size_ = 0;
  std::vector<double> data_;
};

// Max over channels of |mean_ij A^k_ij - f_k| / max(|f_k|, mean_ij |A^k_ij|).
// The denominator keeps near-zero pooled values of large activations from
// blowing up the ratio. `worst_channel` receives the arg max when non-null.
double PoolingDeviation(const ActivationTensor& activations,
                        const Vector& features,
                        Eigen::Index* worst_channel = nullptr);

inline constexpr double kPoolingTolerance = 1e-5;

// Signed s x s importance map (no rectification).
using ImportanceMap = Grid;

struct Heatmap {
  Grid values;           // H x W
  ImportanceMap source;  // the s x s map it was upsampled from
};

// alpha_k = (1/s^2) sum_ij |grad^k_ij|^2
Vector ImportanceWeights(const ActivationTensor& spatial_grad);

// Gradient w.r.t. A^k_ij when the features are spatial averages: g_k / s^2 at
// every cell.
ActivationTensor PooledSpatialGradient(const Vector& feature_grad,
                                       Eigen::Index size);

// sum_k alpha_k A^k
ImportanceMap SensitivityMap(const ActivationTensor& activations,
                             const Vector& alpha);

// Separable Lanczos-3 upsampling with pixel-centre alignment, edge-clamped
// taps and per-pixel weight renormalization.
Heatmap LanczosUpsample(const ImportanceMap& map, Eigen::Index target_h,
                        Eigen::Index target_w);

double LanczosKernel(double x);

// Full per-image pipeline: gradient of FID after appending `features` to the
// generated statistics, pushed back onto the activations through the average
// pool, then importance weights, linear combination and upsampling.
Heatmap HeatmapForImage(const GaussianStats& real, const GaussianStats& gen_base,
                        const Vector& features,
                        const ActivationTensor& activations, std::size_t n,
                        Eigen::Index target_h, Eigen::Index target_w);

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MaskPair {
  Mask important;
  Mask unimportant;
};

// Median split of |heatmap|: the H*W/2 pixels with the largest magnitude are
// important. Ties are resolved in row-major order (earlier pixel first).
MaskPair ImportanceMasks(const Heatmap& heatmap);

// Adds N(0, sigma^2) noise to every channel of the masked pixels, then clips
// to [0, 1]. Deterministic per seed.
RgbImage AddMaskedNoise(const RgbImage& image, const Mask& mask, double sigma,
                        std::uint64_t seed);

// Symmetric diverging colormap around 0 (blue-white-red), saturating at the
// 99th percentile of |values|.
RgbImage RenderHeatmap(const Heatmap& heatmap);

}  // namespace fidlens
