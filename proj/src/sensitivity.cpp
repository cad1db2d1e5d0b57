#include "fidlens/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "fidlens/error.hpp"
#include "fidlens/frechet.hpp"

namespace fidlens {
namespace {

constexpr int kLanczosLobes = 3;

// dst x src matrix of Lanczos-3 weights for pixel-centre aligned resampling.
Matrix ResampleMatrix(Eigen::Index src, Eigen::Index dst) {
  Matrix w = Matrix::Zero(dst, src);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (Eigen::Index x = 0; x < dst; ++x) {
    const double u = (static_cast<double>(x) + 0.5) * scale - 0.5;
    const auto base = static_cast<Eigen::Index>(std::floor(u));
    for (Eigen::Index i = base - kLanczosLobes + 1; i <= base + kLanczosLobes;
         ++i) {
      const Eigen::Index clamped = std::clamp<Eigen::Index>(i, 0, src - 1);
      w(x, clamped) += LanczosKernel(u - static_cast<double>(i));
    }
    w.row(x) /= w.row(x).sum();
  }
  return w;
}

}  // namespace

ActivationTensor::ActivationTensor(Eigen::Index channels, Eigen::Index size)
    : channels_(channels),
      size_(size),
      data_(static_cast<std::size_t>(channels * size * size), 0.0) {
  Require(channels >= 0 && size >= 0, "activation shape must be non-negative");
}

Eigen::Map<Grid> ActivationTensor::channel(Eigen::Index k) {
  return Eigen::Map<Grid>(data_.data() + k * size_ * size_, size_, size_);
}

Eigen::Map<const Grid> ActivationTensor::channel(Eigen::Index k) const {
  return Eigen::Map<const Grid>(data_.data() + k * size_ * size_, size_, size_);
}

Vector ActivationTensor::SpatialAverages() const {
  Vector out(channels_);
  for (Eigen::Index k = 0; k < channels_; ++k) out[k] = channel(k).mean();
  return out;
}

ActivationTensor ActivationTensor::operator-() const {
  ActivationTensor out = *this;
  for (double& v : out.data_) v = -v;
  return out;
}

double PoolingDeviation(const ActivationTensor& activations,
                        const Vector& features, Eigen::Index* worst_channel) {
  Require(activations.channels() == features.size(),
          "activation channels (" + std::to_string(activations.channels()) +
              ") do not match feature dimension (" +
              std::to_string(features.size()) + ")");
  double worst = 0.0;
  Eigen::Index arg = 0;
  for (Eigen::Index k = 0; k < activations.channels(); ++k) {
    const auto ch = activations.channel(k);
    const double avg = ch.mean();
    const double scale =
        std::max({std::abs(features[k]), ch.cwiseAbs().mean(), 1e-300});
    const double dev = std::abs(avg - features[k]) / scale;
    if (dev > worst) {
      worst = dev;
      arg = k;
    }
  }
  if (worst_channel) *worst_channel = arg;
  return worst;
}

Vector ImportanceWeights(const ActivationTensor& spatial_grad) {
  const Eigen::Index s = spatial_grad.size();
  Vector alpha(spatial_grad.channels());
  for (Eigen::Index k = 0; k < spatial_grad.channels(); ++k) {
    alpha[k] = spatial_grad.channel(k).squaredNorm() / static_cast<double>(s * s);
  }
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (!std::isfinite(alpha[k])) {
      Fail(ErrorKind::kInvalidData, "non-finite gradient in channel " +
                                        std::to_string(k));
    }
  }
  return alpha;
}

ActivationTensor PooledSpatialGradient(const Vector& feature_grad,
                                       Eigen::Index size) {
  ActivationTensor out(feature_grad.size(), size);
  const double cells = static_cast<double>(size * size);
  for (Eigen::Index k = 0; k < feature_grad.size(); ++k) {
    out.channel(k).setConstant(feature_grad[k] / cells);
  }
  return out;
}

ImportanceMap SensitivityMap(const ActivationTensor& activations,
                             const Vector& alpha) {
  Require(alpha.size() == activations.channels(),
          "importance weights (" + std::to_string(alpha.size()) +
              ") do not match activation channels (" +
              std::to_string(activations.channels()) + ")");
  const Eigen::Index s = activations.size();
  ImportanceMap map = ImportanceMap::Zero(s, s);
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (alpha[k] != 0.0) map += alpha[k] * activations.channel(k);
  }
  return map;
}

double LanczosKernel(double x) {
  if (x == 0.0) return 1.0;
  if (std::abs(x) >= kLanczosLobes) return 0.0;
  const double px = std::numbers::pi * x;
  return kLanczosLobes * std::sin(px) * std::sin(px / kLanczosLobes) / (px * px);
}

Heatmap LanczosUpsample(const ImportanceMap& map, Eigen::Index target_h,
                        Eigen::Index target_w) {
  Require(map.rows() > 0 && map.cols() > 0, "importance map is empty");
  Require(target_h >= map.rows() && target_w >= map.cols(),
          "upsampling target " + std::to_string(target_h) + "x" +
              std::to_string(target_w) + " is smaller than the source " +
              std::to_string(map.rows()) + "x" + std::to_string(map.cols()));
  const Matrix wy = ResampleMatrix(map.rows(), target_h);
  const Matrix wx = ResampleMatrix(map.cols(), target_w);
  Heatmap out;
  out.values = wy * map * wx.transpose();
  out.source = map;
  return out;
}

Heatmap HeatmapForImage(const GaussianStats& real, const GaussianStats& gen_base,
                        const Vector& features,
                        const ActivationTensor& activations, std::size_t n,
                        Eigen::Index target_h, Eigen::Index target_w) {
  Eigen::Index channel = 0;
  const double dev = PoolingDeviation(activations, features, &channel);
  Require(dev <= kPoolingTolerance,
          "activations are not consistent with the pooled features (channel " +
              std::to_string(channel) + ", relative deviation " +
              std::to_string(dev) + ")");
  const Vector grad = FidGradSample(real, gen_base, features, n);
  const ActivationTensor spatial =
      PooledSpatialGradient(grad, activations.size());
  const Vector alpha = ImportanceWeights(spatial);
  return LanczosUpsample(SensitivityMap(activations, alpha), target_h,
                         target_w);
}

MaskPair ImportanceMasks(const Heatmap& heatmap) {
  const Eigen::Index h = heatmap.values.rows();
  const Eigen::Index w = heatmap.values.cols();
  const Eigen::Index total = h * w;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const double* v = heatmap.values.data();
  std::stable_sort(order.begin(), order.end(),
                   [v](Eigen::Index a, Eigen::Index b) {
                     return std::abs(v[a]) > std::abs(v[b]);
                   });
  MaskPair masks{Mask::Constant(h, w, false), Mask::Constant(h, w, true)};
  for (Eigen::Index r = 0; r < total / 2; ++r) {
    const Eigen::Index p = order[static_cast<std::size_t>(r)];
    masks.important(p / w, p % w) = true;
    masks.unimportant(p / w, p % w) = false;
  }
  return masks;
}

RgbImage AddMaskedNoise(const RgbImage& image, const Mask& mask, double sigma,
                        std::uint64_t seed) {
  Require(mask.rows() == image.height && mask.cols() == image.width,
          "mask shape " + std::to_string(mask.rows()) + "x" +
              std::to_string(mask.cols()) + " does not match image " +
              std::to_string(image.height) + "x" + std::to_string(image.width));
  Require(sigma >= 0.0, "noise sigma must be non-negative");
  RgbImage out = image;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index y = 0; y < image.height; ++y) {
    for (Eigen::Index x = 0; x < image.width; ++x) {
      if (!mask(y, x)) continue;
      for (int c = 0; c < 3; ++c) {
        const double v = out.at(y, x, c) + noise(rng);
        out.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

RgbImage RenderHeatmap(const Heatmap& heatmap) {
  const Eigen::Index h = heatmap.values.rows();
  const Eigen::Index w = heatmap.values.cols();
  std::vector<double> mags(static_cast<std::size_t>(h * w));
  for (Eigen::Index p = 0; p < h * w; ++p) {
    mags[static_cast<std::size_t>(p)] = std::abs(heatmap.values.data()[p]);
  }
  double range = 0.0;
  if (!mags.empty()) {
    // nearest-rank 99th percentile
    const auto rank = static_cast<std::size_t>(
        std::ceil(0.99 * static_cast<double>(mags.size()))) - 1;
    std::nth_element(mags.begin(), mags.begin() + static_cast<long>(rank),
                     mags.end());
    range = mags[rank];
  }
  RgbImage out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const double t =
          range > 0.0 ? std::clamp(heatmap.values(y, x) / range, -1.0, 1.0)
                      : 0.0;
      const auto fade = static_cast<float>(1.0 - std::abs(t));
      out.at(y, x, 0) = t >= 0.0 ? 1.f : fade;
      out.at(y, x, 1) = fade;
      out.at(y, x, 2) = t <= 0.0 ? 1.f : fade;
    }
  }
  return out;
}

}  // namespace fidlens
