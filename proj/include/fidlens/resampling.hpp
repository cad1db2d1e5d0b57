#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fidlens/frechet.hpp"
#include "fidlens/kernels.hpp"
#include "fidlens/types.hpp"

namespace fidlens {

// n x C class probabilities; rows sum to 1.
using ClassProbabilities = FeatureMatrix;
// n x C 0/1 matrix with exactly N ones per row.
using IndicatorMatrix = FeatureMatrix;

inline constexpr double kPreLogitLearningRate = 10.0;
inline constexpr double kLogitLearningRate = 5.0;

// Entries in [0, 1] and row sums within 1e-4 of 1.
void ValidateProbabilities(const ClassProbabilities& probs, const char* what);

// Row-wise arg max, ties to the lowest class index.
std::vector<std::size_t> TopLabels(const ClassProbabilities& probs);
std::vector<std::size_t> LabelHistogram(std::span<const std::size_t> labels,
                                        std::size_t classes);

FeatureMatrix GatherRows(const FeatureMatrix& m,
                         std::span<const std::size_t> rows);

// FID between the real features and the weighted candidate features, as a
// function of the candidates' log-weights. The gradient w.r.t. log w_i is
//   (w_i / W) * [ g_mu.(f_i - mu) + (f_i - mu)^T G (f_i - mu) - tr(G Sigma) ]
// with (g_mu, G) the Frechet gradients at the weighted moments. Candidates
// whose entries are all 0 or 1 take a sparse path costing O(N^2) per row,
// N the number of ones, instead of O(d^2).
class ResamplingObjective {
 public:
  ResamplingObjective(GaussianStats real, const FeatureMatrix& candidates);

  double Value(const SampleWeights& weights) const;
  double ValueAndGradient(const SampleWeights& weights, Vector* grad) const;
  // Central differences on every log-weight. Testing only: O(n) objective
  // evaluations.
  Vector FiniteDifferenceGradient(const SampleWeights& weights,
                                  double step) const;

  const FrechetReference& reference() const { return reference_; }

 private:
  GaussianStats BinaryStats(const Vector& w) const;

  FrechetReference reference_;
  const FeatureMatrix& candidates_;
  std::optional<kernels::BinaryRows> binary_;
};

struct ResamplingOptions {
  double learning_rate = kPreLogitLearningRate;
  std::size_t max_iters = 100000;
  std::size_t eval_every = 1000;
  std::uint64_t seed = 0;
  // Rows drawn at each checkpoint; 0 draws as many as there are real rows.
  std::size_t eval_samples = 0;
  // Called after every checkpoint (iteration, objective, sampled FID).
  std::function<void(std::size_t, double, double)> on_checkpoint;
};

// Features used to score checkpoints. Defaults to the optimization space; the
// Top-N sweep scores in pre-logit space while optimizing indicators.
struct EvaluationSpace {
  const FeatureMatrix* real = nullptr;
  const FeatureMatrix* candidates = nullptr;
};

struct TracePoint {
  std::size_t iteration = 0;
  double objective = 0.0;
};

struct Checkpoint {
  std::size_t iteration = 0;
  double objective = 0.0;
  double sampled_fid = 0.0;
};

struct ResamplingResult {
  SampleWeights weights;
  std::vector<TracePoint> trace;
  std::vector<Checkpoint> checkpoints;
  std::size_t selected_iteration = 0;
  double initial_objective = 0.0;
  double selected_objective = 0.0;
  double selected_sampled_fid = 0.0;
};

// Plain full-batch gradient descent on the log-weights, starting from uniform
// weights, with no momentum, decay or averaging. Every `eval_every` iterations
// (and at the last one) the current weights are turned into probabilities, a
// sample is drawn with replacement and its FID recorded; the checkpoint with
// the smallest sampled FID whose objective does not exceed the initial one is
// returned.
ResamplingResult OptimizeResamplingWeights(
    const FeatureMatrix& real, const FeatureMatrix& candidates,
    const ResamplingOptions& options,
    std::optional<EvaluationSpace> evaluation = std::nullopt);

// p_i = exp(w_i) / sum_j exp(w_j), max-subtracted.
Vector WeightsToProbabilities(const SampleWeights& weights);

// m i.i.d. categorical draws, deterministic per seed.
std::vector<std::size_t> SampleWithReplacement(const Vector& probabilities,
                                               std::size_t m,
                                               std::uint64_t seed);

enum class ShortfallPolicy { kError, kFillProportional };

struct Top1MatchResult {
  std::vector<std::size_t> indices;  // candidate rows, in acceptance order
  std::vector<std::size_t> real_histogram;
  std::vector<std::size_t> selected_histogram;
  // Sum over classes of |selected - real|; non-zero only after a fill.
  std::size_t deviation = 0;
};

// Scans the candidates in seeded random order and keeps a candidate while its
// Top-1 class bin still has room, so the kept set reproduces the real Top-1
// histogram.
Top1MatchResult Top1HistogramMatch(
    const ClassProbabilities& real_probs, const ClassProbabilities& gen_probs,
    std::uint64_t seed, ShortfallPolicy policy = ShortfallPolicy::kError);

// Top-N indicators; ties go to the lower class index.
IndicatorMatrix BinarizeTopN(const ClassProbabilities& probs, std::size_t n);
// N indicators centred on rank floor(C/2) of the descending order:
// ranks floor(C/2) - floor(N/2) ... floor(C/2) - floor(N/2) + N - 1.
IndicatorMatrix BinarizeMiddleN(const ClassProbabilities& probs, std::size_t n);

enum class BinarizeMode { kTop, kMiddle };

const char* ToString(BinarizeMode mode);

struct SweepPoint {
  std::size_t n = 0;
  double fid = 0.0;
};

// For each N: binarize both probability sets, optimize weights on the
// indicators (checkpoints scored in feature space), draw as many candidates
// as there are real rows with replacement and report feature-space FID.
std::vector<SweepPoint> TopNSweep(const ClassProbabilities& real_probs,
                                  const ClassProbabilities& gen_probs,
                                  const FeatureMatrix& real_features,
                                  const FeatureMatrix& gen_features,
                                  std::span<const std::size_t> ns,
                                  BinarizeMode mode,
                                  const ResamplingOptions& options,
                                  std::uint64_t seed);

}  // namespace fidlens
