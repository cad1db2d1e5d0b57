#include "fidlens/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>

#include "fidlens/core_stats.hpp"
#include "fidlens/error.hpp"
#include "fidlens/kernels.hpp"

namespace fidlens {
namespace {

// Class order for one row: descending probability, ties by ascending index.
std::vector<std::size_t> RankClasses(const ClassProbabilities& probs,
                                     Eigen::Index row) {
  std::vector<std::size_t> order(static_cast<std::size_t>(probs.cols()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return probs(row, static_cast<Eigen::Index>(a)) >
                            probs(row, static_cast<Eigen::Index>(b));
                   });
  return order;
}

IndicatorMatrix BinarizeRanks(const ClassProbabilities& probs,
                              std::size_t first_rank, std::size_t count) {
  IndicatorMatrix out = IndicatorMatrix::Zero(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const auto order = RankClasses(probs, i);
    for (std::size_t r = first_rank; r < first_rank + count; ++r) {
      out(i, static_cast<Eigen::Index>(order[r])) = 1.0;
    }
  }
  return out;
}

struct UniqueRows {
  FeatureMatrix rows;
  Vector multiplicity;
  std::vector<Eigen::Index> group;  // candidate row -> distinct row
};

UniqueRows FindUniqueRows(const FeatureMatrix& m) {
  UniqueRows out;
  out.group.resize(static_cast<std::size_t>(m.rows()));
  std::unordered_map<std::string, Eigen::Index> seen;
  std::vector<Eigen::Index> first;
  std::vector<double> counts;
  const auto bytes = static_cast<std::size_t>(m.cols()) * sizeof(double);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::string key(reinterpret_cast<const char*>(m.row(i).data()), bytes);
    const auto [it, inserted] =
        seen.emplace(std::move(key), static_cast<Eigen::Index>(first.size()));
    if (inserted) {
      first.push_back(i);
      counts.push_back(0.0);
    }
    out.group[static_cast<std::size_t>(i)] = it->second;
    counts[static_cast<std::size_t>(it->second)] += 1.0;
  }
  out.rows.resize(static_cast<Eigen::Index>(first.size()), m.cols());
  for (std::size_t g = 0; g < first.size(); ++g) {
    out.rows.row(static_cast<Eigen::Index>(g)) = m.row(first[g]);
  }
  out.multiplicity = Eigen::Map<Vector>(counts.data(), static_cast<Eigen::Index>(counts.size()));
  return out;
}

}  // namespace

void ValidateProbabilities(const ClassProbabilities& probs, const char* what) {
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    if (!row.allFinite() || (row.array() < 0.0).any() ||
        (row.array() > 1.0).any()) {
      Fail(ErrorKind::kInvalidData, std::string(what) + " row " +
                                        std::to_string(i) +
                                        " has entries outside [0, 1]");
    }
    if (std::abs(row.sum() - 1.0) > 1e-4) {
      std::ostringstream msg;
      msg << what << " row " << i << " sums to " << row.sum();
      Fail(ErrorKind::kInvalidData, msg.str());
    }
  }
}

std::vector<std::size_t> TopLabels(const ClassProbabilities& probs) {
  std::vector<std::size_t> labels(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(i, c) > probs(i, best)) best = c;
    }
    labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  return labels;
}

std::vector<std::size_t> LabelHistogram(std::span<const std::size_t> labels,
                                        std::size_t classes) {
  std::vector<std::size_t> hist(classes, 0);
  for (const auto label : labels) ++hist[label];
  return hist;
}

FeatureMatrix GatherRows(const FeatureMatrix& m,
                         std::span<const std::size_t> rows) {
  FeatureMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Require(rows[r] < static_cast<std::size_t>(m.rows()),
            "row index " + std::to_string(rows[r]) + " out of range");
    out.row(static_cast<Eigen::Index>(r)) =
        m.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

ResamplingObjective::ResamplingObjective(GaussianStats real,
                                         const FeatureMatrix& candidates)
    : reference_(std::move(real)), candidates_(candidates) {
  Require(reference_.real().dim() == candidates.cols(),
          "dimension mismatch: real " +
              std::to_string(reference_.real().dim()) + " vs candidates " +
              std::to_string(candidates.cols()));
  kernels::BinaryRows rows;
  if (kernels::ToBinaryRows(candidates, &rows)) binary_ = std::move(rows);
}

GaussianStats ResamplingObjective::BinaryStats(const Vector& w) const {
  const double total = w.sum();
  GaussianStats stats;
  stats.count = static_cast<std::size_t>(candidates_.rows());
  stats.mean = kernels::omp::BinaryWeightedSums(*binary_, w) / total;
  stats.cov = kernels::omp::BinaryScatter(*binary_, w) / total -
              stats.mean * stats.mean.transpose();
  return stats;
}

double ResamplingObjective::Value(const SampleWeights& weights) const {
  return reference_.Distance(WeightedStats(candidates_, weights));
}

double ResamplingObjective::ValueAndGradient(const SampleWeights& weights,
                                             Vector* grad) const {
  const Vector w = NormalizedLinearWeights(weights);
  const GaussianStats gen =
      binary_ ? BinaryStats(w) : WeightedStatsLinear(candidates_, w);
  FrechetGradients g;
  const double value = reference_.DistanceAndGradients(gen, &g);
  Vector h;
  if (binary_) {
    // Expanded around the origin:
    // h = x^T G x + <g_mu - 2 G mu, x> + mu^T G mu - <g_mu, mu>
    const Vector g_mean = g.d_cov * gen.mean;
    h = kernels::omp::BinaryQuadraticForms(*binary_, g.d_mean - 2.0 * g_mean,
                                           g.d_cov);
    h.array() += gen.mean.dot(g_mean) - g.d_mean.dot(gen.mean);
  } else {
    h = kernels::omp::RowQuadraticForms(candidates_, gen.mean, g.d_mean,
                                        g.d_cov);
  }
  const double trace_g_sigma = g.d_cov.cwiseProduct(gen.cov).sum();
  const double total = w.sum();
  *grad = (w.array() * (h.array() - trace_g_sigma) / total).matrix();
  return value;
}

Vector ResamplingObjective::FiniteDifferenceGradient(
    const SampleWeights& weights, double step) const {
  Vector grad(weights.size());
  SampleWeights probe = weights;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    probe.logw[i] = weights.logw[i] + step;
    const double up = Value(probe);
    probe.logw[i] = weights.logw[i] - step;
    const double down = Value(probe);
    probe.logw[i] = weights.logw[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

ResamplingResult OptimizeResamplingWeights(
    const FeatureMatrix& real, const FeatureMatrix& candidates,
    const ResamplingOptions& options, std::optional<EvaluationSpace> evaluation) {
  Require(real.cols() == candidates.cols(),
          "dimension mismatch: real " + std::to_string(real.cols()) +
              " vs candidates " + std::to_string(candidates.cols()));
  Require(candidates.rows() >= 1, "no candidate rows");
  Require(options.eval_every >= 1, "eval_every must be at least 1");
  CheckFinite(candidates, "candidate features");

  // Identical candidate rows receive identical gradients at every step, so
  // they keep identical weights. Optimizing one weight per distinct row, with
  // the multiplicity folded into its initial log-weight, follows exactly the
  // same trajectory; binarized features collapse to few distinct rows.
  const UniqueRows unique = FindUniqueRows(candidates);
  const Eigen::Index groups = unique.rows.rows();
  const Vector log_multiplicity = unique.multiplicity.array().log().matrix();
  const ResamplingObjective objective(ComputeStats(real), unique.rows);

  const FeatureMatrix& eval_real = evaluation ? *evaluation->real : real;
  const FeatureMatrix& eval_gen = evaluation ? *evaluation->candidates : candidates;
  Require(eval_gen.rows() == candidates.rows(),
          "evaluation candidates must be row-aligned with the optimized ones");
  const FrechetReference eval_reference(ComputeStats(eval_real));
  const std::size_t draws = options.eval_samples > 0
                                ? options.eval_samples
                                : static_cast<std::size_t>(eval_real.rows());

  auto expand = [&](const Vector& group_logw) {
    SampleWeights w{Vector(candidates.rows())};
    for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
      w.logw[i] = group_logw[unique.group[static_cast<std::size_t>(i)]];
    }
    return w;
  };

  ResamplingResult result;
  Vector group_logw = Vector::Zero(groups);  // per-row log-weight of each group
  Vector grad;
  result.trace.reserve(options.max_iters + 1);

  for (std::size_t it = 0;; ++it) {
    const double value = objective.ValueAndGradient(
        SampleWeights{group_logw + log_multiplicity}, &grad);
    // d/d(per-row log-weight) = d/d(group log-weight) / multiplicity
    grad = grad.cwiseQuotient(unique.multiplicity);
    if (!std::isfinite(value) || !grad.allFinite()) {
      Fail(ErrorKind::kDivergence,
           "non-finite objective or gradient at iteration " + std::to_string(it));
    }
    result.trace.push_back({it, value});
    if (it == 0) result.initial_objective = value;

    if (it % options.eval_every == 0 || it == options.max_iters) {
      const SampleWeights weights = expand(group_logw);
      const auto rows = SampleWithReplacement(WeightsToProbabilities(weights),
                                              draws, options.seed);
      const double fid =
          eval_reference.Distance(ComputeStats(GatherRows(eval_gen, rows)));
      result.checkpoints.push_back({it, value, fid});
      const bool eligible = value <= result.initial_objective;
      if (it == 0 || (eligible && fid < result.selected_sampled_fid)) {
        result.selected_iteration = it;
        result.selected_objective = value;
        result.selected_sampled_fid = fid;
        result.weights = weights;
      }
      if (options.on_checkpoint) options.on_checkpoint(it, value, fid);
    }
    if (it == options.max_iters) break;
    group_logw -= options.learning_rate * grad;
  }
  return result;
}

Vector WeightsToProbabilities(const SampleWeights& weights) {
  const Vector w = NormalizedLinearWeights(weights);
  return w / w.sum();
}

std::vector<std::size_t> SampleWithReplacement(const Vector& probabilities,
                                               std::size_t m,
                                               std::uint64_t seed) {
  Require(probabilities.size() > 0, "empty probability vector");
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    Require(std::isfinite(probabilities[i]) && probabilities[i] >= 0.0,
            "probability " + std::to_string(i) + " is negative or non-finite");
  }
  const double total = probabilities.sum();
  Require(std::abs(total - 1.0) <= 1e-6,
          "probabilities sum to " + std::to_string(total) + ", not 1");
  std::discrete_distribution<std::size_t> pick(
      probabilities.data(), probabilities.data() + probabilities.size());
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out(m);
  for (auto& index : out) index = pick(rng);
  return out;
}

Top1MatchResult Top1HistogramMatch(const ClassProbabilities& real_probs,
                                   const ClassProbabilities& gen_probs,
                                   std::uint64_t seed, ShortfallPolicy policy) {
  Require(real_probs.cols() == gen_probs.cols(),
          "class count mismatch: " + std::to_string(real_probs.cols()) +
              " vs " + std::to_string(gen_probs.cols()));
  ValidateProbabilities(real_probs, "real probabilities");
  ValidateProbabilities(gen_probs, "generated probabilities");
  const auto classes = static_cast<std::size_t>(real_probs.cols());
  const auto real_labels = TopLabels(real_probs);
  const auto gen_labels = TopLabels(gen_probs);

  Top1MatchResult result;
  result.real_histogram = LabelHistogram(real_labels, classes);
  result.selected_histogram.assign(classes, 0);

  std::vector<std::size_t> order(gen_labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> leftover;  // rejected candidates, in scan order
  for (const auto row : order) {
    const auto c = gen_labels[row];
    if (result.selected_histogram[c] < result.real_histogram[c]) {
      ++result.selected_histogram[c];
      result.indices.push_back(row);
    } else {
      leftover.push_back(row);
    }
  }

  std::vector<std::size_t> deficit(classes, 0);
  std::size_t total_deficit = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    deficit[c] = result.real_histogram[c] - result.selected_histogram[c];
    total_deficit += deficit[c];
  }
  if (total_deficit == 0) return result;

  if (policy == ShortfallPolicy::kError || leftover.size() < total_deficit) {
    std::ostringstream msg;
    msg << "candidate supply exhausted; per-class deficits:";
    for (std::size_t c = 0; c < classes; ++c) {
      if (deficit[c] > 0) msg << " class " << c << ": " << deficit[c];
    }
    if (policy != ShortfallPolicy::kError) {
      msg << " (only " << leftover.size() << " unused candidates remain)";
    }
    Fail(ErrorKind::kShortfall, msg.str());
  }

  // Spread the deficit over the classes with unused candidates, proportional
  // to their remaining supply (largest-remainder rounding).
  std::vector<std::size_t> remaining(classes, 0);
  for (const auto row : leftover) ++remaining[gen_labels[row]];
  const double pool = static_cast<double>(leftover.size());
  std::vector<std::size_t> take(classes, 0);
  std::vector<std::pair<double, std::size_t>> fractions;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double share = static_cast<double>(total_deficit) *
                         static_cast<double>(remaining[c]) / pool;
    take[c] = std::min(remaining[c], static_cast<std::size_t>(std::floor(share)));
    assigned += take[c];
    fractions.push_back({share - std::floor(share), c});
  }
  std::stable_sort(fractions.begin(), fractions.end(),
                   [&](const auto& a, const auto& b) {
                     if (a.first != b.first) return a.first > b.first;
                     return remaining[a.second] > remaining[b.second];
                   });
  for (std::size_t pass = 0; assigned < total_deficit; ++pass) {
    const auto c = fractions[pass % classes].second;
    if (take[c] < remaining[c]) {
      ++take[c];
      ++assigned;
    }
  }
  for (const auto row : leftover) {
    const auto c = gen_labels[row];
    if (take[c] == 0) continue;
    --take[c];
    ++result.selected_histogram[c];
    result.indices.push_back(row);
  }
  for (std::size_t c = 0; c < classes; ++c) {
    const auto a = result.selected_histogram[c];
    const auto b = result.real_histogram[c];
    result.deviation += a > b ? a - b : b - a;
  }
  return result;
}

IndicatorMatrix BinarizeTopN(const ClassProbabilities& probs, std::size_t n) {
  const auto classes = static_cast<std::size_t>(probs.cols());
  Require(n >= 1 && n <= classes, "Top-N needs 1 <= N <= C (N = " +
                                      std::to_string(n) + ", C = " +
                                      std::to_string(classes) + ")");
  return BinarizeRanks(probs, 0, n);
}

IndicatorMatrix BinarizeMiddleN(const ClassProbabilities& probs, std::size_t n) {
  const auto classes = static_cast<std::size_t>(probs.cols());
  Require(n >= 1 && n <= classes / 2,
          "middle-N needs 1 <= N <= C/2 (N = " + std::to_string(n) +
              ", C = " + std::to_string(classes) + ")");
  return BinarizeRanks(probs, classes / 2 - n / 2, n);
}

const char* ToString(BinarizeMode mode) {
  return mode == BinarizeMode::kTop ? "top" : "middle";
}

std::vector<SweepPoint> TopNSweep(const ClassProbabilities& real_probs,
                                  const ClassProbabilities& gen_probs,
                                  const FeatureMatrix& real_features,
                                  const FeatureMatrix& gen_features,
                                  std::span<const std::size_t> ns,
                                  BinarizeMode mode,
                                  const ResamplingOptions& options,
                                  std::uint64_t seed) {
  Require(real_probs.rows() == real_features.rows() &&
              gen_probs.rows() == gen_features.rows(),
          "probabilities and features must be row-aligned");
  Require(real_probs.cols() == gen_probs.cols(), "class count mismatch");
  std::vector<SweepPoint> curve;
  if (ns.empty()) return curve;

  const FrechetReference reference(ComputeStats(real_features));
  const EvaluationSpace eval{&real_features, &gen_features};
  for (const auto n : ns) {
    const IndicatorMatrix real_ind = mode == BinarizeMode::kTop
                                         ? BinarizeTopN(real_probs, n)
                                         : BinarizeMiddleN(real_probs, n);
    const IndicatorMatrix gen_ind = mode == BinarizeMode::kTop
                                        ? BinarizeTopN(gen_probs, n)
                                        : BinarizeMiddleN(gen_probs, n);
    const ResamplingResult fit =
        OptimizeResamplingWeights(real_ind, gen_ind, options, eval);
    const auto rows = SampleWithReplacement(
        WeightsToProbabilities(fit.weights),
        static_cast<std::size_t>(real_features.rows()), seed);
    const double fid =
        reference.Distance(ComputeStats(GatherRows(gen_features, rows)));
    curve.push_back({n, fid});
  }
  return curve;
}

}  // namespace fidlens
