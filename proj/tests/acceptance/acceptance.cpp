// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Usage: fidlens_acceptance [name-substring ...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fidlens/core_stats.hpp"
#include "fidlens/frechet.hpp"
#include "fidlens/kernel_distance.hpp"
#include "fidlens/resampling.hpp"
#include "fidlens/sensitivity.hpp"
#include "fidlens/synthetic.hpp"

namespace fidlens {
namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

FeatureMatrix Gaussian(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureMatrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Matrix Spd(Eigen::Index d, std::mt19937_64& rng) {
  const FeatureMatrix a = Gaussian(d, d, rng);
  Matrix m = a * a.transpose() / static_cast<double>(d);
  m += 0.5 * Matrix::Identity(d, d);
  return (m + m.transpose()) / 2.0;
}

GaussianStats Stats(Eigen::Index d, std::mt19937_64& rng, std::size_t count = 1000) {
  GaussianStats s;
  s.mean = Gaussian(d, 1, rng).col(0);
  s.cov = Spd(d, rng);
  s.count = count;
  return s;
}

double Rel(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

template <typename A, typename B>
double Rel(const A& got, const B& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-300);
}

Vector Central(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double up = f(p);
    p[i] = x[i] - h;
    g[i] = (up - f(p)) / (2 * h);
    p[i] = x[i];
  }
  return g;
}

Verdict OracleAgreement() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<Eigen::Index> dim(1, 64);
  std::uniform_real_distribution<double> var(0.05, 5.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index d = dim(rng);
    Vector v1(d), v2(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      v1[i] = var(rng);
      v2[i] = var(rng);
    }
    GaussianStats a{Gaussian(d, 1, rng).col(0), v1.asDiagonal(), 100};
    GaussianStats b{Gaussian(d, 1, rng).col(0), v2.asDiagonal(), 100};
    worst = std::max(worst, Rel(FrechetDistance(a, b),
                                FrechetDiagonal(a.mean, v1, b.mean, v2)));
  }
  double self = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index d = dim(rng);
    const GaussianStats s = Stats(d, rng);
    self = std::max(self, FrechetDistance(s, s) / (1e-6 * static_cast<double>(d)));
  }
  return {worst <= 1e-8 && self <= 1.0,
          Fmt("max rel err %.2e (tol 1e-8); max FID(S,S)/(1e-6 d) %.2e (tol 1)", worst, self)};
}

Verdict GradientSuite() {
  std::mt19937_64 rng(2);
  const Eigen::Index dims[3] = {2, 8, 16};
  double worst_full = 0.0;
  double worst_sample = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index d = dims[t % 3];
    const GaussianStats real = Stats(d, rng);
    const GaussianStats gen = Stats(d, rng);
    const FrechetGradients g = FidGradients(real, gen);
    const Vector fd_mean = Central(
        [&](const Vector& mu) {
          GaussianStats p = gen;
          p.mean = mu;
          return FrechetDistance(real, p);
        },
        gen.mean, 1e-5);
    worst_full = std::max(worst_full, Rel(g.d_mean, fd_mean));
    Matrix fd_cov(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = a; b < d; ++b) {
        auto at = [&](double h) {
          GaussianStats p = gen;
          p.cov(a, b) += h;
          if (a != b) p.cov(b, a) += h;
          return FrechetDistance(real, p);
        };
        const double slope = (at(1e-5) - at(-1e-5)) / 2e-5;
        fd_cov(a, b) = fd_cov(b, a) = a == b ? slope : slope / 2;
      }
    }
    worst_full = std::max(worst_full, Rel(g.d_cov, fd_cov));

    const GaussianStats base = Stats(d, rng, 100);
    const Vector f = 2.0 * Gaussian(d, 1, rng).col(0);
    const Vector gs = FidGradSample(real, base, f, 101);
    const Vector fd = Central(
        [&](const Vector& x) { return FrechetDistance(real, UpdateStats(base, x, 101)); },
        f, 1e-5);
    worst_sample = std::max(worst_sample, Rel(gs, fd));
  }
  return {worst_full <= 1e-4 && worst_sample <= 1e-4,
          Fmt("fidGradients max rel err %.2e, fidGradSample %.2e (tol 1e-4)", worst_full,
              worst_sample)};
}

Verdict IncrementalConsistency() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<Eigen::Index> pick_n(3, 1000);
  std::uniform_int_distribution<Eigen::Index> pick_d(1, 64);
  double update = 0.0;
  double weighted = 0.0;
  for (int t = 0; t < 25; ++t) {
    const Eigen::Index n = pick_n(rng);
    const Eigen::Index d = pick_d(rng);
    const FeatureMatrix x = Gaussian(n, d, rng);
    const GaussianStats u = UpdateStats(ComputeStats(x.topRows(n - 1)),
                                        x.row(n - 1).transpose(),
                                        static_cast<std::size_t>(n));
    const GaussianStats batch = ComputeStats(x);
    update = std::max({update, Rel(u.mean, batch.mean), Rel(u.cov, batch.cov)});
    const GaussianStats w = WeightedStats(x, SampleWeights::Uniform(n));
    const double scale = static_cast<double>(n - 1) / static_cast<double>(n);
    weighted = std::max(weighted, Rel(w.cov, Matrix(batch.cov * scale)));
  }
  return {update <= 1e-10 && weighted <= 1e-12,
          Fmt("update vs batch %.2e (tol 1e-10); uniform weighted vs (n-1)/n %.2e (tol 1e-12)",
              update, weighted)};
}

// Real 10000 rows, 5x generated candidates.
struct StandardInstance {
  SyntheticDraw real;
  SyntheticDraw gen;
  std::optional<FrechetReference> ref;
  FeatureMatrix uniform_sample;
  double uniform_fid = 0.0;
};

constexpr std::size_t kRealRows = 10000;
constexpr std::uint64_t kSampleSeed = 99;

StandardInstance& Standard() {
  static StandardInstance* s = [] {
    auto* inst = new StandardInstance;
    inst->real = SynthGenerate(StandardRealSpec(), kRealRows, 1);
    inst->gen = SynthGenerate(StandardGeneratedSpec(), 5 * kRealRows, 2);
    inst->ref.emplace(ComputeStats(inst->real.features));
    const Vector uniform = Vector::Constant(inst->gen.features.rows(),
                                            1.0 / static_cast<double>(inst->gen.features.rows()));
    inst->uniform_sample =
        GatherRows(inst->gen.features, SampleWithReplacement(uniform, kRealRows, 7));
    inst->uniform_fid = inst->ref->Distance(ComputeStats(inst->uniform_sample));
    return inst;
  }();
  return *s;
}

// Pre-logit fit shared by the null-space and KID criteria; its runtime is
// charged to both.
struct PreLogitFit {
  FeatureMatrix sample;
  double fid = 0.0;
  double seconds = 0.0;
};

PreLogitFit* g_prelogit = nullptr;

PreLogitFit& PreLogit() {
  if (!g_prelogit) g_prelogit = [] {
    const auto start = Clock::now();
    StandardInstance& s = Standard();
    ResamplingOptions opts;
    opts.learning_rate = kPreLogitLearningRate;
    opts.max_iters = 2000;
    opts.eval_every = 200;
    opts.seed = 11;
    const ResamplingResult r = OptimizeResamplingWeights(s.real.features, s.gen.features, opts);
    auto* out = new PreLogitFit;
    out->sample = GatherRows(
        s.gen.features,
        SampleWithReplacement(WeightsToProbabilities(r.weights), kRealRows, kSampleSeed));
    out->fid = s.ref->Distance(ComputeStats(out->sample));
    out->seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
  }();
  return *g_prelogit;
}

Verdict NullSpace() {
  const StandardInstance& s = Standard();
  const PreLogitFit& fit = PreLogit();
  const double reduction = 1.0 - fit.fid / s.uniform_fid;
  return {reduction >= 0.5 && reduction < 1.0,
          Fmt("uniform FID %.4f -> resampled %.4f, reduction %.1f%% (need [50%%, 100%%))",
              s.uniform_fid, fit.fid, 100 * reduction)};
}

Verdict KidCoMovement() {
  const StandardInstance& s = Standard();
  const PreLogitFit& fit = PreLogit();
  const KidOptions opts{1000, 50, 0};
  const double gamma = DefaultRbfGamma(s.real.features.cols());
  const double poly_before = KidPolynomial(s.real.features, s.uniform_sample, opts);
  const double poly_after = KidPolynomial(s.real.features, fit.sample, opts);
  const double rbf_before = KidRbf(s.real.features, s.uniform_sample, gamma, opts);
  const double rbf_after = KidRbf(s.real.features, fit.sample, gamma, opts);
  const double poly = 1.0 - poly_after / poly_before;
  const double rbf = 1.0 - rbf_after / rbf_before;
  return {poly_before > 0 && rbf_before > 0 && poly >= 0.3 && rbf >= 0.3,
          Fmt("KID %.5f -> %.5f (%.1f%%), RBF-KID %.6f -> %.6f (%.1f%%), need >= 30%% each",
              poly_before, poly_after, 100 * poly, rbf_before, rbf_after, 100 * rbf)};
}

Verdict TopNSweepCriterion() {
  const StandardInstance& s = Standard();
  ResamplingOptions opts;
  opts.learning_rate = kLogitLearningRate;
  opts.max_iters = 50000;
  opts.eval_every = 1000;
  opts.seed = 11;
  const std::vector<std::size_t> ns{1, 2, 4, 8};
  const auto top = TopNSweep(s.real.probabilities, s.gen.probabilities, s.real.features,
                             s.gen.features, ns, BinarizeMode::kTop, opts, kSampleSeed);
  const auto mid = TopNSweep(s.real.probabilities, s.gen.probabilities, s.real.features,
                             s.gen.features, ns, BinarizeMode::kMiddle, opts, kSampleSeed);
  bool ordered = true;
  std::string curve;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    ordered = ordered && top[i].fid <= mid[i].fid;
    curve += Fmt(" N=%zu %.4f/%.4f", ns[i], top[i].fid, mid[i].fid);
  }
  const double drop = 1.0 - top.back().fid / top.front().fid;
  return {drop >= 0.2 && ordered,
          Fmt("top/middle FID:%s; top drop N=1->8 %.1f%% (need >= 20%%), top <= middle: %s",
              curve.c_str(), 100 * drop, ordered ? "yes" : "no")};
}

Verdict Top1Matching() {
  const StandardInstance& s = Standard();
  const Top1MatchResult r = Top1HistogramMatch(s.real.probabilities, s.gen.probabilities, 5);
  const double post = s.ref->Distance(ComputeStats(GatherRows(s.gen.features, r.indices)));
  const double full = s.ref->Distance(ComputeStats(s.gen.features));
  const bool exact = r.selected_histogram == r.real_histogram;
  return {exact && post < s.uniform_fid && post < full,
          Fmt("FID uniform sample %.4f, all candidates %.4f -> matched %.4f; histogram exact: %s",
              s.uniform_fid, full, post, exact ? "yes" : "no")};
}

Verdict SampleCountBias() {
  const std::vector<std::size_t> sizes{1000, 5000, 20000};
  const auto table = BiasProbe(StandardRealSpec(), sizes, 5, 1);
  const bool decreasing =
      table[0].mean_fid > table[1].mean_fid && table[1].mean_fid > table[2].mean_fid;
  return {decreasing, Fmt("mean FID %.4f (1000) > %.4f (5000) > %.4f (20000): %s",
                          table[0].mean_fid, table[1].mean_fid, table[2].mean_fid,
                          decreasing ? "yes" : "no")};
}

Verdict AffineCorrelation() {
  const MixtureSpec real = StandardRealSpec();
  const auto ensemble = PerturbedEnsemble(real, 20, 5);
  const AffineMap map = RandomAffineMap(16, static_cast<Eigen::Index>(real.dim), 10.0, 3);
  const auto report = AffineCorrelationProbe(real, ensemble, map, 10000, 1);
  return {report.correlation >= 0.9 && !report.low_rank,
          Fmt("Pearson r %.4f over 20 members, condition 10 map (need >= 0.9)",
              report.correlation)};
}

Verdict SensitivityPipeline() {
  std::mt19937_64 rng(6);
  double pooling = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Vector g = 3.0 * Gaussian(16, 1, rng).col(0);
    const Vector alpha = ImportanceWeights(PooledSpatialGradient(g, 8));
    for (Eigen::Index k = 0; k < 16; ++k) {
      pooling = std::max(pooling, Rel(alpha[k], g[k] * g[k] / 4096.0));
    }
  }

  int localized = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 r(seed);
    std::uniform_int_distribution<Eigen::Index> cell(0, 7);
    std::uniform_int_distribution<Eigen::Index> pick(0, 5);
    std::normal_distribution<double> noise(0.0, 0.05);
    ActivationTensor a(6, 8);
    for (double& v : a.data()) v = noise(r);
    const Eigen::Index channel = pick(r);
    const Eigen::Index row = cell(r);
    const Eigen::Index col = cell(r);
    a.channel(channel).setZero();
    a.at(channel, row, col) = 5.0;
    const Vector f = a.SpatialAverages();
    GaussianStats base{f, Matrix::Identity(6, 6), 99};
    base.mean[channel] -= 1.0;
    GaussianStats real = base;
    real.mean[channel] += 3.0;
    const Heatmap hm = HeatmapForImage(real, base, f, a, 100, 96, 96);
    Eigen::Index y = 0, x = 0;
    hm.values.cwiseAbs().maxCoeff(&y, &x);
    localized += (y / 12 == row && x / 12 == col);
  }

  const Heatmap flat = LanczosUpsample(Grid::Constant(8, 8, 0.731), 299, 299);
  const double constant = (flat.values.array() - 0.731).abs().maxCoeff();
  return {pooling <= 1e-12 && localized == 10 && constant <= 1e-6,
          Fmt("pooling identity %.2e (tol 1e-12); localized %d/10; Lanczos constant %.2e "
              "(tol 1e-6)",
              pooling, localized, constant)};
}

struct Criterion {
  const char* name;
  double limit_seconds;
  Verdict (*run)();
  bool shares_prelogit_fit = false;
};

}  // namespace
}  // namespace fidlens

int main(int argc, char** argv) {
  using namespace fidlens;
  const Criterion criteria[] = {
      {"oracle-agreement", 10, OracleAgreement},
      {"gradient-suite", 30, GradientSuite},
      {"incremental-weighted-consistency", 5, IncrementalConsistency},
      {"null-space-attack", 300, NullSpace, true},
      {"topn-sweep", 600, TopNSweepCriterion},
      {"top1-matching", 60, Top1Matching},
      {"kid-co-movement", 300, KidCoMovement, true},
      {"sample-count-bias", 120, SampleCountBias},
      {"affine-correlation", 120, AffineCorrelation},
      {"sensitivity-pipeline", 30, SensitivityPipeline},
  };
  // The standard instance is drawn once, outside every timed criterion.
  const auto setup = Clock::now();
  Standard();
  std::printf("standard instance drawn in %.1f s\n",
              std::chrono::duration<double>(Clock::now() - setup).count());
  std::fflush(stdout);

  int failures = 0;
  int ran = 0;
  for (const Criterion& c : criteria) {
    if (argc > 1) {
      bool selected = false;
      for (int i = 1; i < argc; ++i) selected |= std::string(c.name).find(argv[i]) != std::string::npos;
      if (!selected) continue;
    }
    ++ran;
    const bool reuses_fit = c.shares_prelogit_fit && g_prelogit != nullptr;
    const auto start = Clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (reuses_fit) seconds += g_prelogit->seconds;
    const bool in_time = seconds < c.limit_seconds;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::printf("%s  %-34s %s  [%.1f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.name,
                v.detail.c_str(), seconds, c.limit_seconds, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
