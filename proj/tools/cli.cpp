#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>

#include "fidlens/core_stats.hpp"
#include "fidlens/error.hpp"
#include "fidlens/feature_io.hpp"
#include "fidlens/frechet.hpp"
#include "fidlens/image_io.hpp"
#include "fidlens/kernel_distance.hpp"
#include "fidlens/kernels.hpp"
#include "fidlens/resampling.hpp"
#include "fidlens/sensitivity.hpp"
#include "fidlens/synthetic.hpp"

namespace fidlens::cli {
namespace {

namespace fs = std::filesystem;

// Features plus the optional blocks every command except `heatmap` needs.
// Activations are never loaded here.
struct Loaded {
  FeatureKind kind = FeatureKind::kGeneric;
  FeatureMatrix features;
  std::optional<FeatureMatrix> probabilities;
  std::optional<std::vector<std::string>> image_ids;
};

Loaded LoadFeatures(const std::string& path) {
  FeatureFileReader reader(path);
  Loaded l;
  l.kind = reader.header().kind;
  l.features = reader.ReadFeatures();
  l.probabilities = reader.ReadProbabilities();
  l.image_ids = reader.ReadImageIds();
  CheckFinite(l.features, "features");
  return l;
}

StatsFile LoadStats(const std::string& path) {
  if (IsStatsFile(path)) return ReadStatsFile(path);
  const Loaded l = LoadFeatures(path);
  return StatsFile{l.kind, ComputeStats(l.features)};
}

const FeatureMatrix& RequireProbabilities(const Loaded& l,
                                          const std::string& path) {
  if (!l.probabilities) {
    Fail(ErrorKind::kPrecondition, path + " has no probability block");
  }
  return *l.probabilities;
}

void WriteLines(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path + " for writing");
  out << text;
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path);
}

std::string IndexLines(std::span<const std::size_t> rows) {
  std::string text;
  for (const auto r : rows) text += std::to_string(r) + "\n";
  return text;
}

double UniformSampleFid(const FrechetReference& ref, const FeatureMatrix& gen,
                        std::size_t draws, std::uint64_t seed) {
  const Vector uniform =
      Vector::Constant(gen.rows(), 1.0 / static_cast<double>(gen.rows()));
  const auto rows = SampleWithReplacement(uniform, draws, seed);
  return ref.Distance(ComputeStats(GatherRows(gen, rows)));
}

void CheckOversampling(const FeatureMatrix& real, const FeatureMatrix& gen,
                       double factor) {
  const double need = factor * static_cast<double>(real.rows());
  if (static_cast<double>(gen.rows()) < need) {
    std::ostringstream msg;
    msg << "need at least " << FormatFixed(factor, 1) << "x oversampling: "
        << gen.rows() << " candidates for " << real.rows() << " real rows";
    Fail(ErrorKind::kPrecondition, msg.str());
  }
}

MixtureSpec ResolveSpec(const std::string& path, const std::string& standard) {
  if (!standard.empty()) {
    return standard == "real" ? StandardRealSpec() : StandardGeneratedSpec();
  }
  if (path.empty()) {
    Fail(ErrorKind::kPrecondition, "give either --spec or --standard");
  }
  return MixtureSpec::Load(path);
}

std::string ImageStem(const std::optional<std::vector<std::string>>& ids,
                      std::size_t i) {
  if (ids) return fs::path((*ids)[i]).stem().string();
  std::string digits = std::to_string(i);
  return std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
}

std::function<void(std::size_t, double, double)> ProgressReporter(
    std::ostream& err, const std::string& label) {
  return [&err, label](std::size_t it, double objective, double fid) {
    err << label << "iteration " << it << " objective "
        << FormatFixed(objective, 6) << " fid " << FormatFixed(fid, 4) << "\n";
  };
}

// ---- subcommands --------------------------------------------------------

struct StatsArgs {
  std::string input;
  std::string output;
};

int RunStats(const StatsArgs& a, std::ostream& out) {
  const Loaded l = LoadFeatures(a.input);
  StatsFile file{l.kind, ComputeStats(l.features)};
  WriteStatsFile(a.output, file);
  out << "n\t" << file.stats.count << "\nd\t" << file.stats.dim() << "\n";
  return kExitOk;
}

struct FidArgs {
  std::string a;
  std::string b;
  bool force = false;
};

int RunFid(const FidArgs& a, std::ostream& out) {
  const StatsFile x = LoadStats(a.a);
  const StatsFile y = LoadStats(a.b);
  if (x.kind != y.kind && !a.force) {
    Fail(ErrorKind::kPrecondition,
         std::string("feature kinds differ (") + ToString(x.kind) + " vs " +
             ToString(y.kind) + "); pass --force to compare anyway");
  }
  out << FormatFixed(FrechetDistance(x.stats, y.stats), 4) << "\n";
  return kExitOk;
}

struct KidArgs {
  std::string real;
  std::string gen;
  bool rbf = false;
  std::optional<double> gamma;
  KidOptions options;
};

int RunKid(const KidArgs& a, std::ostream& out) {
  const Loaded real = LoadFeatures(a.real);
  const Loaded gen = LoadFeatures(a.gen);
  double value = 0.0;
  if (a.rbf) {
    const double gamma = a.gamma ? *a.gamma : DefaultRbfGamma(real.features.cols());
    value = KidRbf(real.features, gen.features, gamma, a.options);
  } else {
    value = KidPolynomial(real.features, gen.features, a.options);
  }
  out << FormatFixed(value, 6) << "\n";
  return kExitOk;
}

struct ResampleArgs {
  std::string real;
  std::string candidates;
  std::string space = "pre-logits";
  std::optional<std::size_t> top_n;
  std::optional<std::size_t> middle_n;
  std::optional<double> lr;
  std::size_t iters = 100000;
  std::size_t eval_every = 1000;
  std::uint64_t seed = 0;
  double oversample = 5.0;
  std::string trace;
  std::string indices;
};

int RunResample(const ResampleArgs& a, std::ostream& out, std::ostream& err) {
  const Loaded real = LoadFeatures(a.real);
  const Loaded gen = LoadFeatures(a.candidates);
  CheckOversampling(real.features, gen.features, a.oversample);

  const bool binarized = a.space == "binarized";
  if (binarized != (a.top_n || a.middle_n)) {
    Fail(ErrorKind::kPrecondition,
         binarized ? "binarized space needs --top-n or --middle-n"
                   : "--top-n/--middle-n only apply to the binarized space");
  }
  if (!binarized) {
    const FeatureKind want = ParseFeatureKind(a.space);
    for (const auto* l : {&real, &gen}) {
      if (l->kind != want) {
        Fail(ErrorKind::kPrecondition,
             std::string("space ") + a.space + " but input holds " +
                 ToString(l->kind) + " features");
      }
    }
  }

  ResamplingOptions opts;
  opts.learning_rate =
      a.lr ? *a.lr
           : (a.space == "pre-logits" ? kPreLogitLearningRate : kLogitLearningRate);
  opts.max_iters = a.iters;
  opts.eval_every = a.eval_every;
  opts.seed = a.seed;
  opts.on_checkpoint = ProgressReporter(err, "");

  ResamplingResult fit;
  if (binarized) {
    const auto& rp = RequireProbabilities(real, a.real);
    const auto& gp = RequireProbabilities(gen, a.candidates);
    const IndicatorMatrix ri =
        a.top_n ? BinarizeTopN(rp, *a.top_n) : BinarizeMiddleN(rp, *a.middle_n);
    const IndicatorMatrix gi =
        a.top_n ? BinarizeTopN(gp, *a.top_n) : BinarizeMiddleN(gp, *a.middle_n);
    fit = OptimizeResamplingWeights(ri, gi, opts,
                                    EvaluationSpace{&real.features, &gen.features});
  } else {
    fit = OptimizeResamplingWeights(real.features, gen.features, opts);
  }

  const auto draws = static_cast<std::size_t>(real.features.rows());
  const FrechetReference ref(ComputeStats(real.features));
  const double before = UniformSampleFid(ref, gen.features, draws, a.seed);
  const auto rows =
      SampleWithReplacement(WeightsToProbabilities(fit.weights), draws, a.seed);
  const double after = ref.Distance(ComputeStats(GatherRows(gen.features, rows)));

  if (!a.trace.empty()) {
    std::string text;
    for (const auto& p : fit.trace) {
      text += std::to_string(p.iteration) + "\t" + FormatFixed(p.objective, 10) + "\n";
    }
    WriteLines(a.trace, text);
  }
  if (!a.indices.empty()) WriteLines(a.indices, IndexLines(rows));

  out << "pre_resample_fid\t" << FormatFixed(before, 4) << "\n"
      << "post_resample_fid\t" << FormatFixed(after, 4) << "\n"
      << "selected_iteration\t" << fit.selected_iteration << "\n";
  return kExitOk;
}

struct Top1Args {
  std::string real;
  std::string candidates;
  std::uint64_t seed = 0;
  bool allow_shortfall = false;
  std::string indices;
};

int RunTop1(const Top1Args& a, std::ostream& out) {
  const Loaded real = LoadFeatures(a.real);
  const Loaded gen = LoadFeatures(a.candidates);
  const auto match = Top1HistogramMatch(
      RequireProbabilities(real, a.real), RequireProbabilities(gen, a.candidates),
      a.seed,
      a.allow_shortfall ? ShortfallPolicy::kFillProportional : ShortfallPolicy::kError);
  const FrechetReference ref(ComputeStats(real.features));
  const double before = UniformSampleFid(
      ref, gen.features, static_cast<std::size_t>(real.features.rows()), a.seed);
  const double after =
      ref.Distance(ComputeStats(GatherRows(gen.features, match.indices)));
  if (!a.indices.empty()) WriteLines(a.indices, IndexLines(match.indices));
  out << "pre_match_fid\t" << FormatFixed(before, 4) << "\n"
      << "post_match_fid\t" << FormatFixed(after, 4) << "\n"
      << "histogram_deviation\t" << match.deviation << "\n";
  return kExitOk;
}

struct SweepArgs {
  std::string real;
  std::string candidates;
  std::vector<std::size_t> ns{1, 2, 4, 8};
  std::string mode = "both";
  double lr = kLogitLearningRate;
  std::size_t iters = 100000;
  std::size_t eval_every = 1000;
  std::uint64_t seed = 0;
};

int RunSweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const Loaded real = LoadFeatures(a.real);
  const Loaded gen = LoadFeatures(a.candidates);
  const auto& rp = RequireProbabilities(real, a.real);
  const auto& gp = RequireProbabilities(gen, a.candidates);

  std::vector<BinarizeMode> modes;
  if (a.mode != "middle") modes.push_back(BinarizeMode::kTop);
  if (a.mode != "top") modes.push_back(BinarizeMode::kMiddle);

  out << "mode\tn\tfid\n";
  for (const auto mode : modes) {
    for (const auto n : a.ns) {
      ResamplingOptions opts;
      opts.learning_rate = a.lr;
      opts.max_iters = a.iters;
      opts.eval_every = a.eval_every;
      opts.seed = a.seed;
      opts.on_checkpoint = ProgressReporter(
          err, std::string(ToString(mode)) + " N=" + std::to_string(n) + " ");
      const std::size_t one[] = {n};
      const auto curve = TopNSweep(rp, gp, real.features, gen.features, one,
                                   mode, opts, a.seed);
      out << ToString(mode) << "\t" << n << "\t"
          << FormatFixed(curve.front().fid, 4) << "\n";
      out.flush();
    }
  }
  return kExitOk;
}

struct HeatmapArgs {
  std::string real;
  std::string generated;
  std::string out_dir;
  Eigen::Index height = 299;
  Eigen::Index width = 299;
};

int RunHeatmap(const HeatmapArgs& a, std::ostream& out, std::ostream& err) {
  const StatsFile real = LoadStats(a.real);
  const FeaturePayload gen = ReadFeatureFile(a.generated);
  if (!gen.activations) {
    Fail(ErrorKind::kPrecondition, a.generated + " has no activation block");
  }
  const GaussianStats base = ComputeStats(gen.features);
  const std::size_t n = base.count + 1;
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < gen.activations->size(); ++i) {
    const Heatmap h = HeatmapForImage(
        real.stats, base, gen.features.row(static_cast<Eigen::Index>(i)).transpose(),
        (*gen.activations)[i], n, a.height, a.width);
    const fs::path stem = fs::path(a.out_dir) / ImageStem(gen.image_ids, i);
    WritePfm(stem.string() + ".pfm", h.values);
    WritePpm(stem.string() + ".ppm", RenderHeatmap(h));
    out << stem.filename().string() << "\n";
    err << "heatmap " << (i + 1) << "/" << gen.activations->size() << "\n";
  }
  return kExitOk;
}

struct NoiseImagesArgs {
  std::string images;
  std::string heatmaps;
  std::vector<double> sigmas;
  std::string region = "important";
  std::uint64_t seed = 0;
  std::string out_dir;
};

std::string SigmaLabel(double sigma) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), sigma);
  return ec == std::errc() ? std::string(buf, ptr) : "nan";
}

int RunNoiseImages(const NoiseImagesArgs& a, std::ostream& out) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.images)) {
    if (entry.path().extension() == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (std::size_t s = 0; s < a.sigmas.size(); ++s) {
    const double sigma = a.sigmas[s];
    const fs::path dir = fs::path(a.out_dir) / (a.region + "_" + SigmaLabel(sigma));
    fs::create_directories(dir);
    for (std::size_t i = 0; i < files.size(); ++i) {
      const RgbImage image = ReadPpm(files[i].string());
      Mask mask = Mask::Constant(image.height, image.width, true);
      if (a.region != "everywhere") {
        const fs::path heat = fs::path(a.heatmaps) / (files[i].stem().string() + ".pfm");
        if (!fs::exists(heat)) {
          Fail(ErrorKind::kPrecondition,
               "no heatmap " + heat.string() + " for image " + files[i].string());
        }
        Heatmap h;
        h.values = ReadPfm(heat.string());
        if (h.values.rows() != image.height || h.values.cols() != image.width) {
          Fail(ErrorKind::kPrecondition,
               "heatmap " + heat.string() + " does not match the image size");
        }
        const MaskPair masks = ImportanceMasks(h);
        mask = a.region == "important" ? masks.important : masks.unimportant;
      }
      const RgbImage noised =
          AddMaskedNoise(image, mask, sigma, DeriveSeed(a.seed, {s, i}));
      WritePpm((dir / files[i].filename()).string(), noised);
    }
    out << dir.string() << "\n";
  }
  return kExitOk;
}

struct NoiseScoreArgs {
  std::string real;
  std::vector<std::string> runs;  // region:sigma:path
};

int RunNoiseScore(const NoiseScoreArgs& a, std::ostream& out) {
  const StatsFile real = LoadStats(a.real);
  const FrechetReference ref(real.stats);
  out << "region\tsigma\tfid\n";
  for (const auto& run : a.runs) {
    const auto first = run.find(':');
    const auto second = first == std::string::npos ? first : run.find(':', first + 1);
    if (second == std::string::npos) {
      Fail(ErrorKind::kPrecondition, "expected region:sigma:path, got " + run);
    }
    const std::string region = run.substr(0, first);
    const std::string sigma = run.substr(first + 1, second - first - 1);
    const StatsFile gen = LoadStats(run.substr(second + 1));
    out << region << "\t" << sigma << "\t"
        << FormatFixed(ref.Distance(gen.stats), 4) << "\n";
  }
  return kExitOk;
}

struct SynthArgs {
  std::string spec;
  std::string standard;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string kind = "pre-logits";
  std::string output;
  bool print_spec = false;
};

int RunSynth(const SynthArgs& a, std::ostream& out) {
  const MixtureSpec spec = ResolveSpec(a.spec, a.standard);
  if (a.print_spec) {
    out << spec.ToText();
    return kExitOk;
  }
  if (a.output.empty()) Fail(ErrorKind::kPrecondition, "--output is required");
  const SyntheticDraw draw = SynthGenerate(spec, a.n, a.seed);
  FeaturePayload payload;
  payload.kind = ParseFeatureKind(a.kind);
  payload.features = draw.features;
  payload.probabilities = draw.probabilities;
  WriteFeatureFile(a.output, payload);
  return kExitOk;
}

struct BiasArgs {
  std::string spec;
  std::string standard;
  std::vector<std::size_t> sizes{1000, 5000, 20000};
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
};

int RunBias(const BiasArgs& a, std::ostream& out) {
  const MixtureSpec spec = ResolveSpec(a.spec, a.standard);
  out << "size\tmean_fid\n";
  for (const auto& row : BiasProbe(spec, a.sizes, a.repeats, a.seed)) {
    out << row.sample_size << "\t" << FormatFixed(row.mean_fid, 6) << "\n";
  }
  return kExitOk;
}

struct ValidateArgs {
  std::vector<std::string> files;
};

int RunValidate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  int status = kExitOk;
  for (const auto& path : a.files) {
    try {
      if (IsStatsFile(path)) {
        const StatsFile s = ReadStatsFile(path);
        out << path << "\tok\tstats\t" << ToString(s.kind) << "\td=" << s.stats.dim()
            << "\n";
        continue;
      }
      const FeaturePayload p = ReadFeatureFile(path);
      out << path << "\tok\t" << ToString(p.kind) << "\tn=" << p.rows()
          << "\td=" << p.dim();
      if (p.probabilities) out << "\tC=" << p.probabilities->cols();
      if (p.activations) {
        const ConsistencyReport r = ValidateActivationConsistency(p);
        out << "\tpooling=" << FormatFixed(r.worst * 1e6, 3) << "e-6";
      }
      out << "\n";
    } catch (const Error& e) {
      err << path << ": " << e.what() << "\n";
      status = kExitDomain;
    }
  }
  return status;
}

void ApplyThreadLimit(std::ostream& err) {
  const char* raw = std::getenv("FIDLENS_THREADS");
  if (raw == nullptr || *raw == '\0') return;
  int threads = 0;
  const char* end = raw + std::char_traits<char>::length(raw);
  const auto [ptr, ec] = std::from_chars(raw, end, threads);
  if (ec != std::errc() || ptr != end || threads < 1) {
    err << "ignoring FIDLENS_THREADS=" << raw << "\n";
    return;
  }
  kernels::SetThreadCount(threads);
}

}  // namespace

std::string FormatFixed(double value, int decimals) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                       std::chars_format::fixed, decimals);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Frechet and kernel distances over feature files", "fidlens"};
  app.require_subcommand(1);
  app.fallthrough(false);

  const auto kinds = CLI::IsMember(
      {"pre-logits", "logits", "probabilities", "binarized", "generic"});

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Feature file -> Gaussian summary file");
  c_stats->add_option("input", stats.input, "feature file")->required();
  c_stats->add_option("-o,--output", stats.output, "stats file to write")->required();

  FidArgs fid;
  auto* c_fid = app.add_subcommand("fid", "Frechet distance between two inputs");
  c_fid->add_option("a", fid.a, "feature or stats file")->required();
  c_fid->add_option("b", fid.b, "feature or stats file")->required();
  c_fid->add_flag("--force", fid.force, "compare different feature kinds");

  KidArgs kid;
  auto* c_kid = app.add_subcommand("kid", "Kernel distance (unbiased MMD^2)");
  c_kid->add_option("real", kid.real)->required();
  c_kid->add_option("gen", kid.gen)->required();
  c_kid->add_flag("--rbf", kid.rbf, "Gaussian kernel instead of the cubic one");
  c_kid->add_option("--gamma", kid.gamma, "RBF scale, default 1/d")
      ->check(CLI::PositiveNumber);
  c_kid->add_option("--subset-size", kid.options.subset_size)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_kid->add_option("--subsets", kid.options.subsets)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_kid->add_option("--seed", kid.options.seed)->capture_default_str();

  ResampleArgs rs;
  auto* c_rs = app.add_subcommand("resample", "Optimize sampling weights to lower FID");
  c_rs->add_option("--real", rs.real)->required();
  c_rs->add_option("--candidates", rs.candidates)->required();
  c_rs->add_option("--space", rs.space)
      ->check(CLI::IsMember({"pre-logits", "logits", "binarized"}))
      ->capture_default_str();
  auto* o_top = c_rs->add_option("--top-n", rs.top_n)->check(CLI::PositiveNumber);
  auto* o_mid = c_rs->add_option("--middle-n", rs.middle_n)->check(CLI::PositiveNumber);
  o_top->excludes(o_mid);
  c_rs->add_option("--lr", rs.lr, "default 10 (pre-logits) or 5")
      ->check(CLI::PositiveNumber);
  c_rs->add_option("--iters", rs.iters)->capture_default_str();
  c_rs->add_option("--eval-every", rs.eval_every)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_rs->add_option("--seed", rs.seed)->capture_default_str();
  c_rs->add_option("--oversample", rs.oversample, "required candidates per real row")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c_rs->add_option("--trace", rs.trace, "write iteration<TAB>objective rows");
  c_rs->add_option("--indices", rs.indices, "write the selected candidate rows");

  Top1Args t1;
  auto* c_t1 = app.add_subcommand("top1-match", "Top-1 class histogram matching");
  c_t1->add_option("--real", t1.real)->required();
  c_t1->add_option("--candidates", t1.candidates)->required();
  c_t1->add_option("--seed", t1.seed)->capture_default_str();
  c_t1->add_flag("--allow-shortfall", t1.allow_shortfall,
                 "fill exhausted bins proportionally instead of failing");
  c_t1->add_option("--indices", t1.indices, "write the selected candidate rows");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("topn-sweep", "FID after Top-N matching, per N");
  c_sw->add_option("--real", sw.real)->required();
  c_sw->add_option("--candidates", sw.candidates)->required();
  c_sw->add_option("--ns", sw.ns)->delimiter(',')->capture_default_str();
  c_sw->add_option("--mode", sw.mode)
      ->check(CLI::IsMember({"top", "middle", "both"}))
      ->capture_default_str();
  c_sw->add_option("--lr", sw.lr)->check(CLI::PositiveNumber)->capture_default_str();
  c_sw->add_option("--iters", sw.iters)->capture_default_str();
  c_sw->add_option("--eval-every", sw.eval_every)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_sw->add_option("--seed", sw.seed)->capture_default_str();

  HeatmapArgs hm;
  auto* c_hm = app.add_subcommand("heatmap", "Per-image FID sensitivity heatmaps");
  c_hm->add_option("--real", hm.real, "feature or stats file")->required();
  c_hm->add_option("--generated", hm.generated, "feature file with activations")
      ->required();
  c_hm->add_option("-o,--out-dir", hm.out_dir)->required();
  c_hm->add_option("--height", hm.height)->check(CLI::PositiveNumber)->capture_default_str();
  c_hm->add_option("--width", hm.width)->check(CLI::PositiveNumber)->capture_default_str();

  auto* c_np = app.add_subcommand("noise-probe", "Noise important or unimportant regions");
  c_np->require_subcommand(1);
  NoiseImagesArgs ni;
  auto* c_ni = c_np->add_subcommand("images", "Write noised copies of PPM images");
  c_ni->add_option("--images", ni.images)->required();
  c_ni->add_option("--heatmaps", ni.heatmaps, "PFM heatmaps named after the images");
  c_ni->add_option("--sigmas", ni.sigmas)->delimiter(',')->required();
  c_ni->add_option("--region", ni.region)
      ->check(CLI::IsMember({"important", "unimportant", "everywhere"}))
      ->capture_default_str();
  c_ni->add_option("--seed", ni.seed)->capture_default_str();
  c_ni->add_option("-o,--out-dir", ni.out_dir)->required();
  NoiseScoreArgs ns;
  auto* c_ns = c_np->add_subcommand("score", "FID of re-extracted noised sets");
  c_ns->add_option("--real", ns.real)->required();
  c_ns->add_option("runs", ns.runs, "region:sigma:feature-file")->required();

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Draw a synthetic feature file");
  auto* o_spec = c_sy->add_option("--spec", sy.spec, "mixture spec file");
  auto* o_std = c_sy->add_option("--standard", sy.standard, "built-in instance")
                    ->check(CLI::IsMember({"real", "generated"}));
  o_spec->excludes(o_std);
  c_sy->add_option("--n", sy.n)->capture_default_str();
  c_sy->add_option("--seed", sy.seed)->capture_default_str();
  c_sy->add_option("--kind", sy.kind)->check(kinds)->capture_default_str();
  c_sy->add_option("-o,--output", sy.output);
  c_sy->add_flag("--print-spec", sy.print_spec, "print the spec text and exit");

  BiasArgs bp;
  auto* c_bp = app.add_subcommand("bias-probe", "Mean same-distribution FID per size");
  auto* o_bspec = c_bp->add_option("--spec", bp.spec);
  auto* o_bstd = c_bp->add_option("--standard", bp.standard)
                     ->check(CLI::IsMember({"real", "generated"}));
  o_bspec->excludes(o_bstd);
  c_bp->add_option("--sizes", bp.sizes)->delimiter(',')->capture_default_str();
  c_bp->add_option("--repeats", bp.repeats)->check(CLI::PositiveNumber)->capture_default_str();
  c_bp->add_option("--seed", bp.seed)->capture_default_str();

  ValidateArgs va;
  auto* c_va = app.add_subcommand("validate", "Check feature and stats files");
  c_va->add_option("files", va.files)->required();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("fidlens");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "fidlens: " << e.what() << "\n";
    err << "run 'fidlens --help' for usage\n";
    return kExitUsage;
  }

  ApplyThreadLimit(err);
  try {
    if (*c_stats) return RunStats(stats, out);
    if (*c_fid) return RunFid(fid, out);
    if (*c_kid) return RunKid(kid, out);
    if (*c_rs) return RunResample(rs, out, err);
    if (*c_t1) return RunTop1(t1, out);
    if (*c_sw) return RunSweep(sw, out, err);
    if (*c_hm) return RunHeatmap(hm, out, err);
    if (*c_ni) return RunNoiseImages(ni, out);
    if (*c_ns) return RunNoiseScore(ns, out);
    if (*c_sy) return RunSynth(sy, out);
    if (*c_bp) return RunBias(bp, out);
    if (*c_va) return RunValidate(va, out, err);
  } catch (const std::exception& e) {
    err << "fidlens: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace fidlens::cli
