#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include "fidlens/feature_io.hpp"
#include "fidlens/image_io.hpp"
#include "test_util.hpp"

namespace fidlens {
namespace {

using testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Parses "key\tvalue" lines.
double Field(const std::string& tsv, const std::string& key) {
  std::istringstream in(tsv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "\t", 0) == 0) return std::stod(line.substr(key.size() + 1));
  }
  ADD_FAILURE() << key << " missing from\n" << tsv;
  return 0.0;
}

const std::string kTwoCluster = FIDLENS_DATA_DIR "/two-cluster.spec";

TEST(Cli, SynthIsByteReproducible) {
  TempDir dir;
  for (const char* name : {"a.fidl", "b.fidl"}) {
    const Outcome o = Cli({"synth", "--spec", kTwoCluster, "--n", "5000", "--seed", "1",
                           "-o", dir / name});
    ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  }
  EXPECT_EQ(Slurp(dir / "a.fidl"), Slurp(dir / "b.fidl"));
  const FeaturePayload p = ReadFeatureFile(dir / "a.fidl");
  EXPECT_EQ(p.rows(), 5000);
  EXPECT_EQ(p.dim(), 4);
  ASSERT_TRUE(p.probabilities.has_value());
  EXPECT_EQ(p.probabilities->cols(), 2);
}

TEST(Cli, FidOfAFileWithItselfIsZero) {
  TempDir dir;
  ASSERT_EQ(Cli({"synth", "--spec", kTwoCluster, "--n", "500", "-o", dir / "a.fidl"}).code, 0);
  const Outcome o = Cli({"fid", dir / "a.fidl", dir / "a.fidl"});
  EXPECT_EQ(o.code, cli::kExitOk);
  EXPECT_EQ(o.out, "0.0000\n");

  ASSERT_EQ(Cli({"stats", dir / "a.fidl", "-o", dir / "a.fids"}).code, 0);
  EXPECT_EQ(Cli({"fid", dir / "a.fids", dir / "a.fidl"}).out, "0.0000\n");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(Cli({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(Cli({}).code, cli::kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, cli::kExitUsage);
  const Outcome missing = Cli({"fid", "only-one"});
  EXPECT_EQ(missing.code, cli::kExitUsage);
  EXPECT_NE(missing.err.find("--help"), std::string::npos);
  const Outcome io = Cli({"fid", "/nonexistent/a", "/nonexistent/b"});
  EXPECT_EQ(io.code, cli::kExitDomain);
  EXPECT_EQ(io.err.rfind("fidlens: ", 0), 0u) << io.err;
}

TEST(Cli, FidRefusesMixedKindsUnlessForced) {
  TempDir dir;
  ASSERT_EQ(Cli({"synth", "--spec", kTwoCluster, "--n", "300", "--kind", "logits", "-o",
                 dir / "l.fidl"}).code, 0);
  ASSERT_EQ(Cli({"synth", "--spec", kTwoCluster, "--n", "300", "--seed", "2", "-o",
                 dir / "p.fidl"}).code, 0);
  const Outcome refused = Cli({"fid", dir / "l.fidl", dir / "p.fidl"});
  EXPECT_EQ(refused.code, cli::kExitDomain);
  EXPECT_NE(refused.err.find("logits"), std::string::npos) << refused.err;
  EXPECT_EQ(Cli({"fid", "--force", dir / "l.fidl", dir / "p.fidl"}).code, cli::kExitOk);
}

TEST(Cli, BinarizedResampleLowersFidOnTheStandardInstance) {
  TempDir dir;
  ASSERT_EQ(Cli({"synth", "--standard", "real", "--n", "1000", "--seed", "1", "-o",
                 dir / "real.fidl"}).code, 0);
  ASSERT_EQ(Cli({"synth", "--standard", "generated", "--n", "5000", "--seed", "2", "-o",
                 dir / "gen.fidl"}).code, 0);
  const Outcome o = Cli({"resample", "--real", dir / "real.fidl", "--candidates",
                         dir / "gen.fidl", "--space", "binarized", "--top-n", "5",
                         "--iters", "3000", "--eval-every", "500", "--seed", "3",
                         "--trace", dir / "trace.tsv", "--indices", dir / "rows.txt"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_LT(Field(o.out, "post_resample_fid"), Field(o.out, "pre_resample_fid"));
  EXPECT_NE(o.err.find("iteration 500 objective"), std::string::npos);

  std::istringstream trace(Slurp(dir / "trace.tsv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(trace, line)) {
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos) << line;
    EXPECT_EQ(std::stoul(line.substr(0, tab)), lines);
    ++lines;
  }
  EXPECT_EQ(lines, 3001u);

  std::istringstream rows(Slurp(dir / "rows.txt"));
  std::size_t count = 0;
  while (std::getline(rows, line)) {
    EXPECT_LT(std::stoul(line), 5000u);
    ++count;
  }
  EXPECT_EQ(count, 1000u);

  // Same inputs and seed, same report.
  const Outcome again = Cli({"resample", "--real", dir / "real.fidl", "--candidates",
                             dir / "gen.fidl", "--space", "binarized", "--top-n", "5",
                             "--iters", "3000", "--eval-every", "500", "--seed", "3"});
  EXPECT_EQ(again.out, o.out);
}

TEST(Cli, ResampleChecksItsInputs) {
  TempDir dir;
  ASSERT_EQ(Cli({"synth", "--spec", kTwoCluster, "--n", "100", "-o", dir / "r.fidl"}).code, 0);
  ASSERT_EQ(Cli({"synth", "--spec", kTwoCluster, "--n", "200", "--seed", "2", "-o",
                 dir / "g.fidl"}).code, 0);
  const std::vector<std::string> base{"resample", "--real", dir / "r.fidl",
                                      "--candidates", dir / "g.fidl"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return Cli(args);
  };
  EXPECT_EQ(with({}).code, cli::kExitDomain);  // 2x candidates, 5x required
  EXPECT_EQ(with({"--oversample", "2", "--iters", "5"}).code, cli::kExitOk);
  EXPECT_EQ(with({"--oversample", "2", "--space", "logits"}).code, cli::kExitDomain);
  EXPECT_EQ(with({"--oversample", "2", "--space", "binarized"}).code, cli::kExitDomain);
  EXPECT_EQ(with({"--top-n", "1", "--middle-n", "1"}).code, cli::kExitUsage);
  EXPECT_EQ(with({"--space", "pixels"}).code, cli::kExitUsage);
}

TEST(Cli, Top1MatchAndSweepOutputs) {
  TempDir dir;
  ASSERT_EQ(Cli({"synth", "--standard", "real", "--n", "300", "--seed", "1", "-o",
                 dir / "real.fidl"}).code, 0);
  ASSERT_EQ(Cli({"synth", "--standard", "generated", "--n", "1500", "--seed", "2", "-o",
                 dir / "gen.fidl"}).code, 0);
  const Outcome t1 = Cli({"top1-match", "--real", dir / "real.fidl", "--candidates",
                          dir / "gen.fidl", "--allow-shortfall"});
  ASSERT_EQ(t1.code, cli::kExitOk) << t1.err;
  EXPECT_GE(Field(t1.out, "pre_match_fid"), 0.0);
  EXPECT_GE(Field(t1.out, "post_match_fid"), 0.0);
  Field(t1.out, "histogram_deviation");

  const Outcome sw = Cli({"topn-sweep", "--real", dir / "real.fidl", "--candidates",
                          dir / "gen.fidl", "--ns", "1,2", "--mode", "both", "--iters",
                          "20", "--eval-every", "10"});
  ASSERT_EQ(sw.code, cli::kExitOk) << sw.err;
  std::istringstream in(sw.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "mode\tn\tfid");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4u);
}

TEST(Cli, ValidateAndBiasProbe) {
  TempDir dir;
  ASSERT_EQ(Cli({"synth", "--spec", kTwoCluster, "--n", "50", "-o", dir / "a.fidl"}).code, 0);
  const Outcome ok = Cli({"validate", dir / "a.fidl"});
  EXPECT_EQ(ok.code, cli::kExitOk);
  EXPECT_EQ(ok.out.rfind((dir / "a.fidl") + "\tok", 0), 0u) << ok.out;

  std::ofstream(dir / "bad.fidl", std::ios::binary) << "FIDL\x01";
  const Outcome bad = Cli({"validate", dir / "bad.fidl"});
  EXPECT_EQ(bad.code, cli::kExitDomain);
  EXPECT_NE(bad.err.find("offset"), std::string::npos) << bad.err;

  const Outcome bp = Cli({"bias-probe", "--spec", kTwoCluster, "--sizes", "100,1000",
                          "--repeats", "2"});
  ASSERT_EQ(bp.code, cli::kExitOk) << bp.err;
  EXPECT_EQ(bp.out.rfind("size\tmean_fid\n100\t", 0), 0u) << bp.out;
}

TEST(Cli, HeatmapAndNoiseProbe) {
  TempDir dir;
  // Two images with 3 channels on a 2x2 grid, activations consistent with
  // the pooled features.
  FeaturePayload gen;
  gen.kind = FeatureKind::kPreLogits;
  gen.features.resize(3, 3);
  gen.activations.emplace();
  gen.image_ids = std::vector<std::string>{"x", "y", "z"};
  for (Eigen::Index i = 0; i < 3; ++i) {
    ActivationTensor t(3, 2);
    for (std::size_t j = 0; j < t.data().size(); ++j) {
      t.data()[j] = static_cast<float>(0.25 * static_cast<double>((j * 7 + i * 3) % 5));
    }
    gen.features.row(i) = t.SpatialAverages().transpose();
    gen.activations->push_back(t);
  }
  WriteFeatureFile(dir / "gen.fidl", gen);
  FeaturePayload real;
  real.kind = FeatureKind::kPreLogits;
  real.features = testing::RandomMatrix(40, 3, 5).cast<float>().cast<double>();
  WriteFeatureFile(dir / "real.fidl", real);

  const Outcome hm = Cli({"heatmap", "--real", dir / "real.fidl", "--generated",
                          dir / "gen.fidl", "-o", dir / "maps", "--height", "8",
                          "--width", "6"});
  ASSERT_EQ(hm.code, cli::kExitOk) << hm.err;
  for (const char* stem : {"x", "y", "z"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / (std::string("maps/") + stem + ".pfm")));
    EXPECT_TRUE(std::filesystem::exists(dir / (std::string("maps/") + stem + ".ppm")));
  }

  std::filesystem::create_directories(dir / "imgs");
  RgbImage img(8, 6);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = 0.5f;
  WritePpm(dir / "imgs/x.ppm", img);
  const Outcome np = Cli({"noise-probe", "images", "--images", dir / "imgs", "--heatmaps",
                          dir / "maps", "--sigmas", "0,0.2", "--region", "important",
                          "-o", dir / "noised"});
  ASSERT_EQ(np.code, cli::kExitOk) << np.err;
  const RgbImage original = ReadPpm(dir / "imgs/x.ppm");
  EXPECT_EQ(ReadPpm(dir / "noised/important_0/x.ppm").pixels, original.pixels);
  const RgbImage noised = ReadPpm(dir / "noised/important_0.2/x.ppm");
  std::size_t changed = 0;
  for (Eigen::Index y = 0; y < 8; ++y) {
    for (Eigen::Index x = 0; x < 6; ++x) changed += noised.at(y, x, 0) != original.at(y, x, 0);
  }
  EXPECT_LE(changed, 24u);
  EXPECT_GT(changed, 0u);

  const Outcome score = Cli({"noise-probe", "score", "--real", dir / "real.fidl",
                             "important:0.2:" + dir / "real.fidl"});
  ASSERT_EQ(score.code, cli::kExitOk) << score.err;
  EXPECT_EQ(score.out, "region\tsigma\tfid\nimportant\t0.2\t0.0000\n");
}

TEST(FormatFixed, LocaleIndependent) {
  EXPECT_EQ(cli::FormatFixed(1.23456, 4), "1.2346");
  EXPECT_EQ(cli::FormatFixed(-0.5, 2), "-0.50");
  EXPECT_EQ(cli::FormatFixed(0.0, 4), "0.0000");
}

}  // namespace
}  // namespace fidlens
