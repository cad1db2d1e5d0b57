#include "fidlens/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "fidlens/core_stats.hpp"
#include "fidlens/error.hpp"
#include "fidlens/frechet.hpp"

namespace fidlens {
namespace {

// Standard instance geometry.
constexpr std::size_t kStandardDim = 16;
constexpr std::size_t kStandardPopulated = 8;
constexpr std::size_t kStandardPrototypes = 8;
constexpr double kStandardMeanSpread = 0.75;
constexpr double kStandardPrototypeSpread = 1.0;
constexpr double kStandardTemperature = 4.0;
constexpr std::uint64_t kStandardGeometrySeed = 20230118;

Vector ParseVector(const std::string& text, std::size_t dim,
                   const std::string& key) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      Fail(ErrorKind::kPrecondition, "bad number '" + item + "' in " + key);
    }
  }
  if (values.size() == 1 && dim > 1) values.assign(dim, values.front());
  if (values.size() != dim) {
    Fail(ErrorKind::kPrecondition, key + " has " + std::to_string(values.size()) +
                                       " entries, expected " + std::to_string(dim));
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(dim));
}

std::string FormatVector(const Vector& v) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

double Pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    Fail(ErrorKind::kInvalidData,
         "correlation undefined: an FID series has zero variance");
  }
  return sxy / std::sqrt(sxx * syy);
}

FeatureMatrix ApplyAffine(const FeatureMatrix& x, const AffineMap& map) {
  FeatureMatrix out = x * map.weights.transpose();
  out.rowwise() += map.bias.transpose();
  return out;
}

}  // namespace

std::size_t MixtureSpec::ClassCount() const {
  std::size_t classes = 0;
  for (const auto& c : components) classes = std::max(classes, c.label + 1);
  return classes;
}

void MixtureSpec::Validate() const {
  Require(dim >= 1, "mixture spec needs dim >= 1");
  Require(!components.empty(), "mixture spec has no components");
  Require(std::isfinite(temperature) && temperature > 0.0,
          "temperature must be positive");
  double total = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    const std::string name = "component " + std::to_string(k);
    Require(std::isfinite(c.weight) && c.weight >= 0.0,
            name + " has a negative weight");
    Require(static_cast<std::size_t>(c.mean.size()) == dim &&
                static_cast<std::size_t>(c.variance.size()) == dim,
            name + " does not match dim " + std::to_string(dim));
    Require(c.mean.allFinite() && c.variance.allFinite() &&
                (c.variance.array() >= 0.0).all(),
            name + " has a non-finite mean or a negative variance");
    total += c.weight;
  }
  Require(std::abs(total - 1.0) <= 1e-6,
          "mixture proportions sum to " + std::to_string(total));
}

MixtureSpec MixtureSpec::Parse(const std::string& text) {
  MixtureSpec spec;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<std::pair<std::string, std::string>>> pending;
  while (std::getline(lines, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream words(line);
    std::string key;
    if (!(words >> key)) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (key == "dim") {
      Require(static_cast<bool>(words >> spec.dim), where + ": bad dim");
    } else if (key == "temperature") {
      Require(static_cast<bool>(words >> spec.temperature),
              where + ": bad temperature");
    } else if (key == "component") {
      std::vector<std::pair<std::string, std::string>> fields;
      std::string field;
      while (words >> field) {
        const auto eq = field.find('=');
        Require(eq != std::string::npos, where + ": expected key=value, got '" +
                                             field + "'");
        fields.emplace_back(field.substr(0, eq), field.substr(eq + 1));
      }
      pending.push_back(std::move(fields));
    } else {
      Fail(ErrorKind::kPrecondition, where + ": unknown directive '" + key + "'");
    }
  }
  // Components are resolved after the whole file so `dim` may come last.
  for (const auto& fields : pending) {
    MixtureComponent c;
    bool has_mean = false, has_var = false, has_weight = false;
    for (const auto& [k, v] : fields) {
      if (k == "weight") {
        c.weight = std::stod(v);
        has_weight = true;
      } else if (k == "label") {
        c.label = static_cast<std::size_t>(std::stoul(v));
      } else if (k == "mean") {
        c.mean = ParseVector(v, spec.dim, "mean");
        has_mean = true;
      } else if (k == "var") {
        c.variance = ParseVector(v, spec.dim, "var");
        has_var = true;
      } else {
        Fail(ErrorKind::kPrecondition, "unknown component field '" + k + "'");
      }
    }
    Require(has_mean && has_var && has_weight,
            "component needs weight, mean and var");
    spec.components.push_back(std::move(c));
  }
  spec.Validate();
  return spec;
}

MixtureSpec MixtureSpec::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str());
}

std::string MixtureSpec::ToText() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "dim " << dim << "\n";
  out << "temperature " << temperature << "\n";
  for (const auto& c : components) {
    out << "component weight=" << c.weight << " label=" << c.label
        << " mean=" << FormatVector(c.mean) << " var=" << FormatVector(c.variance)
        << "\n";
  }
  return out.str();
}

SyntheticDraw SynthGenerate(const MixtureSpec& spec, std::size_t n,
                            std::uint64_t seed) {
  spec.Validate();
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const std::size_t k_count = spec.components.size();
  const auto classes = static_cast<Eigen::Index>(spec.ClassCount());

  std::vector<double> weights;
  for (const auto& c : spec.components) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(
      std::numeric_limits<double>::min(), 1.0);
  std::mt19937_64 rng(seed);

  SyntheticDraw draw;
  draw.features.resize(static_cast<Eigen::Index>(n), d);
  draw.probabilities = FeatureMatrix::Zero(static_cast<Eigen::Index>(n), classes);
  draw.components.resize(n);
  Vector logits(static_cast<Eigen::Index>(k_count));

  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const std::size_t k = pick(rng);
    draw.components[i] = k;
    const auto& comp = spec.components[k];
    for (Eigen::Index j = 0; j < d; ++j) {
      draw.features(row, j) =
          comp.mean[j] + std::sqrt(comp.variance[j]) * normal(rng);
    }
    for (std::size_t p = 0; p < k_count; ++p) {
      const double dist2 =
          (draw.features.row(row).transpose() - spec.components[p].mean)
              .squaredNorm();
      const double gumbel = -std::log(-std::log(uniform(rng)));
      logits[static_cast<Eigen::Index>(p)] =
          -dist2 / (2.0 * spec.temperature) + gumbel;
    }
    const Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
    const double z = e.sum();
    for (std::size_t p = 0; p < k_count; ++p) {
      draw.probabilities(row, static_cast<Eigen::Index>(spec.components[p].label)) +=
          e[static_cast<Eigen::Index>(p)] / z;
    }
  }
  return draw;
}

double OracleFrechet(const MixtureSpec& a, const MixtureSpec& b) {
  a.Validate();
  b.Validate();
  if (a.components.size() != 1 || b.components.size() != 1) {
    Fail(ErrorKind::kUnsupported,
         "closed-form FID exists only for single-component specs");
  }
  Require(a.dim == b.dim, "spec dimensions differ");
  const auto& x = a.components.front();
  const auto& y = b.components.front();
  return FrechetDiagonal(x.mean, x.variance, y.mean, y.variance);
}

std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(base),
                                   static_cast<std::uint32_t>(base >> 32)};
  for (const auto p : path) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint64_t out[1];
  std::uint32_t raw[2];
  seq.generate(raw, raw + 2);
  out[0] = (static_cast<std::uint64_t>(raw[1]) << 32) | raw[0];
  return out[0];
}

std::vector<BiasRow> BiasProbe(const MixtureSpec& spec,
                               std::span<const std::size_t> sizes,
                               std::size_t repeats, std::uint64_t seed) {
  Require(repeats >= 1, "bias probe needs at least one repeat");
  std::vector<BiasRow> table;
  for (const auto size : sizes) {
    Require(size >= 2, "bias probe sample sizes must be >= 2");
    double total = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto a = SynthGenerate(spec, size, DeriveSeed(seed, {size, r, 0}));
      const auto b = SynthGenerate(spec, size, DeriveSeed(seed, {size, r, 1}));
      total += FrechetDistance(ComputeStats(a.features), ComputeStats(b.features));
    }
    table.push_back({size, total / static_cast<double>(repeats)});
  }
  return table;
}

AffineCorrelationReport AffineCorrelationProbe(
    const MixtureSpec& real, std::span<const MixtureSpec> ensemble,
    const AffineMap& map, std::size_t samples, std::uint64_t seed) {
  Require(ensemble.size() >= 2, "correlation needs at least two ensemble members");
  Require(map.weights.cols() == static_cast<Eigen::Index>(real.dim),
          "affine map input dimension does not match the spec");
  Require(map.bias.size() == map.weights.rows(),
          "affine bias length does not match the map");

  AffineCorrelationReport report;
  report.rank = Eigen::ColPivHouseholderQR<Matrix>(map.weights).rank();
  report.low_rank =
      report.rank < std::min(map.weights.rows(), map.weights.cols());

  const FeatureMatrix real_features =
      SynthGenerate(real, samples, DeriveSeed(seed, {0})).features;
  const FrechetReference feature_ref(ComputeStats(real_features));
  const FrechetReference mapped_ref(
      ComputeStats(ApplyAffine(real_features, map)));
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    const FeatureMatrix gen =
        SynthGenerate(ensemble[m], samples, DeriveSeed(seed, {1, m})).features;
    report.feature_fids.push_back(feature_ref.Distance(ComputeStats(gen)));
    report.mapped_fids.push_back(
        mapped_ref.Distance(ComputeStats(ApplyAffine(gen, map))));
  }
  report.correlation = Pearson(report.feature_fids, report.mapped_fids);
  return report;
}

AffineMap RandomAffineMap(Eigen::Index rows, Eigen::Index cols,
                          double condition, std::uint64_t seed) {
  Require(rows >= 1 && cols >= 1 && condition >= 1.0,
          "affine map needs positive shape and condition >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    }
    return m;
  };
  const Eigen::Index k = std::min(rows, cols);
  const Matrix u = Eigen::HouseholderQR<Matrix>(gaussian(rows, rows))
                       .householderQ() * Matrix::Identity(rows, k);
  const Matrix v = Eigen::HouseholderQR<Matrix>(gaussian(cols, cols))
                       .householderQ() * Matrix::Identity(cols, k);
  Vector singular(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    singular[i] = k == 1 ? 1.0
                         : std::pow(condition, static_cast<double>(i) /
                                                   static_cast<double>(k - 1));
  }
  AffineMap map;
  map.weights = u * singular.asDiagonal() * v.transpose();
  map.bias = gaussian(rows, 1).col(0);
  return map;
}

std::vector<MixtureSpec> PerturbedEnsemble(const MixtureSpec& base,
                                           std::size_t count,
                                           std::uint64_t seed) {
  base.Validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<MixtureSpec> out;
  for (std::size_t m = 0; m < count; ++m) {
    const double t = static_cast<double>(m + 1) / static_cast<double>(count);
    MixtureSpec spec = base;
    double total = 0.0;
    for (auto& c : spec.components) {
      Vector dir(c.mean.size());
      for (Eigen::Index j = 0; j < dir.size(); ++j) dir[j] = normal(rng);
      c.mean += t * dir.normalized();
      for (Eigen::Index j = 0; j < c.variance.size(); ++j) {
        c.variance[j] *= 1.0 + 0.5 * t * uniform(rng);
      }
      if (c.weight > 0.0) c.weight *= std::exp(t * normal(rng));
      total += c.weight;
    }
    for (auto& c : spec.components) c.weight /= total;
    out.push_back(std::move(spec));
  }
  return out;
}

namespace {

MixtureSpec StandardSpec(const std::vector<double>& proportions) {
  std::mt19937_64 rng(kStandardGeometrySeed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MixtureSpec spec;
  spec.dim = kStandardDim;
  spec.temperature = kStandardTemperature;
  const auto d = static_cast<Eigen::Index>(kStandardDim);
  for (std::size_t k = 0; k < kStandardPopulated + kStandardPrototypes; ++k) {
    MixtureComponent c;
    const bool populated = k < kStandardPopulated;
    const double spread =
        populated ? kStandardMeanSpread : kStandardPrototypeSpread;
    c.mean.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) c.mean[j] = spread * normal(rng);
    c.variance = Vector::Ones(d);
    c.label = k;
    c.weight = populated ? proportions[k] : 0.0;
    spec.components.push_back(std::move(c));
  }
  return spec;
}

}  // namespace

MixtureSpec StandardRealSpec() {
  return StandardSpec(std::vector<double>(kStandardPopulated, 1.0 / kStandardPopulated));
}

MixtureSpec StandardGeneratedSpec() {
  return StandardSpec({0.30, 0.20, 0.14, 0.10, 0.08, 0.07, 0.06, 0.05});
}

}  // namespace fidlens
