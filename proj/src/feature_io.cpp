#include "fidlens/feature_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>

#include "byte_order.hpp"
#include "fidlens/error.hpp"

namespace fidlens {
namespace {

constexpr std::array<char, 4> kMagic = {'F', 'I', 'D', 'L'};
constexpr std::array<char, 4> kStatsMagic = {'F', 'I', 'D', 'S'};
constexpr std::size_t kStatsHeaderBytes = 32;
constexpr std::uint64_t kKnownFlags =
    kHasProbabilities | kHasActivations | kHasImageIds;

using ByteSource =
    std::function<std::string(std::uint64_t offset, std::uint64_t length)>;

[[noreturn]] void FormatError(const std::string& source, std::uint64_t offset,
                              const std::string& what) {
  Fail(ErrorKind::kFormat,
       source + ": " + what + " at offset " + std::to_string(offset));
}

std::uint64_t CheckedProduct(std::initializer_list<std::uint64_t> factors,
                             const std::string& source) {
  std::uint64_t out = 1;
  for (const auto f : factors) {
    if (f != 0 && out > std::numeric_limits<std::uint64_t>::max() / f) {
      FormatError(source, 16, "declared sizes overflow");
    }
    out *= f;
  }
  return out;
}

struct Layout {
  FeatureHeader header;
  std::uint64_t features_offset = 0;
  std::uint64_t probabilities_offset = 0;
  std::uint64_t activations_offset = 0;
  std::uint64_t ids_offset = 0;
  std::uint64_t ids_length = 0;
};

// Parses the header and walks the block length prefixes. `size` is the total
// byte count; `read` must return exactly the requested range.
Layout ScanLayout(std::uint64_t size, const ByteSource& read,
                  const std::string& source) {
  if (size < kHeaderBytes) {
    FormatError(source, size, "truncated header");
  }
  const std::string raw = read(0, kHeaderBytes);
  const auto* h = reinterpret_cast<const unsigned char*>(raw.data());
  if (!std::equal(kMagic.begin(), kMagic.end(), raw.begin())) {
    FormatError(source, 0, "bad magic");
  }
  Layout layout;
  FeatureHeader& hd = layout.header;
  hd.version = detail::GetU32(h + 4);
  if (hd.version != kFeatureFileVersion) {
    FormatError(source, 4, "unsupported version " + std::to_string(hd.version));
  }
  const std::uint64_t kind = detail::GetU64(h + 8);
  if (kind > static_cast<std::uint64_t>(FeatureKind::kGeneric)) {
    FormatError(source, 8, "unknown payload kind " + std::to_string(kind));
  }
  hd.kind = static_cast<FeatureKind>(kind);
  hd.n = detail::GetU64(h + 16);
  hd.d = detail::GetU64(h + 24);
  hd.classes = detail::GetU64(h + 32);
  hd.channels = detail::GetU64(h + 40);
  hd.grid = detail::GetU64(h + 48);
  hd.flags = detail::GetU64(h + 56);
  if (hd.flags & ~kKnownFlags) FormatError(source, 56, "unknown flag bits");
  if (((hd.flags & kHasProbabilities) != 0) != (hd.classes != 0)) {
    FormatError(source, 32, "class count disagrees with the probability flag");
  }
  if (((hd.flags & kHasActivations) != 0) !=
      (hd.channels != 0 && hd.grid != 0)) {
    FormatError(source, 40, "activation shape disagrees with the activation flag");
  }
  if (hd.d == 0 && hd.n != 0) FormatError(source, 24, "zero feature dimension");

  std::uint64_t pos = kHeaderBytes;
  auto block = [&](std::uint64_t expected, const char* name,
                   bool check_expected) {
    if (size - pos < 8) FormatError(source, pos, std::string("truncated ") + name + " length");
    const std::string len_raw = read(pos, 8);
    const std::uint64_t len =
        detail::GetU64(reinterpret_cast<const unsigned char*>(len_raw.data()));
    if (check_expected && len != expected) {
      FormatError(source, pos,
                  std::string(name) + " block length " + std::to_string(len) +
                      " does not match the declared " +
                      std::to_string(expected));
    }
    if (size - pos - 8 < len) {
      FormatError(source, pos + 8, std::string("truncated ") + name + " block");
    }
    const std::uint64_t start = pos + 8;
    pos = start + len;
    return std::make_pair(start, len);
  };

  layout.features_offset =
      block(CheckedProduct({hd.n, hd.d, 4}, source), "features", true).first;
  if (hd.flags & kHasProbabilities) {
    layout.probabilities_offset =
        block(CheckedProduct({hd.n, hd.classes, 4}, source), "probabilities", true)
            .first;
  }
  if (hd.flags & kHasActivations) {
    layout.activations_offset =
        block(CheckedProduct({hd.n, hd.channels, hd.grid, hd.grid, 4}, source),
              "activations", true)
            .first;
  }
  if (hd.flags & kHasImageIds) {
    const auto [start, len] = block(0, "image ids", false);
    layout.ids_offset = start;
    layout.ids_length = len;
  }
  if (pos != size) FormatError(source, pos, "unexpected trailing bytes");
  return layout;
}

FeatureMatrix DecodeMatrix(const std::string& raw, std::uint64_t rows,
                           std::uint64_t cols) {
  FeatureMatrix m(static_cast<Eigen::Index>(rows),
                  static_cast<Eigen::Index>(cols));
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  for (Eigen::Index i = 0; i < m.size(); ++i, p += 4) {
    m.data()[i] = detail::GetF32(p);
  }
  return m;
}

ActivationTensor DecodeActivation(const unsigned char* p, std::uint64_t k,
                                  std::uint64_t s) {
  ActivationTensor t(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(s));
  for (double& v : t.data()) {
    v = detail::GetF32(p);
    p += 4;
  }
  return t;
}

std::vector<std::string> DecodeIds(const std::string& raw, std::uint64_t n,
                                   std::uint64_t base,
                                   const std::string& source) {
  std::vector<std::string> ids;
  ids.reserve(n);
  std::uint64_t pos = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (raw.size() - pos < 8) FormatError(source, base + pos, "truncated image id");
    const std::uint64_t len =
        detail::GetU64(reinterpret_cast<const unsigned char*>(raw.data() + pos));
    pos += 8;
    if (raw.size() - pos < len) FormatError(source, base + pos, "truncated image id");
    ids.push_back(raw.substr(pos, len));
    pos += len;
  }
  if (pos != raw.size()) {
    FormatError(source, base + pos, "image id block has trailing bytes");
  }
  return ids;
}

void PutMatrix(std::string& out, const FeatureMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    detail::PutF32(out, static_cast<float>(m.data()[i]));
  }
}

[[noreturn]] void Invalid(const std::string& block, const std::string& what) {
  Fail(ErrorKind::kValidation, block + " block: " + what);
}

}  // namespace

const char* ToString(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kPreLogits: return "pre-logits";
    case FeatureKind::kLogits: return "logits";
    case FeatureKind::kProbabilities: return "probabilities";
    case FeatureKind::kBinarized: return "binarized";
    case FeatureKind::kGeneric: return "generic";
  }
  return "unknown";
}

FeatureKind ParseFeatureKind(const std::string& name) {
  for (auto kind : {FeatureKind::kPreLogits, FeatureKind::kLogits,
                    FeatureKind::kProbabilities, FeatureKind::kBinarized,
                    FeatureKind::kGeneric}) {
    if (name == ToString(kind)) return kind;
  }
  Fail(ErrorKind::kPrecondition, "unknown feature kind '" + name + "'");
}

FeatureHeader FeaturePayload::Header() const {
  FeatureHeader h;
  h.kind = kind;
  h.n = static_cast<std::uint64_t>(features.rows());
  h.d = static_cast<std::uint64_t>(features.cols());
  if (probabilities) {
    h.classes = static_cast<std::uint64_t>(probabilities->cols());
    h.flags |= kHasProbabilities;
  }
  // An empty activation list has no shape, so the block is dropped.
  if (activations && !activations->empty()) {
    h.flags |= kHasActivations;
    h.channels = static_cast<std::uint64_t>(activations->front().channels());
    h.grid = static_cast<std::uint64_t>(activations->front().size());
  }
  if (image_ids) h.flags |= kHasImageIds;
  return h;
}

void ValidatePayload(const FeaturePayload& payload) {
  const Eigen::Index n = payload.features.rows();
  for (Eigen::Index i = 0; i < payload.features.size(); ++i) {
    if (!std::isfinite(payload.features.data()[i])) {
      Invalid("features", "non-finite value at row " +
                              std::to_string(i / payload.features.cols()));
    }
  }
  if (payload.probabilities) {
    const FeatureMatrix& p = *payload.probabilities;
    if (p.rows() != n) {
      Invalid("probabilities", "count mismatch: " + std::to_string(p.rows()) +
                                   " rows for " + std::to_string(n) + " samples");
    }
    if (n > 0 && p.cols() == 0) Invalid("probabilities", "zero classes");
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      if (!p.row(i).allFinite() || (p.row(i).array() < 0.0).any() ||
          (p.row(i).array() > 1.0).any()) {
        Invalid("probabilities",
                "row " + std::to_string(i) + " has entries outside [0, 1]");
      }
      const double sum = p.row(i).sum();
      if (std::abs(sum - 1.0) > kProbabilityRowTolerance) {
        std::ostringstream msg;
        msg << "row " << i << " sums to " << sum;
        Invalid("probabilities", msg.str());
      }
    }
  }
  if (payload.activations) {
    const auto& acts = *payload.activations;
    if (static_cast<Eigen::Index>(acts.size()) != n) {
      Invalid("activations", "count mismatch: " + std::to_string(acts.size()) +
                                 " tensors for " + std::to_string(n) + " samples");
    }
    for (std::size_t i = 0; i < acts.size(); ++i) {
      if (acts[i].channels() != acts.front().channels() ||
          acts[i].size() != acts.front().size() || acts[i].size() == 0 ||
          acts[i].channels() == 0) {
        Invalid("activations", "tensor " + std::to_string(i) + " has a different shape");
      }
      for (double v : acts[i].data()) {
        if (!std::isfinite(v)) {
          Invalid("activations", "non-finite value in tensor " + std::to_string(i));
        }
      }
    }
    if (payload.kind == FeatureKind::kPreLogits && n > 0) {
      if (acts.front().channels() != payload.features.cols()) {
        Invalid("activations", "channel count does not match feature dimension");
      }
      const ConsistencyReport report = ValidateActivationConsistency(payload);
      if (!report.pass) {
        for (const auto& img : report.images) {
          if (!img.pass) {
            std::ostringstream msg;
            msg << "image " << img.image << " channel " << img.channel
                << " spatial average deviates from the feature row by "
                << img.deviation << " (relative)";
            Invalid("activations", msg.str());
          }
        }
      }
    }
  }
  if (payload.image_ids &&
      static_cast<Eigen::Index>(payload.image_ids->size()) != n) {
    Invalid("image ids", "count mismatch: " +
                             std::to_string(payload.image_ids->size()) +
                             " ids for " + std::to_string(n) + " samples");
  }
}

std::string EncodeFeatureFile(const FeaturePayload& payload) {
  ValidatePayload(payload);
  const FeatureHeader h = payload.Header();
  std::string out;
  out.append(kMagic.data(), kMagic.size());
  detail::PutU32(out, h.version);
  detail::PutU64(out, static_cast<std::uint64_t>(h.kind));
  for (const auto v : {h.n, h.d, h.classes, h.channels, h.grid, h.flags}) {
    detail::PutU64(out, v);
  }
  detail::PutU64(out, h.n * h.d * 4);
  PutMatrix(out, payload.features);
  if (payload.probabilities) {
    detail::PutU64(out, h.n * h.classes * 4);
    PutMatrix(out, *payload.probabilities);
  }
  if (h.flags & kHasActivations) {
    detail::PutU64(out, h.n * h.channels * h.grid * h.grid * 4);
    for (const auto& t : *payload.activations) {
      for (double v : t.data()) detail::PutF32(out, static_cast<float>(v));
    }
  }
  if (payload.image_ids) {
    std::string ids;
    for (const auto& id : *payload.image_ids) {
      detail::PutU64(ids, id.size());
      ids += id;
    }
    detail::PutU64(out, ids.size());
    out += ids;
  }
  return out;
}

FeaturePayload DecodeFeatureFile(const std::string& bytes,
                                 const std::string& source) {
  const ByteSource read = [&bytes](std::uint64_t off, std::uint64_t len) {
    return bytes.substr(off, len);
  };
  const Layout layout = ScanLayout(bytes.size(), read, source);
  const FeatureHeader& h = layout.header;

  FeaturePayload payload;
  payload.kind = h.kind;
  payload.features =
      DecodeMatrix(read(layout.features_offset, h.n * h.d * 4), h.n, h.d);
  if (h.flags & kHasProbabilities) {
    payload.probabilities = DecodeMatrix(
        read(layout.probabilities_offset, h.n * h.classes * 4), h.n, h.classes);
  }
  if (h.flags & kHasActivations) {
    const std::uint64_t chunk = h.channels * h.grid * h.grid * 4;
    const auto* base = reinterpret_cast<const unsigned char*>(bytes.data()) +
                       layout.activations_offset;
    std::vector<ActivationTensor> acts;
    acts.reserve(h.n);
    for (std::uint64_t i = 0; i < h.n; ++i) {
      acts.push_back(DecodeActivation(base + i * chunk, h.channels, h.grid));
    }
    payload.activations = std::move(acts);
  }
  if (h.flags & kHasImageIds) {
    payload.image_ids = DecodeIds(read(layout.ids_offset, layout.ids_length),
                                  h.n, layout.ids_offset, source);
  }
  ValidatePayload(payload);
  return payload;
}

void WriteFeatureFile(const std::string& path, const FeaturePayload& payload) {
  const std::string bytes = EncodeFeatureFile(payload);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path);
}

FeaturePayload ReadFeatureFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  const std::string bytes(std::istreambuf_iterator<char>(in), {});
  return DecodeFeatureFile(bytes, path);
}

std::string EncodeStatsFile(const StatsFile& file) {
  const GaussianStats& st = file.stats;
  const Eigen::Index d = st.dim();
  Require(st.cov.rows() == d && st.cov.cols() == d,
          "covariance shape does not match the mean");
  std::string out(kStatsMagic.begin(), kStatsMagic.end());
  detail::PutU32(out, kFeatureFileVersion);
  detail::PutU64(out, static_cast<std::uint64_t>(file.kind));
  detail::PutU64(out, st.count);
  detail::PutU64(out, static_cast<std::uint64_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) detail::PutF64(out, st.mean[i]);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) detail::PutF64(out, st.cov(i, j));
  }
  return out;
}

StatsFile DecodeStatsFile(const std::string& bytes, const std::string& source) {
  if (bytes.size() < kStatsHeaderBytes) {
    FormatError(source, bytes.size(), "truncated header");
  }
  if (!std::equal(kStatsMagic.begin(), kStatsMagic.end(), bytes.begin())) {
    FormatError(source, 0, "bad magic");
  }
  const auto* h = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = detail::GetU32(h + 4);
  if (version != kFeatureFileVersion) {
    FormatError(source, 4, "unsupported version " + std::to_string(version));
  }
  const std::uint64_t kind = detail::GetU64(h + 8);
  if (kind > static_cast<std::uint64_t>(FeatureKind::kGeneric)) {
    FormatError(source, 8, "unknown payload kind " + std::to_string(kind));
  }
  const std::uint64_t d = detail::GetU64(h + 24);
  const std::uint64_t expected =
      kStatsHeaderBytes + CheckedProduct({d + 1, d, 8}, source);
  if (bytes.size() != expected) {
    FormatError(source, std::min<std::uint64_t>(bytes.size(), expected),
                bytes.size() < expected ? "truncated moments" : "trailing bytes");
  }
  StatsFile file;
  file.kind = static_cast<FeatureKind>(kind);
  file.stats.count = detail::GetU64(h + 16);
  const auto dim = static_cast<Eigen::Index>(d);
  file.stats.mean.resize(dim);
  file.stats.cov.resize(dim, dim);
  const unsigned char* p = h + kStatsHeaderBytes;
  for (Eigen::Index i = 0; i < dim; ++i, p += 8) file.stats.mean[i] = detail::GetF64(p);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j, p += 8) {
      file.stats.cov(i, j) = detail::GetF64(p);
    }
  }
  return file;
}

void WriteStatsFile(const std::string& path, const StatsFile& file) {
  const std::string bytes = EncodeStatsFile(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path);
}

StatsFile ReadStatsFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  const std::string bytes(std::istreambuf_iterator<char>(in), {});
  return DecodeStatsFile(bytes, path);
}

bool IsStatsFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  return in.gcount() == 4 && magic == kStatsMagic;
}

ConsistencyReport ValidateActivationConsistency(const FeaturePayload& payload) {
  Require(payload.activations.has_value(),
          "activation consistency needs an activation block");
  const auto& acts = *payload.activations;
  Require(static_cast<Eigen::Index>(acts.size()) == payload.features.rows(),
          "activation and feature counts differ");
  ConsistencyReport report;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    ImageDeviation img;
    img.image = i;
    img.deviation = PoolingDeviation(
        acts[i], payload.features.row(static_cast<Eigen::Index>(i)).transpose(),
        &img.channel);
    img.pass = img.deviation <= kPoolingTolerance;
    report.worst = std::max(report.worst, img.deviation);
    report.pass = report.pass && img.pass;
    report.images.push_back(img);
  }
  return report;
}

FeatureFileReader::FeatureFileReader(const std::string& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) Fail(ErrorKind::kIo, "cannot open " + path);
  in_.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in_.tellg());
  const Layout layout = ScanLayout(
      size,
      [this](std::uint64_t off, std::uint64_t len) { return ReadBytes(off, len); },
      path);
  header_ = layout.header;
  features_ = {layout.features_offset, header_.n * header_.d * 4};
  if (header_.flags & kHasProbabilities) {
    probabilities_ = Block{layout.probabilities_offset,
                           header_.n * header_.classes * 4};
  }
  if (header_.flags & kHasActivations) {
    activations_ = Block{layout.activations_offset,
                         header_.n * header_.channels * header_.grid *
                             header_.grid * 4};
  }
  if (header_.flags & kHasImageIds) {
    image_ids_ = Block{layout.ids_offset, layout.ids_length};
  }
}

std::string FeatureFileReader::ReadBytes(std::uint64_t offset,
                                         std::uint64_t length) {
  std::string buf(length, '\0');
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(offset));
  in_.read(buf.data(), static_cast<std::streamsize>(length));
  if (!in_) FormatError(path_, offset, "short read");
  return buf;
}

FeatureMatrix FeatureFileReader::ReadFeatures() {
  return DecodeMatrix(ReadBytes(features_.offset, features_.length), header_.n,
                      header_.d);
}

std::optional<FeatureMatrix> FeatureFileReader::ReadProbabilities() {
  if (!probabilities_) return std::nullopt;
  return DecodeMatrix(ReadBytes(probabilities_->offset, probabilities_->length),
                      header_.n, header_.classes);
}

std::optional<std::vector<std::string>> FeatureFileReader::ReadImageIds() {
  if (!image_ids_) return std::nullopt;
  return DecodeIds(ReadBytes(image_ids_->offset, image_ids_->length), header_.n,
                   image_ids_->offset, path_);
}

ActivationTensor FeatureFileReader::ReadActivation(std::size_t image) {
  Require(activations_.has_value(), path_ + " has no activation block");
  Require(image < header_.n, "image index " + std::to_string(image) +
                                 " out of range for " + path_);
  const std::uint64_t chunk =
      header_.channels * header_.grid * header_.grid * 4;
  const std::string raw = ReadBytes(activations_->offset + image * chunk, chunk);
  return DecodeActivation(reinterpret_cast<const unsigned char*>(raw.data()),
                          header_.channels, header_.grid);
}

}  // namespace fidlens
