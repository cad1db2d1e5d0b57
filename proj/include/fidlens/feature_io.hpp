#pragma once

// On-disk feature container shared with the Python extractor.
//
// Byte layout, all integers little-endian:
//   [0, 4)    magic "FIDL"
//   [4, 8)    version (u32, currently 1)
//   [8, 16)   payload kind (u64, FeatureKind)
//   [16, 24)  n, rows
//   [24, 32)  d, feature dimension
//   [32, 40)  C, class count (0 when there is no probability block)
//   [40, 48)  k, activation channels (0 when absent)
//   [48, 56)  s, activation grid size (0 when absent)
//   [56, 64)  flags: bit0 probabilities, bit1 activations, bit2 image ids
// followed by blocks, each preceded by its u64 byte length:
//   features        n*d float32, row-major
//   probabilities   n*C float32, row-major                 (bit0)
//   activations     n chunks of k*s*s float32, (k, i, j)   (bit1)
//   image ids       n records of u64 byte length + UTF-8   (bit2)

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fidlens/sensitivity.hpp"
#include "fidlens/types.hpp"

namespace fidlens {

enum class FeatureKind : std::uint64_t {
  kPreLogits = 0,
  kLogits = 1,
  kProbabilities = 2,
  kBinarized = 3,
  kGeneric = 4,
};

const char* ToString(FeatureKind kind);
FeatureKind ParseFeatureKind(const std::string& name);

inline constexpr std::uint32_t kFeatureFileVersion = 1;
inline constexpr std::size_t kHeaderBytes = 64;
inline constexpr double kProbabilityRowTolerance = 1e-4;

enum FeatureFlags : std::uint64_t {
  kHasProbabilities = 1u << 0,
  kHasActivations = 1u << 1,
  kHasImageIds = 1u << 2,
};

struct FeatureHeader {
  std::uint32_t version = kFeatureFileVersion;
  FeatureKind kind = FeatureKind::kGeneric;
  std::uint64_t n = 0;
  std::uint64_t d = 0;
  std::uint64_t classes = 0;
  std::uint64_t channels = 0;
  std::uint64_t grid = 0;
  std::uint64_t flags = 0;
};

struct FeaturePayload {
  FeatureKind kind = FeatureKind::kGeneric;
  FeatureMatrix features;
  std::optional<FeatureMatrix> probabilities;
  std::optional<std::vector<ActivationTensor>> activations;
  std::optional<std::vector<std::string>> image_ids;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  FeatureHeader Header() const;
};

// Throws kValidation naming the offending block.
void ValidatePayload(const FeaturePayload& payload);

std::string EncodeFeatureFile(const FeaturePayload& payload);
FeaturePayload DecodeFeatureFile(const std::string& bytes,
                                 const std::string& source = "<memory>");

void WriteFeatureFile(const std::string& path, const FeaturePayload& payload);
FeaturePayload ReadFeatureFile(const std::string& path);

// Gaussian summary of a feature file, all integers little-endian:
//   [0, 4)    magic "FIDS"
//   [4, 8)    version (u32, currently 1)
//   [8, 16)   kind of the source features (u64)
//   [16, 24)  sample count
//   [24, 32)  d
// followed by the mean (d float64) and the covariance (d*d float64,
// row-major).
struct StatsFile {
  FeatureKind kind = FeatureKind::kGeneric;
  GaussianStats stats;
};

std::string EncodeStatsFile(const StatsFile& file);
StatsFile DecodeStatsFile(const std::string& bytes,
                          const std::string& source = "<memory>");
void WriteStatsFile(const std::string& path, const StatsFile& file);
StatsFile ReadStatsFile(const std::string& path);
// True when the file starts with the stats magic rather than "FIDL".
bool IsStatsFile(const std::string& path);

struct ImageDeviation {
  std::size_t image = 0;
  double deviation = 0.0;
  Eigen::Index channel = 0;
  bool pass = true;
};

struct ConsistencyReport {
  std::vector<ImageDeviation> images;
  double worst = 0.0;
  bool pass = true;
};

// Compares every activation tensor's spatial averages against its feature row.
ConsistencyReport ValidateActivationConsistency(const FeaturePayload& payload);

// Random access to a feature file without loading the activation block, which
// is n*k*s*s floats and may not fit in memory.
class FeatureFileReader {
 public:
  explicit FeatureFileReader(const std::string& path);

  const FeatureHeader& header() const { return header_; }
  FeatureMatrix ReadFeatures();
  std::optional<FeatureMatrix> ReadProbabilities();
  std::optional<std::vector<std::string>> ReadImageIds();
  ActivationTensor ReadActivation(std::size_t image);

 private:
  struct Block {
    std::uint64_t offset = 0;  // first payload byte
    std::uint64_t length = 0;
  };

  std::string ReadBytes(std::uint64_t offset, std::uint64_t length);

  std::string path_;
  std::ifstream in_;
  FeatureHeader header_;
  Block features_;
  std::optional<Block> probabilities_;
  std::optional<Block> activations_;
  std::optional<Block> image_ids_;
};

}  // namespace fidlens
