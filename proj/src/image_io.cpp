#include "fidlens/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "byte_order.hpp"
#include "fidlens/error.hpp"

namespace fidlens {
namespace {

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void Spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path);
}

// Reads `count` whitespace-separated header tokens (skipping '#' comments) and
// returns the offset just past the single whitespace byte that ends them.
std::size_t HeaderTokens(const std::string& bytes, int count,
                         std::vector<std::string>* tokens,
                         const std::string& path) {
  std::size_t pos = 0;
  while (static_cast<int>(tokens->size()) < count) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) Fail(ErrorKind::kFormat, "truncated header in " + path);
    tokens->push_back(bytes.substr(start, pos - start));
  }
  if (pos >= bytes.size()) Fail(ErrorKind::kFormat, "truncated header in " + path);
  return pos + 1;
}

long ParseDim(const std::string& token, const std::string& path) {
  try {
    const long v = std::stol(token);
    if (v > 0) return v;
  } catch (const std::exception&) {
  }
  Fail(ErrorKind::kFormat, "bad dimension '" + token + "' in " + path);
}

}  // namespace

RgbImage ReadPpm(const std::string& path) {
  const std::string bytes = Slurp(path);
  std::vector<std::string> tok;
  const std::size_t offset = HeaderTokens(bytes, 4, &tok, path);
  if (tok[0] != "P6") Fail(ErrorKind::kFormat, path + " is not a binary PPM");
  if (tok[3] != "255") {
    Fail(ErrorKind::kUnsupported, path + ": only 8-bit PPM is supported");
  }
  RgbImage image(ParseDim(tok[2], path), ParseDim(tok[1], path));
  if (bytes.size() - offset < image.pixels.size()) {
    Fail(ErrorKind::kFormat, "truncated pixel data in " + path);
  }
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    image.pixels[i] = static_cast<unsigned char>(bytes[offset + i]) / 255.f;
  }
  return image;
}

void WritePpm(const std::string& path, const RgbImage& image) {
  std::ostringstream header;
  header << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::string bytes = header.str();
  bytes.reserve(bytes.size() + image.pixels.size());
  for (const float v : image.pixels) {
    const float c = std::clamp(v, 0.f, 1.f);
    bytes.push_back(static_cast<char>(std::lround(c * 255.f)));
  }
  Spit(path, bytes);
}

Grid ReadPfm(const std::string& path) {
  const std::string bytes = Slurp(path);
  std::vector<std::string> tok;
  const std::size_t offset = HeaderTokens(bytes, 4, &tok, path);
  if (tok[0] != "Pf") Fail(ErrorKind::kFormat, path + " is not a grayscale PFM");
  if (std::stod(tok[3]) >= 0.0) {
    Fail(ErrorKind::kUnsupported, path + ": big-endian PFM is not supported");
  }
  const long w = ParseDim(tok[1], path);
  const long h = ParseDim(tok[2], path);
  if (bytes.size() - offset < static_cast<std::size_t>(w * h * 4)) {
    Fail(ErrorKind::kFormat, "truncated PFM data in " + path);
  }
  Grid grid(h, w);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  for (long y = h - 1; y >= 0; --y) {
    for (long x = 0; x < w; ++x, p += 4) grid(y, x) = detail::GetF32(p);
  }
  return grid;
}

void WritePfm(const std::string& path, const Grid& grid) {
  std::ostringstream header;
  header << "Pf\n" << grid.cols() << ' ' << grid.rows() << "\n-1.0\n";
  std::string bytes = header.str();
  for (Eigen::Index y = grid.rows() - 1; y >= 0; --y) {
    for (Eigen::Index x = 0; x < grid.cols(); ++x) {
      detail::PutF32(bytes, static_cast<float>(grid(y, x)));
    }
  }
  Spit(path, bytes);
}

}  // namespace fidlens
