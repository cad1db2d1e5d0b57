#pragma once

// Little-endian encode/decode helpers, independent of host byte order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>

namespace fidlens::detail {

inline void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void PutF32(std::string& out, float v) {
  PutU32(out, std::bit_cast<std::uint32_t>(v));
}

inline void PutF64(std::string& out, double v) {
  PutU64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t GetU32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline std::uint64_t GetU64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline float GetF32(const unsigned char* p) {
  return std::bit_cast<float>(GetU32(p));
}

inline double GetF64(const unsigned char* p) {
  return std::bit_cast<double>(GetU64(p));
}

}  // namespace fidlens::detail
