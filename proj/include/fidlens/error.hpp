#pragma once

#include <stdexcept>
#include <string>

namespace fidlens {

enum class ErrorKind {
  kInsufficientSamples,
  kInvalidData,
  kPrecondition,
  kNotPsd,
  kSingular,
  kDivergence,
  kFormat,
  kValidation,
  kShortfall,
  kUnsupported,
  kIo,
};

const char* ToString(ErrorKind kind);

// Every domain failure in the library surfaces as this exception; the CLI maps
// it to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void Fail(ErrorKind kind, const std::string& message);

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorKind::kPrecondition, message);
}

}  // namespace fidlens
