#include "fidlens/error.hpp"

namespace fidlens {

const char* ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInsufficientSamples: return "insufficient samples";
    case ErrorKind::kInvalidData: return "invalid data";
    case ErrorKind::kPrecondition: return "precondition violated";
    case ErrorKind::kNotPsd: return "matrix not positive semidefinite";
    case ErrorKind::kSingular: return "singular matrix";
    case ErrorKind::kDivergence: return "optimization diverged";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kShortfall: return "candidate shortfall";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(ToString(kind)) + ": " + message),
      kind_(kind) {}

void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace fidlens
