#include "core/error.hpp"

namespace d2turb {

namespace {

std::string compose(ErrorCode code, const std::string& stage, const std::string& message) {
  std::string out = error_code_name(code);
  if (!stage.empty()) out += " [" + stage + "]";
  out += ": " + message;
  return out;
}

}  // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::Domain: return "domain-error";
    case ErrorCode::Shape: return "shape-error";
    case ErrorCode::Normalization: return "normalization-error";
    case ErrorCode::Internal: return "internal-error";
    case ErrorCode::Unfillable: return "unfillable";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::Format: return "format-error";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::Config: return "config-error";
    case ErrorCode::Integrity: return "integrity-error";
  }
  return "unknown-error";
}

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error(compose(code, stage, message)),
      code_(code),
      stage_(std::move(stage)),
      message_(message) {}

Error Error::with_stage(const std::string& stage) const {
  if (!stage_.empty()) return *this;
  return Error(code_, message_, stage);
}

}  // namespace d2turb
