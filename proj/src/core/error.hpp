#pragma once

#include <stdexcept>
#include <string>

namespace d2turb {

enum class ErrorCode {
  InvalidInput = 1,  // out-of-range values, non-finite data
  Domain,            // argument outside an operation's mathematical domain
  Shape,             // dimension mismatch between paired inputs
  Normalization,     // distance exceeds the modulation normaliser
  Internal,          // numerical consistency failure
  Unfillable,        // hole filling with no valid seed pixel
  Io,                // filesystem / sink failure
  Format,            // malformed or unsupported file content
  Parse,             // config syntax error
  Config,            // config semantic violation
  Integrity,         // digest or consistency mismatch in a dataset
};

const char* error_code_name(ErrorCode code);

// Exception carrying a machine-readable code and the pipeline stage that
// raised it ("blur", "warp", "io.flow", ...). Stage may be empty.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& message() const noexcept { return message_; }

  // Copy of this error attributed to `stage` unless already attributed.
  Error with_stage(const std::string& stage) const;

 private:
  ErrorCode code_;
  std::string stage_;
  std::string message_;
};

// Runs fn(); any d2turb::Error escaping it is re-thrown with `stage`.
template <typename Fn>
decltype(auto) in_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

}  // namespace d2turb
