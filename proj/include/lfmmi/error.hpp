#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lfmmi {

enum class ErrorCode {
  kParse,
  kOov,
  kUnalignable,
  kDeadPrefix,
  kLabelSpace,
  kInvalidGraph,
  kInvalidArgument,
  kIo,
};

/// Stable machine-readable name, e.g. "OOV" or "DEAD_PREFIX".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lfmmi
