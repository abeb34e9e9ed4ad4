#include "lfmmi/log_weight.hpp"

#include <algorithm>

#include "lfmmi/error.hpp"

namespace lfmmi {

LogWeight logsumexp(std::span<const LogWeight> values) {
  if (values.empty()) return LogWeight::Zero();
  const double max =
      std::max_element(values.begin(), values.end())->value();
  if (is_log_zero(max)) return LogWeight::Zero();
  double sum = 0.0;
  for (LogWeight w : values) sum += std::exp(w.value() - max);
  return LogWeight(max + std::log(sum));
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "PARSE_ERROR";
    case ErrorCode::kOov: return "OOV";
    case ErrorCode::kUnalignable: return "UNALIGNABLE";
    case ErrorCode::kDeadPrefix: return "DEAD_PREFIX";
    case ErrorCode::kLabelSpace: return "LABEL_SPACE_MISMATCH";
    case ErrorCode::kInvalidGraph: return "INVALID_GRAPH";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kIo: return "IO_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace lfmmi
