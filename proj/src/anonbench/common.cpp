#include "anonbench/common.hpp"

#include <unordered_set>

namespace anonbench {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kState: return "state";
  }
  return "unknown";
}

Gender parse_gender(const std::string& code) {
  if (code == "F" || code == "f" || code == "female") return Gender::kFemale;
  if (code == "M" || code == "m" || code == "male") return Gender::kMale;
  fail(ErrorCode::kParse, "unknown gender '" + code + "' (expected F or M)");
}

void validate(const F0Stats& stats) {
  require(std::isfinite(stats.mean_hz) && stats.mean_hz > 0.0, ErrorCode::kInvalidArgument,
          "F0 mean must be > 0");
  require(std::isfinite(stats.std_hz) && stats.std_hz > 0.0, ErrorCode::kInvalidArgument,
          "F0 std must be > 0");
}

void validate_pool(const Pool& pool) {
  require(!pool.empty(), ErrorCode::kInvalidArgument, "pool is empty");
  const std::size_t dim = pool.front().xvector.dim();
  require(dim > 0, ErrorCode::kInvalidArgument, "pool x-vectors have dimension 0");
  std::unordered_set<std::string> seen;
  for (const auto& entry : pool) {
    require(entry.xvector.dim() == dim, ErrorCode::kDimensionMismatch,
            "pool entry '" + entry.speaker_id + "' has dimension " +
                std::to_string(entry.xvector.dim()) + ", expected " + std::to_string(dim));
    require(entry.xvector.all_finite(), ErrorCode::kNumeric,
            "pool entry '" + entry.speaker_id + "' has non-finite values");
    require(seen.insert(entry.speaker_id).second, ErrorCode::kInvalidArgument,
            "duplicate pool speaker_id '" + entry.speaker_id + "'");
    validate(entry.f0_stats);
  }
}

}  // namespace anonbench
