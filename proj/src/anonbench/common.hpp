#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace anonbench {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kConfig,
  kIo,
  kParse,
  kNumeric,
  kState,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

/// Fixed-dimension speaker or utterance embedding (an x-vector).
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}
  Embedding(std::initializer_list<double> values) : values_(values) {}
  static Embedding zeros(std::size_t dim) {
    return Embedding(std::vector<double>(dim, 0.0));
  }

  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const double* data() const noexcept { return values_.data(); }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

enum class Gender { kFemale, kMale };

inline const char* gender_code(Gender g) { return g == Gender::kFemale ? "F" : "M"; }
inline const char* gender_name(Gender g) { return g == Gender::kFemale ? "female" : "male"; }
Gender parse_gender(const std::string& code);

struct F0Stats {
  double mean_hz = 0.0;
  double std_hz = 0.0;

  friend bool operator==(const F0Stats&, const F0Stats&) = default;
};

void validate(const F0Stats& stats);

struct PoolEntry {
  std::string speaker_id;
  Gender gender = Gender::kFemale;
  Embedding xvector;
  F0Stats f0_stats;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

using Pool = std::vector<PoolEntry>;

/// Checks dimension consistency, finiteness, unique ids and F0 stats.
void validate_pool(const Pool& pool);

}  // namespace anonbench
