#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anonbench/common.hpp"
#include "anonbench/embedding_space.hpp"

namespace anonbench {

/// Target identity that replaces a source speaker's x-vector.
struct PseudoSpeaker {
  Embedding xvector;
  F0Stats f0_stats;
  std::vector<std::string> source_ids;

  friend bool operator==(const PseudoSpeaker&, const PseudoSpeaker&) = default;
};

enum class StrategyKind { kPermanent, kConstant };

const char* strategy_name(StrategyKind kind);
StrategyKind parse_strategy(const std::string& name);

class TargetStrategy {
 public:
  static TargetStrategy permanent() { return TargetStrategy(StrategyKind::kPermanent, {}); }
  static TargetStrategy constant(PoolEntry target) {
    return TargetStrategy(StrategyKind::kConstant, std::move(target));
  }

  StrategyKind kind() const noexcept { return kind_; }
  const std::optional<PoolEntry>& constant_target() const noexcept { return target_; }

 private:
  TargetStrategy(StrategyKind kind, std::optional<PoolEntry> target)
      : kind_(kind), target_(std::move(target)) {}

  StrategyKind kind_;
  std::optional<PoolEntry> target_;
};

/// Module-B parameters: rank the pool by distance from the source, keep the
/// far_count furthest, average a random pick_count of them.
struct SelectorParams {
  std::size_t far_count = 200;
  std::size_t pick_count = 100;
  DistanceMetric metric = DistanceMetric::kCosine;

  /// 200/100 when the pool allows it, otherwise pool/2 and pool/4.
  static SelectorParams for_pool_size(std::size_t pool_size,
                                      DistanceMetric metric = DistanceMetric::kCosine);
};

PseudoSpeaker select_pseudo_speaker(const Embedding& source, const Pool& pool,
                                    const SelectorParams& params, std::uint64_t seed);

/// Maps each speaker to a single pseudo-speaker. Permanent: an independent
/// select_pseudo_speaker draw per speaker, seeded from (seed, speaker_id).
/// Constant: the same target for everyone.
///
/// `source_xvectors` supplies the per-speaker x-vector used for module-B
/// ranking; it is only consulted by the permanent strategy.
std::map<std::string, PseudoSpeaker> assign_targets(
    const std::vector<std::string>& speakers,
    const std::map<std::string, Embedding>& source_xvectors, const TargetStrategy& strategy,
    const Pool& pool, const SelectorParams& params, std::uint64_t seed);

/// Per-speaker seed used by the permanent strategy.
std::uint64_t speaker_seed(std::uint64_t seed, const std::string& speaker_id);

/// 10 ms frames in Hz; 0.0 marks an unvoiced frame.
struct F0Contour {
  std::vector<double> frames_hz;

  friend bool operator==(const F0Contour&, const F0Contour&) = default;
};

/// Sample mean and (population) std of the voiced frames.
F0Stats voiced_stats(const F0Contour& contour);

inline constexpr double kF0FloorHz = 1.0;

F0Contour transform_f0(const F0Contour& contour, const F0Stats& source_stats,
                       const F0Stats& target_stats);

struct ConversionParams {
  double leakage_beta = 0.3;
  double synthesis_noise_sigma = 0.3;

  void validate() const;
};

/// Voice-conversion surrogate in embedding space:
/// (1 - beta) * pseudo + beta * utt + N(0, sigma^2 I).
Embedding convert_utterance(const Embedding& utt, const PseudoSpeaker& pseudo,
                            const ConversionParams& params, std::uint64_t seed);

}  // namespace anonbench
