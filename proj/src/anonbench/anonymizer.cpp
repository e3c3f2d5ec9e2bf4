#include "anonbench/anonymizer.hpp"

#include <algorithm>

#include "anonbench/rng.hpp"

namespace anonbench {

const char* strategy_name(StrategyKind kind) {
  return kind == StrategyKind::kPermanent ? "permanent" : "constant";
}

StrategyKind parse_strategy(const std::string& name) {
  if (name == "permanent") return StrategyKind::kPermanent;
  if (name == "constant") return StrategyKind::kConstant;
  fail(ErrorCode::kConfig, "unknown target strategy '" + name + "'");
}

SelectorParams SelectorParams::for_pool_size(std::size_t pool_size, DistanceMetric metric) {
  SelectorParams p;
  p.metric = metric;
  if (pool_size < 200) {
    p.far_count = std::max<std::size_t>(1, pool_size / 2);
    p.pick_count = std::max<std::size_t>(1, pool_size / 4);
  }
  return p;
}

PseudoSpeaker select_pseudo_speaker(const Embedding& source, const Pool& pool,
                                    const SelectorParams& params, std::uint64_t seed) {
  require(params.pick_count >= 1, ErrorCode::kInvalidArgument, "pick_count must be >= 1");
  require(params.far_count <= pool.size(), ErrorCode::kInvalidArgument,
          "far_count " + std::to_string(params.far_count) + " exceeds pool size " +
              std::to_string(pool.size()));
  require(params.pick_count <= params.far_count, ErrorCode::kInvalidArgument,
          "pick_count exceeds far_count");

  struct Ranked {
    double dist;
    const PoolEntry* entry;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(pool.size());
  for (const auto& e : pool) ranked.push_back({distance(params.metric, source, e.xvector), &e});
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.dist != b.dist) return a.dist > b.dist;
    return a.entry->speaker_id < b.entry->speaker_id;
  });
  ranked.resize(params.far_count);

  // Partial Fisher-Yates over the ranked candidates.
  Rng rng(seed);
  for (std::size_t i = 0; i < params.pick_count; ++i) {
    const std::size_t j = i + rng.below(ranked.size() - i);
    std::swap(ranked[i], ranked[j]);
  }

  PseudoSpeaker pseudo;
  pseudo.xvector = Embedding::zeros(source.dim());
  double f0_mean = 0.0, f0_std = 0.0;
  for (std::size_t i = 0; i < params.pick_count; ++i) {
    const PoolEntry& e = *ranked[i].entry;
    for (std::size_t d = 0; d < source.dim(); ++d) pseudo.xvector[d] += e.xvector[d];
    f0_mean += e.f0_stats.mean_hz;
    f0_std += e.f0_stats.std_hz;
    pseudo.source_ids.push_back(e.speaker_id);
  }
  const double inv = 1.0 / static_cast<double>(params.pick_count);
  for (std::size_t d = 0; d < source.dim(); ++d) pseudo.xvector[d] *= inv;
  pseudo.f0_stats = {f0_mean * inv, f0_std * inv};
  return pseudo;
}

std::uint64_t speaker_seed(std::uint64_t seed, const std::string& speaker_id) {
  return derive_seed(seed, "speaker:" + speaker_id);
}

std::map<std::string, PseudoSpeaker> assign_targets(
    const std::vector<std::string>& speakers,
    const std::map<std::string, Embedding>& source_xvectors, const TargetStrategy& strategy,
    const Pool& pool, const SelectorParams& params, std::uint64_t seed) {
  require(!speakers.empty(), ErrorCode::kInvalidArgument, "assign_targets: no speakers");
  std::map<std::string, PseudoSpeaker> mapping;

  if (strategy.kind() == StrategyKind::kConstant) {
    require(strategy.constant_target().has_value(), ErrorCode::kInvalidArgument,
            "constant strategy requires a target");
    const PoolEntry& t = *strategy.constant_target();
    const PseudoSpeaker pseudo{t.xvector, t.f0_stats, {t.speaker_id}};
    for (const auto& s : speakers) mapping.emplace(s, pseudo);
    return mapping;
  }

  for (const auto& s : speakers) {
    const auto it = source_xvectors.find(s);
    require(it != source_xvectors.end(), ErrorCode::kInvalidArgument,
            "assign_targets: unknown speaker '" + s + "'");
    if (mapping.contains(s)) continue;
    mapping.emplace(s, select_pseudo_speaker(it->second, pool, params, speaker_seed(seed, s)));
  }
  return mapping;
}

F0Stats voiced_stats(const F0Contour& contour) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double f : contour.frames_hz)
    if (f > 0.0) {
      sum += f;
      ++n;
    }
  require(n > 0, ErrorCode::kInvalidArgument, "F0 contour has no voiced frames");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double f : contour.frames_hz)
    if (f > 0.0) ss += (f - mean) * (f - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n))};
}

F0Contour transform_f0(const F0Contour& contour, const F0Stats& source_stats,
                       const F0Stats& target_stats) {
  require(source_stats.std_hz > 0.0, ErrorCode::kInvalidArgument,
          "transform_f0: source std must be > 0");
  bool any_voiced = false;
  for (double f : contour.frames_hz) {
    require(f >= 0.0 && std::isfinite(f), ErrorCode::kInvalidArgument,
            "F0 frames must be finite and >= 0");
    any_voiced = any_voiced || f > 0.0;
  }
  require(any_voiced, ErrorCode::kInvalidArgument, "F0 contour has no voiced frames");
  if (source_stats == target_stats) return contour;

  F0Contour out;
  out.frames_hz.reserve(contour.frames_hz.size());
  const double scale = target_stats.std_hz / source_stats.std_hz;
  for (double f : contour.frames_hz) {
    if (f == 0.0) {
      out.frames_hz.push_back(0.0);
      continue;
    }
    const double g = (f - source_stats.mean_hz) * scale + target_stats.mean_hz;
    out.frames_hz.push_back(std::max(g, kF0FloorHz));
  }
  return out;
}

void ConversionParams::validate() const {
  require(leakage_beta >= 0.0 && leakage_beta <= 1.0, ErrorCode::kInvalidArgument,
          "leakage_beta must be in [0, 1]");
  require(synthesis_noise_sigma >= 0.0 && std::isfinite(synthesis_noise_sigma),
          ErrorCode::kInvalidArgument, "synthesis_noise_sigma must be >= 0");
}

Embedding convert_utterance(const Embedding& utt, const PseudoSpeaker& pseudo,
                            const ConversionParams& params, std::uint64_t seed) {
  params.validate();
  require(utt.dim() == pseudo.xvector.dim(), ErrorCode::kDimensionMismatch,
          "convert_utterance: utterance dim " + std::to_string(utt.dim()) +
              " vs pseudo-speaker dim " + std::to_string(pseudo.xvector.dim()));
  const double beta = params.leakage_beta;
  Embedding out = Embedding::zeros(utt.dim());
  for (std::size_t d = 0; d < utt.dim(); ++d)
    out[d] = (1.0 - beta) * pseudo.xvector[d] + beta * utt[d];
  if (params.synthesis_noise_sigma > 0.0) {
    Rng rng(seed);
    for (std::size_t d = 0; d < utt.dim(); ++d)
      out[d] += params.synthesis_noise_sigma * rng.normal();
  }
  return out;
}

}  // namespace anonbench
