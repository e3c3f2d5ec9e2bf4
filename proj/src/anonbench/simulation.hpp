#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anonbench/anonymizer.hpp"
#include "anonbench/asv.hpp"
#include "anonbench/common.hpp"
#include "anonbench/privacy_metrics.hpp"

namespace anonbench {

struct Utterance {
  std::string utt_id;
  Embedding embedding;
  F0Contour f0;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct SpeakerData {
  Gender gender = Gender::kFemale;
  std::vector<Utterance> utterances;

  friend bool operator==(const SpeakerData&, const SpeakerData&) = default;
};

/// speaker_id -> speaker data, ordered by id.
using Partition = std::map<std::string, SpeakerData>;

struct EvalDataset {
  Partition enrollment;
  Partition trials;
  Partition train;
  Pool pool;

  std::size_t dim() const;
  /// Pool/eval id disjointness, unique utterance ids, dimension consistency.
  void validate() const;

  friend bool operator==(const EvalDataset&, const EvalDataset&) = default;
};

struct HzRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-gender speaker and utterance counts of one evaluation partition.
/// Utterances are spread as evenly as possible across a gender's speakers.
struct PartitionShape {
  std::size_t female_speakers = 0;
  std::size_t male_speakers = 0;
  std::size_t female_utterances = 0;
  std::size_t male_utterances = 0;
};

struct PopulationConfig {
  std::size_t dim = 64;
  std::size_t n_pool_speakers = 400;  // half female, half male
  // Enrolled speakers are the first speakers of each gender in the trial partition.
  PartitionShape enrollment{16, 13, 254, 184};
  PartitionShape trials{20, 20, 734, 762};
  std::size_t n_train_speakers = 300;  // half female, half male
  std::size_t utts_per_train_speaker = 10;
  double between_var = 0.2;
  double within_var = 0.05;
  HzRange f0_mean_female{165.0, 255.0};
  HzRange f0_mean_male{85.0, 155.0};
  HzRange f0_std{8.0, 30.0};
  std::size_t f0_frames = 100;
  double unvoiced_fraction = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

EvalDataset generate_population(const PopulationConfig& config);

enum class ScenarioKind { kBlackBox, kGreyBox, kWhiteBox };
enum class AsvTraining { kOriginal, kAnonymized };
enum class BackendKind { kPlda, kCosine };

const char* scenario_name(ScenarioKind kind);
ScenarioKind parse_scenario(const std::string& name);
const char* training_name(AsvTraining t);
AsvTraining parse_training(const std::string& name);
const char* backend_name(BackendKind b);
BackendKind parse_backend(const std::string& name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kWhiteBox;
  TargetStrategy strategy = TargetStrategy::permanent();
  ConversionParams conversion;
  AsvTraining asv_training = AsvTraining::kAnonymized;
  BackendKind backend = BackendKind::kPlda;
  // Module-B parameters for permanent strategies; scaled to the pool when unset.
  std::optional<SelectorParams> selector;
  DistanceMetric metric = DistanceMetric::kCosine;
  // Std of a per-speaker perturbation of leakage_beta (0 disables).
  double leakage_jitter = 0.0;

  void validate() const;
};

struct GenderMetrics {
  double eer_percent = 0.0;
  double d_sys = 0.0;
};

struct ScenarioOutcome {
  PrivacyReport report;
  std::map<Gender, GenderMetrics> by_gender;
  ScoreSet scores;
  Partition converted_trials;
};

/// Converts every utterance of a partition toward its speaker's pseudo-speaker.
/// Noise streams are keyed by (seed, label, utt_id).
Partition convert_partition(const Partition& partition,
                            const std::map<std::string, PseudoSpeaker>& mapping,
                            const ConversionParams& conversion, double leakage_jitter,
                            std::uint64_t seed, const std::string& label);

/// Scores an enrollment/trial pair with an ASV trained on `train`.
ScenarioOutcome evaluate(const Partition& enrollment, const Partition& trials,
                         const Partition& train, BackendKind backend,
                         const LinkabilityConfig& metric_config);

/// No conversion anywhere; the attacker's ASV sees original speech.
ScenarioOutcome evaluate_original(const EvalDataset& dataset, BackendKind backend,
                                  const LinkabilityConfig& metric_config);

ScenarioOutcome run_scenario(const EvalDataset& dataset, const ScenarioSpec& spec,
                             const LinkabilityConfig& metric_config, std::uint64_t seed);

struct TargetOutcome {
  PoolEntry target;
  PrivacyReport report;
  std::map<Gender, GenderMetrics> by_gender;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};

MeanStd mean_std(const std::vector<double>& values);

struct SweepResult {
  std::vector<TargetOutcome> per_target;
  PrivacyReport original;
  std::map<Gender, GenderMetrics> original_by_gender;
  MeanStd d_sys;
  MeanStd eer;
  std::map<Gender, MeanStd> d_sys_by_gender;
  std::map<Gender, MeanStd> eer_by_gender;
};

struct SweepOptions {
  std::size_t per_gender = 20;
  ConversionParams conversion;
  BackendKind backend = BackendKind::kPlda;
  std::size_t threads = 1;
};

/// White-box constant-target evaluation repeated for every selected target.
/// Results are ordered by target selection order, independent of `threads`.
SweepResult run_target_sweep(const EvalDataset& dataset, const SweepOptions& options,
                             const LinkabilityConfig& metric_config, std::uint64_t seed);

}  // namespace anonbench
