#include "anonbench/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "anonbench/embedding_space.hpp"
#include "anonbench/rng.hpp"

namespace anonbench {
namespace {

std::string speaker_name(const char* prefix, Gender g, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%c%03zu", prefix, g == Gender::kFemale ? 'f' : 'm', index);
  return buf;
}

std::string utt_name(const std::string& speaker, const char* tag, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "-%s%03zu", tag, index);
  return speaker + buf;
}

struct Identity {
  Embedding xvector;
  F0Stats f0;
};

Identity draw_identity(const PopulationConfig& cfg, const std::string& speaker_id, Gender g) {
  Rng rng(derive_seed(cfg.seed, "identity:" + speaker_id));
  Identity id;
  id.xvector = Embedding::zeros(cfg.dim);
  const double sd = std::sqrt(cfg.between_var);
  for (std::size_t d = 0; d < cfg.dim; ++d) id.xvector[d] = sd * rng.normal();
  const HzRange& mean_range = g == Gender::kFemale ? cfg.f0_mean_female : cfg.f0_mean_male;
  id.f0.mean_hz = rng.uniform(mean_range.lo, mean_range.hi);
  id.f0.std_hz = rng.uniform(cfg.f0_std.lo, cfg.f0_std.hi);
  return id;
}

Utterance draw_utterance(const PopulationConfig& cfg, const Identity& id,
                         const std::string& utt_id) {
  Rng rng(derive_seed(cfg.seed, "utterance:" + utt_id));
  Utterance u;
  u.utt_id = utt_id;
  u.embedding = Embedding::zeros(cfg.dim);
  const double sd = std::sqrt(cfg.within_var);
  for (std::size_t d = 0; d < cfg.dim; ++d) u.embedding[d] = id.xvector[d] + sd * rng.normal();
  u.f0.frames_hz.resize(cfg.f0_frames);
  std::size_t voiced = 0;
  for (auto& f : u.f0.frames_hz) {
    const bool unvoiced = rng.bernoulli(cfg.unvoiced_fraction);
    const double jitter = rng.normal();
    if (unvoiced) {
      f = 0.0;
    } else {
      f = std::max(kF0FloorHz, id.f0.mean_hz + id.f0.std_hz * jitter);
      ++voiced;
    }
  }
  // Keep at least two voiced frames so per-utterance F0 stats are defined.
  for (std::size_t i = 0; voiced < 2 && i < u.f0.frames_hz.size(); ++i) {
    if (u.f0.frames_hz[i] == 0.0) {
      u.f0.frames_hz[i] = id.f0.mean_hz + (voiced == 0 ? -0.5 : 0.5) * id.f0.std_hz;
      ++voiced;
    }
  }
  return u;
}

void add_speakers(Partition& part, const PopulationConfig& cfg, const char* prefix,
                  const char* tag, Gender g, std::size_t first, std::size_t count,
                  std::size_t utterances_total, std::size_t speakers_total) {
  // Utterances spread over all speakers_total speakers of this gender; this
  // call materializes speakers [first, first + count).
  const std::size_t base = utterances_total / speakers_total;
  const std::size_t extra = utterances_total % speakers_total;
  for (std::size_t s = first; s < first + count; ++s) {
    const std::string id = speaker_name(prefix, g, s);
    const Identity ident = draw_identity(cfg, id, g);
    SpeakerData data;
    data.gender = g;
    const std::size_t n = base + (s < extra ? 1 : 0);
    for (std::size_t u = 0; u < n; ++u)
      data.utterances.push_back(draw_utterance(cfg, ident, utt_name(id, tag, u)));
    part.emplace(id, std::move(data));
  }
}

std::map<std::string, Embedding> speaker_means(const Partition& part) {
  std::map<std::string, Embedding> out;
  for (const auto& [spk, data] : part) {
    std::vector<Embedding> embs;
    embs.reserve(data.utterances.size());
    for (const auto& u : data.utterances) embs.push_back(u.embedding);
    out.emplace(spk, mean_embedding(embs));
  }
  return out;
}

std::vector<std::string> speaker_ids(const Partition& part) {
  std::vector<std::string> ids;
  for (const auto& [spk, data] : part) ids.push_back(spk);
  return ids;
}

std::map<Gender, GenderMetrics> gender_breakdown(const ScoreSet& scores,
                                                 const std::map<std::string, Gender>& genders,
                                                 const LinkabilityConfig& cfg) {
  std::map<Gender, GenderMetrics> out;
  for (Gender g : {Gender::kFemale, Gender::kMale}) {
    const ScoreSet subset = scores.filter([&](const TrialEntry& e) {
      const auto a = genders.find(e.enroll_speaker_id);
      const auto b = genders.find(e.trial_speaker_id);
      return a != genders.end() && b != genders.end() && a->second == g && b->second == g;
    });
    const auto mated = subset.mated();
    const auto nonmated = subset.nonmated();
    if (mated.empty() || nonmated.empty()) continue;
    out[g] = {compute_eer(mated, nonmated), linkability_global(mated, nonmated, cfg).value};
  }
  return out;
}

SelectorParams selector_for(const ScenarioSpec& spec, const Pool& pool) {
  return spec.selector ? *spec.selector : SelectorParams::for_pool_size(pool.size(), spec.metric);
}

std::map<std::string, PseudoSpeaker> targets_for(const Partition& part,
                                                 const TargetStrategy& strategy,
                                                 const EvalDataset& dataset,
                                                 const SelectorParams& selector,
                                                 std::uint64_t seed) {
  std::map<std::string, Embedding> sources;
  if (strategy.kind() == StrategyKind::kPermanent) sources = speaker_means(part);
  return assign_targets(speaker_ids(part), sources, strategy, dataset.pool, selector, seed);
}

}  // namespace

std::size_t EvalDataset::dim() const {
  if (!pool.empty()) return pool.front().xvector.dim();
  for (const Partition* p : {&enrollment, &trials, &train})
    for (const auto& [spk, data] : *p)
      if (!data.utterances.empty()) return data.utterances.front().embedding.dim();
  return 0;
}

void EvalDataset::validate() const {
  const std::size_t d = dim();
  require(d > 0, ErrorCode::kInvalidArgument, "dataset has no embeddings");
  if (!pool.empty()) validate_pool(pool);
  std::set<std::string> pool_ids;
  for (const auto& e : pool) pool_ids.insert(e.speaker_id);
  std::set<std::string> utt_ids;
  for (const Partition* p : {&enrollment, &trials, &train}) {
    for (const auto& [spk, data] : *p) {
      require(!pool_ids.contains(spk), ErrorCode::kInvalidArgument,
              "speaker '" + spk + "' appears in both the pool and an evaluation partition");
      for (const auto& u : data.utterances) {
        require(utt_ids.insert(u.utt_id).second, ErrorCode::kInvalidArgument,
                "duplicate utterance id '" + u.utt_id + "'");
        require(u.embedding.dim() == d, ErrorCode::kDimensionMismatch,
                "utterance '" + u.utt_id + "' has dimension " + std::to_string(u.embedding.dim()) +
                    ", expected " + std::to_string(d));
      }
    }
  }
  // Enrollment and train sets share no speakers with each other.
  for (const auto& [spk, data] : train)
    require(!enrollment.contains(spk) && !trials.contains(spk), ErrorCode::kInvalidArgument,
            "speaker '" + spk + "' appears in both train and evaluation partitions");
}

void PopulationConfig::validate() const {
  const auto positive = [](std::size_t v, const char* field) {
    require(v >= 1, ErrorCode::kConfig, std::string("population.") + field + " must be >= 1");
  };
  positive(dim, "dim");
  positive(n_pool_speakers, "n_pool_speakers");
  positive(n_train_speakers, "n_train_speakers");
  positive(utts_per_train_speaker, "utts_per_train_speaker");
  positive(f0_frames, "f0_frames");
  require(n_pool_speakers >= 2, ErrorCode::kConfig,
          "population.n_pool_speakers must be >= 2 (one per gender)");
  require(n_train_speakers >= 2, ErrorCode::kConfig, "population.n_train_speakers must be >= 2");
  require(utts_per_train_speaker >= 2, ErrorCode::kConfig,
          "population.utts_per_train_speaker must be >= 2");
  require(trials.female_speakers + trials.male_speakers >= 1, ErrorCode::kConfig,
          "population.trials must contain speakers");
  require(enrollment.female_speakers + enrollment.male_speakers >= 1, ErrorCode::kConfig,
          "population.enrollment must contain speakers");
  require(enrollment.female_speakers <= trials.female_speakers &&
              enrollment.male_speakers <= trials.male_speakers,
          ErrorCode::kConfig,
          "population.enrollment speakers must not exceed trial speakers per gender");
  for (const auto* shape : {&enrollment, &trials}) {
    const char* name = shape == &enrollment ? "enrollment" : "trials";
    require(shape->female_utterances >= shape->female_speakers &&
                shape->male_utterances >= shape->male_speakers,
            ErrorCode::kConfig,
            std::string("population.") + name + ": every speaker needs at least one utterance");
    require((shape->female_speakers > 0) == (shape->female_utterances > 0) &&
                (shape->male_speakers > 0) == (shape->male_utterances > 0),
            ErrorCode::kConfig,
            std::string("population.") + name + ": utterances given for a gender with no speakers");
  }
  require(between_var > 0.0 && std::isfinite(between_var), ErrorCode::kConfig,
          "population.between_var must be > 0");
  require(within_var > 0.0 && std::isfinite(within_var), ErrorCode::kConfig,
          "population.within_var must be > 0");
  for (const HzRange* r : {&f0_mean_female, &f0_mean_male, &f0_std})
    require(r->lo > 0.0 && r->hi >= r->lo, ErrorCode::kConfig,
            "population F0 ranges must satisfy 0 < lo <= hi");
  require(unvoiced_fraction >= 0.0 && unvoiced_fraction < 1.0, ErrorCode::kConfig,
          "population.unvoiced_fraction must be in [0, 1)");
}

EvalDataset generate_population(const PopulationConfig& config) {
  config.validate();
  EvalDataset ds;

  const std::size_t pool_f = (config.n_pool_speakers + 1) / 2;
  const std::size_t pool_m = config.n_pool_speakers - pool_f;
  for (Gender g : {Gender::kFemale, Gender::kMale}) {
    const std::size_t n = g == Gender::kFemale ? pool_f : pool_m;
    for (std::size_t s = 0; s < n; ++s) {
      const std::string id = speaker_name("pool_", g, s);
      Identity ident = draw_identity(config, id, g);
      ds.pool.push_back({id, g, std::move(ident.xvector), ident.f0});
    }
  }

  // Trial and enrollment speakers share identities: enrolled speakers are the
  // first ones of each gender among the trial speakers.
  for (Gender g : {Gender::kFemale, Gender::kMale}) {
    const bool f = g == Gender::kFemale;
    const std::size_t n_trial = f ? config.trials.female_speakers : config.trials.male_speakers;
    const std::size_t n_enroll =
        f ? config.enrollment.female_speakers : config.enrollment.male_speakers;
    if (n_trial > 0)
      add_speakers(ds.trials, config, "spk_", "tri", g, 0, n_trial,
                   f ? config.trials.female_utterances : config.trials.male_utterances, n_trial);
    if (n_enroll > 0)
      add_speakers(ds.enrollment, config, "spk_", "enr", g, 0, n_enroll,
                   f ? config.enrollment.female_utterances : config.enrollment.male_utterances,
                   n_enroll);
  }

  const std::size_t train_f = (config.n_train_speakers + 1) / 2;
  const std::size_t train_m = config.n_train_speakers - train_f;
  for (Gender g : {Gender::kFemale, Gender::kMale}) {
    const std::size_t n = g == Gender::kFemale ? train_f : train_m;
    if (n > 0)
      add_speakers(ds.train, config, "train_", "trn", g, 0, n, n * config.utts_per_train_speaker,
                   n);
  }
  return ds;
}

const char* scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kBlackBox: return "black";
    case ScenarioKind::kGreyBox: return "grey";
    case ScenarioKind::kWhiteBox: return "white";
  }
  return "?";
}

ScenarioKind parse_scenario(const std::string& name) {
  if (name == "black" || name == "black_box") return ScenarioKind::kBlackBox;
  if (name == "grey" || name == "grey_box" || name == "gray") return ScenarioKind::kGreyBox;
  if (name == "white" || name == "white_box") return ScenarioKind::kWhiteBox;
  fail(ErrorCode::kConfig, "unknown scenario '" + name + "' (expected black, grey or white)");
}

const char* training_name(AsvTraining t) {
  return t == AsvTraining::kOriginal ? "original" : "anonymized";
}

AsvTraining parse_training(const std::string& name) {
  if (name == "original") return AsvTraining::kOriginal;
  if (name == "anonymized") return AsvTraining::kAnonymized;
  fail(ErrorCode::kConfig, "unknown asv_training '" + name + "'");
}

const char* backend_name(BackendKind b) { return b == BackendKind::kPlda ? "plda" : "cosine"; }

BackendKind parse_backend(const std::string& name) {
  if (name == "plda") return BackendKind::kPlda;
  if (name == "cosine") return BackendKind::kCosine;
  fail(ErrorCode::kConfig, "unknown asv backend '" + name + "'");
}

void ScenarioSpec::validate() const {
  conversion.validate();
  require(leakage_jitter >= 0.0 && std::isfinite(leakage_jitter), ErrorCode::kConfig,
          "scenario.leakage_jitter must be >= 0");
  if (kind == ScenarioKind::kBlackBox)
    require(asv_training == AsvTraining::kOriginal, ErrorCode::kConfig,
            "black-box scenario requires asv_training = original");
  if (kind == ScenarioKind::kWhiteBox) {
    require(strategy.kind() == StrategyKind::kConstant && strategy.constant_target(),
            ErrorCode::kConfig, "white-box scenario requires a constant target");
    require(asv_training == AsvTraining::kAnonymized, ErrorCode::kConfig,
            "white-box scenario requires asv_training = anonymized");
  }
}

Partition convert_partition(const Partition& partition,
                            const std::map<std::string, PseudoSpeaker>& mapping,
                            const ConversionParams& conversion, double leakage_jitter,
                            std::uint64_t seed, const std::string& label) {
  Partition out;
  for (const auto& [spk, data] : partition) {
    const auto it = mapping.find(spk);
    require(it != mapping.end(), ErrorCode::kInvalidArgument,
            "no pseudo-speaker assigned to '" + spk + "'");
    ConversionParams params = conversion;
    if (leakage_jitter > 0.0) {
      Rng rng(derive_seed(seed, label + ":jitter:" + spk));
      params.leakage_beta = std::clamp(conversion.leakage_beta + leakage_jitter * rng.normal(),
                                       0.0, 1.0);
    }
    SpeakerData converted;
    converted.gender = data.gender;
    converted.utterances.reserve(data.utterances.size());
    for (const auto& u : data.utterances) {
      Utterance c;
      c.utt_id = u.utt_id;
      c.embedding = convert_utterance(u.embedding, it->second, params,
                                      derive_seed(seed, label + ":" + u.utt_id));
      const bool has_voiced =
          std::any_of(u.f0.frames_hz.begin(), u.f0.frames_hz.end(), [](double f) { return f > 0; });
      if (has_voiced) {
        const F0Stats source = voiced_stats(u.f0);
        c.f0 = source.std_hz > 0.0 ? transform_f0(u.f0, source, it->second.f0_stats) : u.f0;
      } else {
        c.f0 = u.f0;
      }
      converted.utterances.push_back(std::move(c));
    }
    out.emplace(spk, std::move(converted));
  }
  return out;
}

ScenarioOutcome evaluate(const Partition& enrollment, const Partition& trials,
                         const Partition& train, BackendKind backend,
                         const LinkabilityConfig& metric_config) {
  AsvBackend asv = CosineBackend{};
  if (backend == BackendKind::kPlda) {
    std::vector<LabeledEmbedding> data;
    for (const auto& [spk, sd] : train)
      for (const auto& u : sd.utterances) data.push_back({spk, u.embedding});
    asv = estimate_plda(data);
  }

  std::map<std::string, std::vector<Embedding>> enroll;
  std::map<std::string, Gender> genders;
  for (const auto& [spk, sd] : enrollment) {
    auto& v = enroll[spk];
    for (const auto& u : sd.utterances) v.push_back(u.embedding);
    genders[spk] = sd.gender;
  }
  std::vector<TrialUtterance> trial_utts;
  for (const auto& [spk, sd] : trials) {
    genders[spk] = sd.gender;
    for (const auto& u : sd.utterances) trial_utts.push_back({u.utt_id, spk, u.embedding});
  }
  const TrialList list = full_cross_trials(speaker_ids(enrollment), trial_utts);

  ScenarioOutcome out;
  out.scores = score_trials(asv, enroll, trial_utts, list);
  out.report = privacy_report(out.scores, metric_config);
  out.by_gender = gender_breakdown(out.scores, genders, metric_config);
  return out;
}

ScenarioOutcome evaluate_original(const EvalDataset& dataset, BackendKind backend,
                                  const LinkabilityConfig& metric_config) {
  ScenarioOutcome out =
      evaluate(dataset.enrollment, dataset.trials, dataset.train, backend, metric_config);
  out.converted_trials = dataset.trials;
  return out;
}

ScenarioOutcome run_scenario(const EvalDataset& dataset, const ScenarioSpec& spec,
                             const LinkabilityConfig& metric_config, std::uint64_t seed) {
  spec.validate();
  metric_config.validate();
  const SelectorParams selector = selector_for(spec, dataset.pool);
  const double jitter = spec.leakage_jitter;

  // Trials: the service provider's anonymization.
  const std::uint64_t trial_seed = derive_seed(seed, "trials");
  const auto trial_map = targets_for(dataset.trials, spec.strategy, dataset, selector, trial_seed);
  Partition trials =
      convert_partition(dataset.trials, trial_map, spec.conversion, jitter, trial_seed, "trials");

  Partition enrollment;
  Partition train;
  switch (spec.kind) {
    case ScenarioKind::kBlackBox:
      enrollment = dataset.enrollment;
      train = dataset.train;
      break;
    case ScenarioKind::kGreyBox: {
      // The attacker runs the same toolkit with its own random draws.
      const auto permanent = TargetStrategy::permanent();
      const std::uint64_t enroll_seed = derive_seed(seed, "enrollment");
      const auto enroll_map =
          targets_for(dataset.enrollment, permanent, dataset, selector, enroll_seed);
      enrollment = convert_partition(dataset.enrollment, enroll_map, spec.conversion, jitter,
                                     enroll_seed, "enrollment");
      if (spec.asv_training == AsvTraining::kAnonymized) {
        const std::uint64_t train_seed = derive_seed(seed, "train");
        const auto train_map = targets_for(dataset.train, permanent, dataset, selector, train_seed);
        train = convert_partition(dataset.train, train_map, spec.conversion, jitter, train_seed,
                                  "train");
      } else {
        train = dataset.train;
      }
      break;
    }
    case ScenarioKind::kWhiteBox: {
      const std::uint64_t enroll_seed = derive_seed(seed, "enrollment");
      const std::uint64_t train_seed = derive_seed(seed, "train");
      const auto enroll_map =
          targets_for(dataset.enrollment, spec.strategy, dataset, selector, enroll_seed);
      const auto train_map = targets_for(dataset.train, spec.strategy, dataset, selector, train_seed);
      enrollment = convert_partition(dataset.enrollment, enroll_map, spec.conversion, jitter,
                                     enroll_seed, "enrollment");
      train = convert_partition(dataset.train, train_map, spec.conversion, jitter, train_seed,
                                "train");
      break;
    }
  }

  ScenarioOutcome out = evaluate(enrollment, trials, train, spec.backend, metric_config);
  out.converted_trials = std::move(trials);
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

SweepResult run_target_sweep(const EvalDataset& dataset, const SweepOptions& options,
                             const LinkabilityConfig& metric_config, std::uint64_t seed) {
  metric_config.validate();
  options.conversion.validate();
  const auto targets =
      select_targets(dataset.pool, options.per_gender, derive_seed(seed, "select_targets"));

  SweepResult result;
  result.per_target.resize(targets.size());
  {
    const ScenarioOutcome original = evaluate_original(dataset, options.backend, metric_config);
    result.original = original.report;
    result.original_by_gender = original.by_gender;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(targets.size());
  const auto worker = [&] {
    for (std::size_t i = next++; i < targets.size(); i = next++) {
      try {
        ScenarioSpec spec;
        spec.kind = ScenarioKind::kWhiteBox;
        spec.strategy = TargetStrategy::constant(targets[i]);
        spec.conversion = options.conversion;
        spec.asv_training = AsvTraining::kAnonymized;
        spec.backend = options.backend;
        const ScenarioOutcome outcome = run_scenario(
            dataset, spec, metric_config, derive_seed(seed, "target:" + targets[i].speaker_id));
        result.per_target[i] = {targets[i], outcome.report, outcome.by_gender};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(options.threads, 1, targets.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> d_sys, eer;
  std::map<Gender, std::vector<double>> d_g, e_g;
  for (const auto& t : result.per_target) {
    d_sys.push_back(t.report.d_sys);
    eer.push_back(t.report.eer_percent);
    for (const auto& [g, m] : t.by_gender) {
      d_g[g].push_back(m.d_sys);
      e_g[g].push_back(m.eer_percent);
    }
  }
  result.d_sys = mean_std(d_sys);
  result.eer = mean_std(eer);
  for (const auto& [g, v] : d_g) result.d_sys_by_gender[g] = mean_std(v);
  for (const auto& [g, v] : e_g) result.eer_by_gender[g] = mean_std(v);
  return result;
}

}  // namespace anonbench
