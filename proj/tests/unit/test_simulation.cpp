#include <set>

#include "doctest.h"

#include "anonbench/embedding_space.hpp"
#include "anonbench/simulation.hpp"

using namespace anonbench;

namespace {

PopulationConfig small_config(std::uint64_t seed = 3) {
  PopulationConfig c;
  c.dim = 16;
  c.n_pool_speakers = 40;
  c.enrollment = {3, 3, 9, 9};
  c.trials = {4, 4, 40, 40};
  c.n_train_speakers = 40;
  c.utts_per_train_speaker = 6;
  c.seed = seed;
  return c;
}

std::size_t count_utts(const Partition& p) {
  std::size_t n = 0;
  for (const auto& [id, s] : p) n += s.utterances.size();
  return n;
}

std::size_t count_gender(const Partition& p, Gender g) {
  std::size_t n = 0;
  for (const auto& [id, s] : p) n += s.gender == g;
  return n;
}

ScenarioSpec white_box(const EvalDataset& ds, ConversionParams conv) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kWhiteBox;
  spec.strategy = TargetStrategy::constant(ds.pool.front());
  spec.asv_training = AsvTraining::kAnonymized;
  spec.conversion = conv;
  return spec;
}

}  // namespace

TEST_CASE("population counts follow the configured shapes") {
  PopulationConfig c = small_config();
  c.enrollment = {1, 1, 3, 3};
  c.trials = {1, 1, 3, 3};
  const EvalDataset ds = generate_population(c);
  CHECK(ds.trials.size() == 2);
  CHECK(count_utts(ds.trials) == 6);
  CHECK(count_utts(ds.enrollment) == 6);
  for (const auto& [id, s] : ds.trials) CHECK(s.utterances.size() == 3);
}

TEST_CASE("default population mirrors the evaluation dataset statistics") {
  const EvalDataset ds = generate_population(PopulationConfig{});
  CHECK(ds.enrollment.size() == 29);
  CHECK(count_gender(ds.enrollment, Gender::kFemale) == 16);
  CHECK(count_gender(ds.enrollment, Gender::kMale) == 13);
  CHECK(count_utts(ds.enrollment) == 438);
  CHECK(ds.trials.size() == 40);
  CHECK(count_gender(ds.trials, Gender::kFemale) == 20);
  CHECK(count_utts(ds.trials) == 1496);
  CHECK(ds.pool.size() == 400);
  CHECK(ds.dim() == 64);
  CHECK_NOTHROW(ds.validate());

  std::vector<std::string> enrolled;
  for (const auto& [id, s] : ds.enrollment) {
    enrolled.push_back(id);
    CHECK(ds.trials.count(id) == 1);
  }
  std::vector<TrialUtterance> trials;
  for (const auto& [id, s] : ds.trials)
    for (const auto& u : s.utterances) trials.push_back({u.utt_id, id, u.embedding});
  CHECK(full_cross_trials(enrolled, trials).size() == 29 * 1496);
}

TEST_CASE("population generation is deterministic and seed dependent") {
  const EvalDataset a = generate_population(small_config(5));
  const EvalDataset b = generate_population(small_config(5));
  CHECK(a == b);
  CHECK_FALSE(a == generate_population(small_config(6)));
}

TEST_CASE("population ids are disjoint across pool and evaluation partitions") {
  const EvalDataset ds = generate_population(small_config());
  std::set<std::string> pool_ids;
  for (const auto& p : ds.pool) pool_ids.insert(p.speaker_id);
  for (const Partition* part : {&ds.enrollment, &ds.trials, &ds.train})
    for (const auto& [id, s] : *part) CHECK(pool_ids.count(id) == 0);
  std::set<std::string> utt_ids;
  std::size_t n = 0;
  for (const Partition* part : {&ds.enrollment, &ds.trials, &ds.train})
    for (const auto& [id, s] : *part)
      for (const auto& u : s.utterances) {
        utt_ids.insert(u.utt_id);
        ++n;
      }
  CHECK(utt_ids.size() == n);
}

TEST_CASE("plda trained on generated speakers recovers the generating variances") {
  PopulationConfig c = small_config();
  c.dim = 8;
  c.between_var = 1.0;
  c.within_var = 0.25;
  c.n_train_speakers = 200;
  c.utts_per_train_speaker = 20;
  const EvalDataset ds = generate_population(c);
  std::vector<LabeledEmbedding> data;
  for (const auto& [id, s] : ds.train)
    for (const auto& u : s.utterances) data.push_back({id, u.embedding});
  const PldaModel m = estimate_plda(data);
  CHECK(m.between_cov().trace() == doctest::Approx(8.0).epsilon(0.10));
  CHECK(m.within_cov().trace() == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("population config rejects invalid values") {
  PopulationConfig c = small_config();
  c.between_var = -1;
  CHECK_THROWS_AS(generate_population(c), Error);
  c = small_config();
  c.enrollment.female_speakers = 10;
  CHECK_THROWS_AS(generate_population(c), Error);
}

TEST_CASE("identity conversion reproduces the original-speech evaluation") {
  const EvalDataset ds = generate_population(small_config());
  const LinkabilityConfig metrics;
  const auto original = evaluate_original(ds, BackendKind::kPlda, metrics);
  const auto identity = run_scenario(ds, white_box(ds, {1.0, 0.0}), metrics, 11);
  CHECK(identity.report.d_sys == original.report.d_sys);
  CHECK(identity.report.eer_percent == original.report.eer_percent);
  CHECK(identity.report.per_speaker_d_sys == original.report.per_speaker_d_sys);
  REQUIRE(identity.scores.size() == original.scores.size());
  for (std::size_t i = 0; i < identity.scores.size(); ++i)
    CHECK(identity.scores.scores()[i].score == original.scores.scores()[i].score);
}

TEST_CASE("anonymization lowers linkability and white-box is the worst case") {
  const EvalDataset ds = generate_population(PopulationConfig{});
  const LinkabilityConfig metrics;
  const auto original = evaluate_original(ds, BackendKind::kPlda, metrics);
  const auto white = run_scenario(ds, white_box(ds, {0.3, 0.3}), metrics, 5);
  CHECK(white.report.d_sys < original.report.d_sys);

  ScenarioSpec black;
  black.kind = ScenarioKind::kBlackBox;
  black.strategy = TargetStrategy::permanent();
  black.asv_training = AsvTraining::kOriginal;
  black.conversion = {0.3, 0.3};
  const auto b = run_scenario(ds, black, metrics, 5);
  CHECK(white.report.d_sys >= b.report.d_sys);
  CHECK(white.by_gender.size() == 2);
}

TEST_CASE("scenario consistency rules") {
  const EvalDataset ds = generate_population(small_config());
  ScenarioSpec s = white_box(ds, {0.3, 0.3});
  CHECK_NOTHROW(s.validate());
  s.asv_training = AsvTraining::kOriginal;
  CHECK_THROWS_AS(s.validate(), Error);
  s = white_box(ds, {0.3, 0.3});
  s.strategy = TargetStrategy::permanent();
  CHECK_THROWS_AS(s.validate(), Error);
  s.kind = ScenarioKind::kBlackBox;
  s.asv_training = AsvTraining::kAnonymized;
  CHECK_THROWS_AS(s.validate(), Error);
  s.asv_training = AsvTraining::kOriginal;
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("scenario runs are reproducible") {
  const EvalDataset ds = generate_population(small_config());
  ScenarioSpec grey;
  grey.kind = ScenarioKind::kGreyBox;
  grey.conversion = {0.3, 0.3};
  grey.leakage_jitter = 0.05;
  const auto a = run_scenario(ds, grey, {}, 9);
  const auto b = run_scenario(ds, grey, {}, 9);
  REQUIRE(a.scores.size() == b.scores.size());
  for (std::size_t i = 0; i < a.scores.size(); ++i)
    CHECK(a.scores.scores()[i].score == b.scores.scores()[i].score);
  CHECK(a.converted_trials == b.converted_trials);
}

TEST_CASE("converted partitions keep unvoiced frames and frame counts") {
  const EvalDataset ds = generate_population(small_config());
  std::map<std::string, PseudoSpeaker> mapping;
  for (const auto& [id, s] : ds.trials)
    mapping[id] = {ds.pool[0].xvector, ds.pool[0].f0_stats, {ds.pool[0].speaker_id}};
  const Partition out = convert_partition(ds.trials, mapping, {0.2, 0.1}, 0.0, 4, "trials");
  for (const auto& [id, s] : ds.trials) {
    const auto& conv = out.at(id);
    REQUIRE(conv.utterances.size() == s.utterances.size());
    for (std::size_t i = 0; i < s.utterances.size(); ++i) {
      const auto& a = s.utterances[i].f0.frames_hz;
      const auto& b = conv.utterances[i].f0.frames_hz;
      REQUIRE(a.size() == b.size());
      for (std::size_t f = 0; f < a.size(); ++f) CHECK((a[f] == 0.0) == (b[f] == 0.0));
      const F0Stats st = voiced_stats(conv.utterances[i].f0);
      CHECK(st.mean_hz == doctest::Approx(ds.pool[0].f0_stats.mean_hz).epsilon(1e-9));
    }
  }
  mapping.erase(mapping.begin());
  CHECK_THROWS_AS(convert_partition(ds.trials, mapping, {0.2, 0.1}, 0.0, 4, "trials"), Error);
}

TEST_CASE("sweep on a two-speaker pool yields two reports") {
  PopulationConfig c = small_config();
  c.n_pool_speakers = 2;
  const EvalDataset ds = generate_population(c);
  SweepOptions opts;
  opts.per_gender = 1;
  const SweepResult r = run_target_sweep(ds, opts, {}, 1);
  CHECK(r.per_target.size() == 2);
  CHECK(r.per_target[0].target.gender == Gender::kFemale);
  CHECK(r.per_target[1].target.gender == Gender::kMale);
  CHECK(r.d_sys.std >= 0.0);
}

TEST_CASE("sweep results do not depend on the thread count") {
  const EvalDataset ds = generate_population(small_config());
  SweepOptions opts;
  opts.per_gender = 3;
  const SweepResult one = run_target_sweep(ds, opts, {}, 21);
  opts.threads = 4;
  const SweepResult four = run_target_sweep(ds, opts, {}, 21);
  REQUIRE(one.per_target.size() == 6);
  REQUIRE(four.per_target.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(one.per_target[i].target.speaker_id == four.per_target[i].target.speaker_id);
    CHECK(one.per_target[i].report.d_sys == four.per_target[i].report.d_sys);
    CHECK(one.per_target[i].report.per_speaker_d_sys ==
          four.per_target[i].report.per_speaker_d_sys);
  }
  CHECK(one.d_sys.mean == four.d_sys.mean);
  CHECK(one.d_sys.std == four.d_sys.std);
}

TEST_CASE("sample mean and standard deviation") {
  const auto ms = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.std == doctest::Approx(1.2909944487));
  CHECK(mean_std({7.0}).std == 0.0);
}

TEST_CASE("scenario names round-trip") {
  for (auto k : {ScenarioKind::kBlackBox, ScenarioKind::kGreyBox, ScenarioKind::kWhiteBox})
    CHECK(parse_scenario(scenario_name(k)) == k);
  for (auto t : {AsvTraining::kOriginal, AsvTraining::kAnonymized})
    CHECK(parse_training(training_name(t)) == t);
  for (auto b : {BackendKind::kPlda, BackendKind::kCosine}) CHECK(parse_backend(backend_name(b)) == b);
  CHECK_THROWS_AS(parse_scenario("purple"), Error);
}
