#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "anonbench/anonymizer.hpp"
#include "anonbench/rng.hpp"

using namespace anonbench;

namespace {

PoolEntry entry(std::string id, Gender g, Embedding x, F0Stats f0 = {150.0, 20.0}) {
  return {std::move(id), g, std::move(x), f0};
}

Pool random_pool(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Pool pool;
  for (std::size_t i = 0; i < n; ++i) {
    Embedding x = Embedding::zeros(dim);
    for (std::size_t d = 0; d < dim; ++d) x[d] = rng.normal();
    char id[16];
    std::snprintf(id, sizeof id, "p%03zu", i);
    pool.push_back(entry(id, i % 2 ? Gender::kMale : Gender::kFemale, x,
                         {100.0 + rng.uniform() * 100.0, 10.0 + rng.uniform() * 10.0}));
  }
  return pool;
}

}  // namespace

TEST_CASE("pseudo-speaker from a single far candidate is that candidate") {
  Pool pool{entry("p1", Gender::kFemale, {1.0, 0.1}, {200, 25}),
            entry("p2", Gender::kMale, {-1.0, 0.3}, {110, 12})};
  const SelectorParams params{1, 1, DistanceMetric::kCosine};
  const auto ps = select_pseudo_speaker({0.9, 0.0}, pool, params, 5);
  CHECK(ps.xvector == pool[1].xvector);
  CHECK(ps.f0_stats == pool[1].f0_stats);
  CHECK(ps.source_ids == std::vector<std::string>{"p2"});
}

TEST_CASE("pseudo-speaker over the whole pool is the pool mean for every seed") {
  const Pool pool = random_pool(12, 4, 2);
  const SelectorParams params{12, 12, DistanceMetric::kCosine};
  Embedding mean = Embedding::zeros(4);
  for (const auto& p : pool)
    for (std::size_t d = 0; d < 4; ++d) mean[d] += p.xvector[d] / 12.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto ps = select_pseudo_speaker({1, 0, 0, 0}, pool, params, seed);
    for (std::size_t d = 0; d < 4; ++d) CHECK(ps.xvector[d] == doctest::Approx(mean[d]));
    CHECK(ps.source_ids.size() == 12);
  }
}

TEST_CASE("pseudo-speaker on a 1-D pool averages the two furthest points") {
  Pool pool;
  for (int i = 0; i < 5; ++i)
    pool.push_back(entry("p" + std::to_string(i), Gender::kFemale, {double(i)}));
  const SelectorParams params{2, 2, DistanceMetric::kEuclidean};
  const auto ps = select_pseudo_speaker({0.0}, pool, params, 9);
  CHECK(ps.xvector[0] == doctest::Approx(3.5));
  std::set<std::string> ids(ps.source_ids.begin(), ps.source_ids.end());
  CHECK(ids == std::set<std::string>{"p3", "p4"});
}

TEST_CASE("pseudo-speaker draws only from the far set") {
  const Pool pool = random_pool(40, 6, 3);
  const Embedding source = pool[0].xvector;
  const SelectorParams params{10, 4, DistanceMetric::kCosine};
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& p : pool) ranked.push_back({cosine_distance(source, p.xvector), p.speaker_id});
  std::sort(ranked.rbegin(), ranked.rend());
  std::set<std::string> far;
  for (std::size_t i = 0; i < 10; ++i) far.insert(ranked[i].second);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ps = select_pseudo_speaker(source, pool, params, seed);
    REQUIRE(ps.source_ids.size() == 4);
    for (const auto& id : ps.source_ids) CHECK(far.count(id) == 1);
    CHECK(std::set<std::string>(ps.source_ids.begin(), ps.source_ids.end()).size() == 4);
  }
}

TEST_CASE("pseudo-speaker rejects invalid parameters") {
  const Pool pool = random_pool(6, 3, 4);
  CHECK_THROWS_AS(select_pseudo_speaker({1, 0, 0}, pool, {7, 1, DistanceMetric::kCosine}, 1),
                  Error);
  CHECK_THROWS_AS(select_pseudo_speaker({1, 0, 0}, pool, {3, 4, DistanceMetric::kCosine}, 1),
                  Error);
  CHECK_THROWS_AS(select_pseudo_speaker({1, 0}, pool, {3, 1, DistanceMetric::kCosine}, 1), Error);
  CHECK_THROWS_AS(select_pseudo_speaker({1, 0, 0}, Pool{}, {1, 1, DistanceMetric::kCosine}, 1),
                  Error);
}

TEST_CASE("selector parameters scale with the pool") {
  const auto big = SelectorParams::for_pool_size(400);
  CHECK(big.far_count == 200);
  CHECK(big.pick_count == 100);
  const auto small = SelectorParams::for_pool_size(40);
  CHECK(small.far_count == 20);
  CHECK(small.pick_count == 10);
  const auto tiny = SelectorParams::for_pool_size(2);
  CHECK(tiny.far_count == 1);
  CHECK(tiny.pick_count == 1);
}

TEST_CASE("constant strategy maps every speaker to the target") {
  const Pool pool = random_pool(10, 3, 5);
  const auto strategy = TargetStrategy::constant(pool[4]);
  const std::vector<std::string> speakers{"a", "b", "c"};
  const auto mapping = assign_targets(speakers, {}, strategy, pool, {5, 2}, 1);
  REQUIRE(mapping.size() == 3);
  for (const auto& s : speakers) {
    CHECK(mapping.at(s).xvector == pool[4].xvector);
    CHECK(mapping.at(s).f0_stats == pool[4].f0_stats);
  }
  CHECK(strategy.kind() == StrategyKind::kConstant);
  CHECK(TargetStrategy::permanent().constant_target() == std::nullopt);
}

TEST_CASE("permanent strategy is reproducible and uses per-speaker seed streams") {
  const Pool pool = random_pool(200, 8, 6);
  const std::map<std::string, Embedding> sources{{"s1", pool[0].xvector},
                                                 {"s2", pool[1].xvector}};
  const std::vector<std::string> speakers{"s1", "s2"};
  const SelectorParams params{100, 50, DistanceMetric::kCosine};
  const auto a = assign_targets(speakers, sources, TargetStrategy::permanent(), pool, params, 77);
  const auto b = assign_targets(speakers, sources, TargetStrategy::permanent(), pool, params, 77);
  CHECK(a == b);
  for (const auto& s : speakers) {
    const auto expect =
        select_pseudo_speaker(sources.at(s), pool, params, speaker_seed(77, s));
    CHECK(a.at(s) == expect);
  }
  CHECK(speaker_seed(77, "s1") != speaker_seed(77, "s2"));
  CHECK_THROWS_AS(
      assign_targets({"s3"}, sources, TargetStrategy::permanent(), pool, params, 77), Error);
}

TEST_CASE("f0 transform with equal stats is the identity") {
  const F0Contour c{{0, 121.5, 0, 133.25, 140}};
  const F0Stats s{130, 10};
  CHECK(transform_f0(c, s, s) == c);
}

TEST_CASE("f0 transform hand example") {
  const F0Contour out = transform_f0({{0, 120, 0, 140}}, {130, 10}, {200, 20});
  REQUIRE(out.frames_hz.size() == 4);
  CHECK(out.frames_hz[0] == 0.0);
  CHECK(out.frames_hz[1] == doctest::Approx(180.0));
  CHECK(out.frames_hz[2] == 0.0);
  CHECK(out.frames_hz[3] == doctest::Approx(220.0));
}

TEST_CASE("f0 transform matches target moments from own sample moments") {
  // Voiced frames {100, 140}: mean 120, population std 20.
  const F0Contour c{{0, 100, 140, 0, 100, 140}};
  const F0Stats src = voiced_stats(c);
  CHECK(src.mean_hz == doctest::Approx(120.0));
  CHECK(src.std_hz == doctest::Approx(20.0));
  const F0Stats out = voiced_stats(transform_f0(c, src, {200, 30}));
  CHECK(out.mean_hz == doctest::Approx(200.0).epsilon(1e-12));
  CHECK(out.std_hz == doctest::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("f0 transform floors voiced frames and validates input") {
  const F0Contour out = transform_f0({{0, 100, 300}}, {200, 100}, {10, 100});
  CHECK(out.frames_hz[0] == 0.0);
  CHECK(out.frames_hz[1] == kF0FloorHz);
  CHECK(out.frames_hz[2] == doctest::Approx(110.0));
  CHECK_THROWS_AS(transform_f0({{0, 0}}, {100, 10}, {200, 10}), Error);
  CHECK_THROWS_AS(transform_f0({{-5, 100}}, {100, 10}, {200, 10}), Error);
  CHECK_THROWS_AS(transform_f0({{100, 120}}, {100, 0}, {200, 10}), Error);
}

TEST_CASE("conversion endpoints and interpolation") {
  PseudoSpeaker ps{{0, 2}, {150, 20}, {"t"}};
  const Embedding utt{2, 0};
  CHECK(convert_utterance(utt, ps, {0.0, 0.0}, 1) == ps.xvector);
  CHECK(convert_utterance(utt, ps, {1.0, 0.0}, 1) == utt);
  const Embedding mid = convert_utterance(utt, ps, {0.5, 0.0}, 1);
  CHECK(mid[0] == doctest::Approx(1.0));
  CHECK(mid[1] == doctest::Approx(1.0));
}

TEST_CASE("conversion noise is seeded and has the configured scale") {
  PseudoSpeaker ps{Embedding::zeros(2000), {150, 20}, {"t"}};
  const Embedding utt = Embedding::zeros(2000);
  const Embedding a = convert_utterance(utt, ps, {0.3, 0.5}, 12);
  CHECK(a == convert_utterance(utt, ps, {0.3, 0.5}, 12));
  CHECK_FALSE(a == convert_utterance(utt, ps, {0.3, 0.5}, 13));
  double ss = 0;
  for (double v : a.values()) ss += v * v;
  CHECK(std::sqrt(ss / 2000) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("conversion parameters are validated") {
  CHECK_THROWS_AS((ConversionParams{-0.1, 0.0}.validate()), Error);
  CHECK_THROWS_AS((ConversionParams{1.1, 0.0}.validate()), Error);
  CHECK_THROWS_AS((ConversionParams{0.5, -1.0}.validate()), Error);
  CHECK_NOTHROW((ConversionParams{0.0, 0.0}.validate()));
  PseudoSpeaker ps{{0, 2}, {150, 20}, {"t"}};
  CHECK_THROWS_AS(convert_utterance({1, 2, 3}, ps, {0.5, 0.0}, 1), Error);
}
