// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: acceptance [work_dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "anonbench/commands.hpp"
#include "anonbench/config.hpp"
#include "anonbench/dataset_io.hpp"
#include "anonbench/embedding_space.hpp"
#include "anonbench/privacy_metrics.hpp"
#include "anonbench/rng.hpp"
#include "anonbench/simulation.hpp"

using namespace anonbench;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void criterion(int id, const char* title, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++g_failures;
  std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

RunConfig white_box_config(std::uint64_t seed, double beta, double sigma) {
  RunConfig c;
  c.master_seed = seed;
  c.scenario.kind = ScenarioKind::kWhiteBox;
  c.scenario.conversion = {beta, sigma};
  return c;
}

ScenarioOutcome white_box_run(const RunConfig& c, const EvalDataset& ds) {
  return run_scenario(ds, make_scenario_spec(c, ds.pool), c.metrics, scenario_seed(c));
}

bool same_tree(const fs::path& a, const fs::path& b, std::string* diff) {
  std::set<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(a)) names_a.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) names_b.insert(e.path().filename().string());
  if (names_a != names_b) {
    *diff = "file sets differ between " + a.string() + " and " + b.string();
    return false;
  }
  for (const auto& n : names_a)
    if (read_file(a / n) != read_file(b / n)) {
      *diff = n + " differs between " + a.string() + " and " + b.string();
      return false;
    }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "anonbench_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  // Fixed manifest timestamps.
  setenv("SOURCE_DATE_EPOCH", "0", 1);

  criterion(1, "metric golden values", [] {
    const auto t0 = Clock::now();
    const std::vector<double> lm{1, 1, 1, 3}, ln{1, 3, 3, 3};
    const double two_bin = linkability_global(lm, ln, {2, 1.0}).value;
    const double local = linkability_from_densities(0.75, 0.25, 1.0);
    const double eer = compute_eer(std::vector<double>{1, 2, 3}, std::vector<double>{0, 1.5, 2.5});
    const PldaModel plda(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1),
                         Eigen::MatrixXd::Ones(1, 1));
    const double llr = plda.score({1.0}, {1.0});
    const double elapsed = seconds_since(t0);
    const bool pass = two_bin == 0.375 && std::abs(local - 0.5) < 1e-15 &&
                      std::abs(eer - 33.33) <= 0.01 && std::abs(llr - 0.3105) <= 1e-4 &&
                      elapsed < 1.0;
    return Outcome{pass, "two-bin D_sys=" + fmt("%.17g", two_bin) + " local(LR=3)=" +
                             fmt("%.17g", local) + " EER=" + fmt("%.4f", eer) +
                             " LLR=" + fmt("%.6f", llr) + " time=" + fmt("%.4fs", elapsed)};
  });

  criterion(2, "per-speaker partition identity (100 randomized score sets)", [] {
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<ScoredTrial> scores;
      const std::size_t n_spk = 1 + rng.below(30);
      std::size_t utt = 0;
      for (std::size_t s = 0; s < n_spk; ++s) {
        const std::string spk = "s" + std::to_string(s);
        const double shift = rng.uniform(0.0, 3.0);
        const std::size_t n = 1 + rng.below(50);
        for (std::size_t i = 0; i < n; ++i)
          scores.push_back({{spk, "u" + std::to_string(utt++), spk, true}, rng.normal() + shift});
        const std::size_t k = rng.below(80);
        for (std::size_t i = 0; i < k; ++i)
          scores.push_back(
              {{"e" + spk, "u" + std::to_string(utt++), spk, false}, rng.normal() * 1.5});
      }
      const ScoreSet set(std::move(scores));
      const LinkabilityConfig cfg{2 + rng.below(150), rng.uniform(0.2, 5.0)};
      const double global = linkability_global(set, cfg).value;
      const auto per = linkability_per_speaker(set, cfg);
      const auto by_spk = set.mated_by_speaker();
      double weighted = 0.0, count = 0.0;
      for (const auto& [spk, v] : by_spk) {
        weighted += per.values.at(spk) * v.size();
        count += v.size();
      }
      worst = std::max(worst, std::abs(weighted / count - global));
    }
    return Outcome{worst <= 1e-12, "max |weighted mean - global| = " + fmt("%.3g", worst)};
  });

  // Original-speech reference values reused by criterion 4.
  std::vector<double> original_d(5);

  criterion(3, "original-speech regime D_sys >= 0.85 (identity run, 5 seeds)", [&] {
    const auto t0 = Clock::now();
    std::string detail = "D_sys:";
    bool pass = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const RunConfig c = white_box_config(seed, 1.0, 0.0);
      const EvalDataset ds = generate_population(c.population_config());
      const double d = white_box_run(c, ds).report.d_sys;
      original_d[seed - 1] = d;
      pass = pass && d >= 0.85;
      detail += fmt(" %.4f", d);
    }
    const double elapsed = seconds_since(t0);
    pass = pass && elapsed < 30.0;
    return Outcome{pass, detail + " time=" + fmt("%.2fs", elapsed)};
  });

  criterion(4, "anonymization drops D_sys by >= 10% relative (beta 0.3, sigma 0.3, 5 seeds)", [&] {
    std::string detail = "relative drop:";
    bool pass = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const RunConfig c = white_box_config(seed, 0.3, 0.3);
      const EvalDataset ds = generate_population(c.population_config());
      const double anon = white_box_run(c, ds).report.d_sys;
      const double orig = original_d[seed - 1];
      const double drop = (orig - anon) / orig;
      pass = pass && drop >= 0.10;
      detail += fmt(" %.3f", drop) + fmt(" (%.4f", orig) + fmt("->%.4f)", anon);
    }
    return Outcome{pass, detail};
  });

  criterion(5, "target invariance: sweep std(D_sys) <= 0.05, runtime < 120 s", [] {
    RunConfig c;
    c.sweep.per_gender = 20;
    c.sweep.conversion = {0.3, 0.3};
    const auto t0 = Clock::now();
    const EvalDataset ds = generate_population(c.population_config());
    SweepOptions opts;
    opts.per_gender = c.sweep.per_gender;
    opts.conversion = c.sweep.conversion;
    const SweepResult r = run_target_sweep(ds, opts, c.metrics, sweep_seed(c));
    const double elapsed = seconds_since(t0);
    const bool pass = r.per_target.size() == 40 && r.d_sys.std <= 0.05 && elapsed < 120.0;
    return Outcome{pass, std::to_string(r.per_target.size()) + " targets, D_sys mean=" +
                             fmt("%.4f", r.d_sys.mean) + " std=" + fmt("%.4f", r.d_sys.std) +
                             " EER mean=" + fmt("%.2f%%", r.eer.mean) +
                             " time=" + fmt("%.2fs", elapsed)};
  });

  criterion(6, "D_sys non-decreasing in beta (<= 1 inversion of <= 0.02)", [] {
    const RunConfig base;
    const EvalDataset ds = generate_population(base.population_config());
    std::vector<double> d;
    std::string detail = "D_sys(beta=0,.25,.5,.75,1):";
    for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      d.push_back(white_box_run(white_box_config(base.master_seed, beta, 0.3), ds).report.d_sys);
      detail += fmt(" %.4f", d.back());
    }
    int inversions = 0;
    double worst = 0.0;
    for (std::size_t i = 1; i < d.size(); ++i)
      if (d[i] < d[i - 1]) {
        ++inversions;
        worst = std::max(worst, d[i - 1] - d[i]);
      }
    const bool pass = inversions == 0 || (inversions == 1 && worst <= 0.02);
    return Outcome{pass, detail + " inversions=" + std::to_string(inversions)};
  });

  criterion(7, "perfect anonymization limit: beta 0 gives EER in [45,55], D_sys <= 0.05", [] {
    // Every trial speaker enrolled, 250 trials each: 10k mated scores.
    RunConfig c = white_box_config(1, 0.0, 0.3);
    c.population.enrollment = {20, 20, 200, 200};
    c.population.trials = {20, 20, 5000, 5000};
    const EvalDataset ds = generate_population(c.population_config());
    const ScenarioOutcome r = white_box_run(c, ds);

    // Default evaluation shape, reported alongside.
    const RunConfig small = white_box_config(1, 0.0, 0.3);
    const EvalDataset small_ds = generate_population(small.population_config());
    const ScenarioOutcome s = white_box_run(small, small_ds);

    const bool pass = r.report.n_mated >= 10000 && r.report.eer_percent >= 45.0 &&
                      r.report.eer_percent <= 55.0 && r.report.d_sys <= 0.05;
    return Outcome{pass, std::to_string(r.report.n_mated) + " mated scores: EER=" +
                             fmt("%.2f%%", r.report.eer_percent) + " D_sys=" +
                             fmt("%.4f", r.report.d_sys) + "; default shape (" +
                             std::to_string(s.report.n_mated) + " mated): EER=" +
                             fmt("%.2f%%", s.report.eer_percent) + " D_sys=" +
                             fmt("%.4f", s.report.d_sys)};
  });

  criterion(8, "F0 moment matching to 1e-9 on 1000 random contours", [] {
    Rng rng(8);
    double worst = 0.0;
    bool structure = true;
    for (int trial = 0; trial < 1000; ++trial) {
      F0Contour c;
      const std::size_t n = 2 + rng.below(300);
      const double mean = rng.uniform(80.0, 260.0), spread = rng.uniform(5.0, 40.0);
      for (std::size_t i = 0; i < n; ++i)
        c.frames_hz.push_back(rng.bernoulli(0.3) ? 0.0 : mean + spread * rng.uniform(-1.0, 1.0));
      c.frames_hz[0] = mean - spread;
      c.frames_hz[1] = mean + spread;
      const F0Stats src = voiced_stats(c);
      const F0Stats tgt{rng.uniform(150.0, 300.0), rng.uniform(5.0, 30.0)};
      const F0Contour out = transform_f0(c, src, tgt);
      if (out.frames_hz.size() != c.frames_hz.size()) structure = false;
      for (std::size_t i = 0; i < n && structure; ++i)
        if ((c.frames_hz[i] == 0.0) != (out.frames_hz[i] == 0.0)) structure = false;
      const F0Stats got = voiced_stats(out);
      worst = std::max({worst, std::abs(got.mean_hz - tgt.mean_hz), std::abs(got.std_hz - tgt.std_hz)});
    }
    return Outcome{structure && worst <= 1e-9,
                   "max moment error=" + fmt("%.3g Hz", worst) +
                       (structure ? ", frames preserved" : ", frame structure changed")};
  });

  criterion(9, "determinism: run and sweep byte-identical across reruns and threads {1,4}",
            [&] {
              const RunConfig c;
              cmd_run(c, work / "run_a", {std::nullopt, 1});
              cmd_run(c, work / "run_b", {std::nullopt, 4});
              cmd_sweep(c, work / "sweep_a", {std::nullopt, 1});
              cmd_sweep(c, work / "sweep_b", {std::nullopt, 4});
              cmd_sweep(c, work / "sweep_c", {std::nullopt, 4});
              std::string diff;
              const bool pass = same_tree(work / "run_a", work / "run_b", &diff) &&
                                same_tree(work / "sweep_a", work / "sweep_b", &diff) &&
                                same_tree(work / "sweep_b", work / "sweep_c", &diff);
              return Outcome{pass, pass ? "all output files identical" : diff};
            });

  criterion(10, "select_targets: 20 + 20 distinct real members of a 200-speaker pool", [] {
    PopulationConfig pc;
    pc.n_pool_speakers = 200;
    const EvalDataset ds = generate_population(pc);
    const auto targets = select_targets(ds.pool, 20, 10);
    std::set<std::string> ids;
    std::size_t female = 0, male = 0;
    bool real = true;
    for (const auto& t : targets) {
      ids.insert(t.speaker_id);
      (t.gender == Gender::kFemale ? female : male)++;
      const auto it = std::find_if(ds.pool.begin(), ds.pool.end(), [&](const PoolEntry& p) {
        return p.speaker_id == t.speaker_id;
      });
      real = real && it != ds.pool.end() && it->xvector == t.xvector && it->gender == t.gender;
    }
    const bool pass = targets.size() == 40 && female == 20 && male == 20 && ids.size() == 40 && real;
    return Outcome{pass, std::to_string(targets.size()) + " targets (" + std::to_string(female) +
                             " F / " + std::to_string(male) + " M), " +
                             std::to_string(ids.size()) + " distinct"};
  });

  std::printf("%s: %d failing criteria\n", g_failures ? "FAILED" : "OK", g_failures);
  return g_failures ? 1 : 0;
}
