#include "anonbench/privacy_metrics.hpp"

#include <algorithm>
#include <cmath>

namespace anonbench {

void LinkabilityConfig::validate() const {
  require(n_bins >= 2, ErrorCode::kInvalidArgument, "linkability n_bins must be >= 2");
  require(omega > 0.0 && std::isfinite(omega), ErrorCode::kInvalidArgument,
          "linkability omega must be > 0");
}

BinnedDensity::BinnedDensity(std::span<const double> values, double lo, double hi,
                             std::size_t n_bins)
    : lo_(lo), hi_(hi), mass_(n_bins, 0.0) {
  require(n_bins >= 1, ErrorCode::kInvalidArgument, "density needs at least one bin");
  require(std::isfinite(lo) && std::isfinite(hi) && hi > lo, ErrorCode::kInvalidArgument,
          "density range must satisfy lo < hi");
  require(!values.empty(), ErrorCode::kInvalidArgument, "density of an empty score set");
  std::vector<std::size_t> counts(n_bins, 0);
  for (double v : values) ++counts[bin_of(v)];
  const double inv = 1.0 / static_cast<double>(values.size());
  for (std::size_t b = 0; b < n_bins; ++b) mass_[b] = static_cast<double>(counts[b]) * inv;
}

std::size_t BinnedDensity::bin_of(double value) const {
  const double n = static_cast<double>(mass_.size());
  const double pos = std::floor((value - lo_) / (hi_ - lo_) * n);
  if (!(pos > 0.0)) return 0;
  if (pos >= n) return mass_.size() - 1;
  return static_cast<std::size_t>(pos);
}

double linkability_from_densities(double mated_density, double nonmated_density, double omega) {
  if (nonmated_density <= 0.0) return mated_density > 0.0 ? 1.0 : 0.0;
  const double lr = omega * mated_density / nonmated_density;
  return std::max(0.0, 2.0 * lr / (1.0 + lr) - 1.0);
}

double linkability_local(double score, const BinnedDensity& mated,
                         const BinnedDensity& nonmated, double omega, bool* clamped) {
  require(mated.n_bins() == nonmated.n_bins() && mated.lo() == nonmated.lo() &&
              mated.hi() == nonmated.hi(),
          ErrorCode::kInvalidArgument, "mated and non-mated densities use different grids");
  if (clamped) *clamped = !mated.contains(score);
  const std::size_t b = mated.bin_of(score);
  return linkability_from_densities(mated.mass(b), nonmated.mass(b), omega);
}

namespace {

struct Grid {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;
};

Grid pooled_range(std::span<const double> mated, std::span<const double> nonmated) {
  require(!mated.empty(), ErrorCode::kInvalidArgument, "no mated scores");
  require(!nonmated.empty(), ErrorCode::kInvalidArgument, "no non-mated scores");
  const auto [mlo, mhi] = std::minmax_element(mated.begin(), mated.end());
  const auto [nlo, nhi] = std::minmax_element(nonmated.begin(), nonmated.end());
  Grid g{std::min(*mlo, *nlo), std::max(*mhi, *nhi), false};
  g.degenerate = !(g.hi > g.lo);
  return g;
}

}  // namespace

LinkabilityResult linkability_global(std::span<const double> mated,
                                     std::span<const double> nonmated,
                                     const LinkabilityConfig& config) {
  config.validate();
  const Grid g = pooled_range(mated, nonmated);
  if (g.degenerate) return {0.0, true};
  const BinnedDensity dm(mated, g.lo, g.hi, config.n_bins);
  const BinnedDensity dn(nonmated, g.lo, g.hi, config.n_bins);
  double sum = 0.0;
  for (double s : mated) sum += linkability_local(s, dm, dn, config.omega);
  return {sum / static_cast<double>(mated.size()), false};
}

LinkabilityResult linkability_global(const ScoreSet& scores, const LinkabilityConfig& config) {
  const auto mated = scores.mated();
  const auto nonmated = scores.nonmated();
  return linkability_global(mated, nonmated, config);
}

PerSpeakerLinkability linkability_per_speaker(const ScoreSet& scores,
                                              const LinkabilityConfig& config) {
  config.validate();
  const auto mated = scores.mated();
  const auto nonmated = scores.nonmated();
  const Grid g = pooled_range(mated, nonmated);

  PerSpeakerLinkability out;
  out.degenerate_range = g.degenerate;
  const auto by_speaker = scores.mated_by_speaker();
  for (const auto& spk : scores.trial_speakers())
    if (!by_speaker.contains(spk)) out.omitted.push_back(spk);

  if (g.degenerate) {
    for (const auto& [spk, vals] : by_speaker) out.values[spk] = 0.0;
    return out;
  }
  const BinnedDensity dm(mated, g.lo, g.hi, config.n_bins);
  const BinnedDensity dn(nonmated, g.lo, g.hi, config.n_bins);
  for (const auto& [spk, vals] : by_speaker) {
    double sum = 0.0;
    for (double s : vals) sum += linkability_local(s, dm, dn, config.omega);
    out.values[spk] = sum / static_cast<double>(vals.size());
  }
  return out;
}

double compute_eer(std::span<const double> mated, std::span<const double> nonmated) {
  require(!mated.empty(), ErrorCode::kInvalidArgument, "compute_eer: no mated scores");
  require(!nonmated.empty(), ErrorCode::kInvalidArgument, "compute_eer: no non-mated scores");
  std::vector<double> m(mated.begin(), mated.end());
  std::vector<double> n(nonmated.begin(), nonmated.end());
  std::sort(m.begin(), m.end());
  std::sort(n.begin(), n.end());

  std::vector<double> thresholds;
  thresholds.reserve(2 * (m.size() + n.size()));
  std::merge(m.begin(), m.end(), n.begin(), n.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const std::size_t distinct = thresholds.size();
  for (std::size_t i = 0; i + 1 < distinct; ++i)
    thresholds.push_back(thresholds[i] + 0.5 * (thresholds[i + 1] - thresholds[i]));
  std::sort(thresholds.begin(), thresholds.end());

  const double nm = static_cast<double>(m.size());
  const double nn = static_cast<double>(n.size());
  struct Point {
    double frr;
    double far;
  };
  // Sentinels below the minimum and above the maximum score.
  std::vector<Point> sweep;
  sweep.reserve(thresholds.size() + 2);
  sweep.push_back({0.0, 1.0});
  for (double t : thresholds) {
    const auto below_m = std::lower_bound(m.begin(), m.end(), t) - m.begin();
    const auto below_n = std::lower_bound(n.begin(), n.end(), t) - n.begin();
    sweep.push_back({static_cast<double>(below_m) / nm,
                     static_cast<double>(static_cast<std::ptrdiff_t>(n.size()) - below_n) / nn});
  }
  sweep.push_back({1.0, 0.0});

  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const double d = sweep[i].frr - sweep[i].far;
    if (d < 0.0) continue;
    if (d == 0.0 || i == 0) return 100.0 * sweep[i].frr;
    const Point& p = sweep[i - 1];
    const double dp = p.frr - p.far;
    const double lambda = -dp / (d - dp);
    return 100.0 * (p.frr + lambda * (sweep[i].frr - p.frr));
  }
  return 100.0;  // unreachable: the upper sentinel has FRR - FAR = 1
}

double compute_eer(const ScoreSet& scores) {
  const auto mated = scores.mated();
  const auto nonmated = scores.nonmated();
  return compute_eer(mated, nonmated);
}

PrivacyReport privacy_report(const ScoreSet& scores, const LinkabilityConfig& config) {
  PrivacyReport report;
  const auto mated = scores.mated();
  const auto nonmated = scores.nonmated();
  report.n_mated = mated.size();
  report.n_nonmated = nonmated.size();
  report.eer_percent = compute_eer(mated, nonmated);
  const LinkabilityResult global = linkability_global(mated, nonmated, config);
  report.d_sys = global.value;
  if (global.degenerate_range) report.flags.push_back("degenerate_score_range");
  auto per = linkability_per_speaker(scores, config);
  report.per_speaker_d_sys = std::move(per.values);
  for (const auto& spk : per.omitted)
    report.flags.push_back("no_mated_scores:" + spk);
  return report;
}

}  // namespace anonbench
