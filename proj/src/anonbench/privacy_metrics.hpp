#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "anonbench/asv.hpp"

namespace anonbench {

struct LinkabilityConfig {
  std::size_t n_bins = 100;
  // Prior ratio p(mated) / p(non-mated).
  double omega = 1.0;

  void validate() const;
};

/// Normalized equal-width histogram over [lo, hi]. The last bin is closed;
/// values outside the range are clamped to the edge bins.
class BinnedDensity {
 public:
  BinnedDensity(std::span<const double> values, double lo, double hi, std::size_t n_bins);

  std::size_t bin_of(double value) const;
  /// Fraction of the values falling in `bin`.
  double mass(std::size_t bin) const { return mass_[bin]; }
  std::size_t n_bins() const noexcept { return mass_.size(); }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  bool contains(double value) const { return value >= lo_ && value <= hi_; }

 private:
  double lo_;
  double hi_;
  std::vector<double> mass_;
};

/// D_<-> from mated / non-mated density values at a score's bin.
double linkability_from_densities(double mated_density, double nonmated_density, double omega);

/// Local linkability of one score. Scores outside the grid use the edge bin;
/// `clamped` (if given) is set when that happens.
double linkability_local(double score, const BinnedDensity& mated,
                         const BinnedDensity& nonmated, double omega, bool* clamped = nullptr);

struct LinkabilityResult {
  double value = 0.0;
  bool degenerate_range = false;
};

/// Mean local linkability over all mated scores, densities built over the
/// pooled [min, max] score range.
LinkabilityResult linkability_global(const ScoreSet& scores, const LinkabilityConfig& config);
/// Same, from raw score vectors.
LinkabilityResult linkability_global(std::span<const double> mated,
                                     std::span<const double> nonmated,
                                     const LinkabilityConfig& config);

struct PerSpeakerLinkability {
  std::map<std::string, double> values;
  // Trial speakers that had no mated scores.
  std::vector<std::string> omitted;
  bool degenerate_range = false;
};

/// Densities from all scores; each speaker averages over its own mated scores.
PerSpeakerLinkability linkability_per_speaker(const ScoreSet& scores,
                                              const LinkabilityConfig& config);

/// Equal error rate in percent.
double compute_eer(std::span<const double> mated, std::span<const double> nonmated);
double compute_eer(const ScoreSet& scores);

struct PrivacyReport {
  double eer_percent = 0.0;
  double d_sys = 0.0;
  std::map<std::string, double> per_speaker_d_sys;
  std::vector<std::string> flags;
  std::size_t n_mated = 0;
  std::size_t n_nonmated = 0;
};

PrivacyReport privacy_report(const ScoreSet& scores, const LinkabilityConfig& config);

}  // namespace anonbench
