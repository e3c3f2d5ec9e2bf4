#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "anonbench/common.hpp"

namespace anonbench {

/// Two-covariance PLDA: x = mean + y + e, y ~ N(0, between), e ~ N(0, within).
///
/// Scoring constants are derived once at construction; a model is immutable
/// afterwards and can be shared across threads.
class PldaModel {
 public:
  /// Both covariances must be symmetric positive definite.
  PldaModel(Eigen::VectorXd mean, Eigen::MatrixXd between_cov, Eigen::MatrixXd within_cov);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& between_cov() const noexcept { return between_; }
  const Eigen::MatrixXd& within_cov() const noexcept { return within_; }

  /// ln p(a, b | same) - ln p(a, b | different). Symmetric in a and b.
  double score(const Embedding& enroll, const Embedding& test) const;

  /// Enrollment-side factorization for scoring one model against many tests.
  struct EnrollTerms {
    Eigen::VectorXd cross;  // C (a - mean)
    double quad = 0.0;      // 1/2 (a - mean)' M (a - mean)
  };
  EnrollTerms enroll_terms(const Embedding& enroll) const;
  double test_quad(const Embedding& test) const;
  double score(const EnrollTerms& enroll, const Embedding& test, double test_quad) const;

 private:
  Eigen::VectorXd centered(const Embedding& x) const;

  Eigen::VectorXd mean_;
  Eigen::MatrixXd between_;
  Eigen::MatrixXd within_;
  // LLR = 1/2 a'Ma + 1/2 b'Mb - a'Cb + offset (a, b centered).
  Eigen::MatrixXd quad_;
  Eigen::MatrixXd cross_;
  double offset_ = 0.0;
};

struct LabeledEmbedding {
  std::string speaker_id;
  Embedding embedding;
};

/// Moment estimate of a PLDA model. `ridge` defaults to 1e-6 * trace / dim of
/// the unregularized total covariance.
PldaModel estimate_plda(const std::vector<LabeledEmbedding>& data,
                        std::optional<double> ridge = std::nullopt);

/// Cosine similarity in [-1, 1]; throws on zero-norm input.
double cosine_score(const Embedding& enroll, const Embedding& test);

struct CosineBackend {};
using AsvBackend = std::variant<CosineBackend, PldaModel>;

struct TrialEntry {
  std::string enroll_speaker_id;
  std::string trial_utt_id;
  std::string trial_speaker_id;
  bool is_mated = false;

  friend bool operator==(const TrialEntry&, const TrialEntry&) = default;
};

class TrialList {
 public:
  TrialList() = default;
  /// Validates label consistency and uniqueness of (enroll, trial_utt) pairs.
  explicit TrialList(std::vector<TrialEntry> entries);

  const std::vector<TrialEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<TrialEntry> entries_;
};

struct TrialUtterance {
  std::string utt_id;
  std::string speaker_id;
  Embedding embedding;
};

/// Every enrollment speaker against every trial utterance, enrollment-major.
TrialList full_cross_trials(const std::vector<std::string>& enroll_speakers,
                            const std::vector<TrialUtterance>& trials);

struct ScoredTrial {
  TrialEntry entry;
  double score = 0.0;
};

class ScoreSet {
 public:
  ScoreSet() = default;
  explicit ScoreSet(std::vector<ScoredTrial> scores);

  const std::vector<ScoredTrial>& scores() const noexcept { return scores_; }
  std::size_t size() const noexcept { return scores_.size(); }
  std::vector<double> mated() const;
  std::vector<double> nonmated() const;
  /// Mated scores keyed by trial speaker.
  std::map<std::string, std::vector<double>> mated_by_speaker() const;
  /// Trial speakers that appear in the set (mated or not).
  std::vector<std::string> trial_speakers() const;

  /// Subset whose entries satisfy `keep`.
  template <typename Pred>
  ScoreSet filter(Pred keep) const {
    std::vector<ScoredTrial> out;
    for (const auto& s : scores_)
      if (keep(s.entry)) out.push_back(s);
    return ScoreSet(std::move(out));
  }

 private:
  std::vector<ScoredTrial> scores_;
};

/// Averages each speaker's enrollment embeddings, then scores every entry of
/// the trial list with the backend. Output order follows the trial list.
ScoreSet score_trials(const AsvBackend& backend,
                      const std::map<std::string, std::vector<Embedding>>& enrollment,
                      const std::vector<TrialUtterance>& trials, const TrialList& trial_list);

}  // namespace anonbench
