#include "anonbench/asv.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "anonbench/embedding_space.hpp"

namespace anonbench {
namespace {

Eigen::VectorXd to_eigen(const Embedding& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.dim()));
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  require(llt.info() == Eigen::Success, ErrorCode::kNumeric,
          std::string(what) + " is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

bool is_symmetric(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

}  // namespace

PldaModel::PldaModel(Eigen::VectorXd mean, Eigen::MatrixXd between_cov,
                     Eigen::MatrixXd within_cov)
    : mean_(std::move(mean)), between_(std::move(between_cov)), within_(std::move(within_cov)) {
  const auto d = mean_.size();
  require(d > 0, ErrorCode::kInvalidArgument, "PLDA model has dimension 0");
  require(between_.rows() == d && between_.cols() == d && within_.rows() == d &&
              within_.cols() == d,
          ErrorCode::kDimensionMismatch, "PLDA covariance shapes do not match the mean");
  require(mean_.allFinite() && between_.allFinite() && within_.allFinite(), ErrorCode::kNumeric,
          "PLDA parameters must be finite");
  require(is_symmetric(between_) && is_symmetric(within_), ErrorCode::kNumeric,
          "PLDA covariances must be symmetric");
  checked_llt(between_, "PLDA between-speaker covariance");
  checked_llt(within_, "PLDA within-speaker covariance");

  // Same-speaker joint covariance [[T, B], [B, T]] with T = B + W. Its inverse
  // is [[A, C'], [C', A]], A = (T - B T^-1 B)^-1, C' = -T^-1 B A.
  const Eigen::MatrixXd total = between_ + within_;
  const auto total_llt = checked_llt(total, "PLDA total covariance");
  const Eigen::MatrixXd total_inv = total_llt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd schur = total - between_ * total_inv * between_;
  schur = 0.5 * (schur + schur.transpose());
  const auto schur_llt = checked_llt(schur, "PLDA Schur complement");
  const Eigen::MatrixXd a = schur_llt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd c = -total_inv * between_ * a;

  quad_ = total_inv - a;
  quad_ = 0.5 * (quad_ + quad_.transpose());
  cross_ = 0.5 * (c + c.transpose());
  offset_ = 0.5 * (log_det(total_llt) - log_det(schur_llt));
}

Eigen::VectorXd PldaModel::centered(const Embedding& x) const {
  require(x.dim() == dim(), ErrorCode::kDimensionMismatch,
          "embedding dim " + std::to_string(x.dim()) + " does not match PLDA dim " +
              std::to_string(dim()));
  return to_eigen(x) - mean_;
}

double PldaModel::score(const Embedding& enroll, const Embedding& test) const {
  const Eigen::VectorXd a = centered(enroll);
  const Eigen::VectorXd b = centered(test);
  return 0.5 * a.dot(quad_ * a) + 0.5 * b.dot(quad_ * b) - a.dot(cross_ * b) + offset_;
}

PldaModel::EnrollTerms PldaModel::enroll_terms(const Embedding& enroll) const {
  const Eigen::VectorXd a = centered(enroll);
  return {cross_ * a, 0.5 * a.dot(quad_ * a)};
}

double PldaModel::test_quad(const Embedding& test) const {
  const Eigen::VectorXd b = centered(test);
  return 0.5 * b.dot(quad_ * b);
}

double PldaModel::score(const EnrollTerms& enroll, const Embedding& test,
                        double test_quad) const {
  const Eigen::VectorXd b = centered(test);
  return enroll.quad + test_quad - enroll.cross.dot(b) + offset_;
}

PldaModel estimate_plda(const std::vector<LabeledEmbedding>& data, std::optional<double> ridge) {
  require(!data.empty(), ErrorCode::kInvalidArgument, "estimate_plda: no data");
  const auto d = static_cast<Eigen::Index>(data.front().embedding.dim());
  require(d > 0, ErrorCode::kInvalidArgument, "estimate_plda: dimension 0");

  std::map<std::string, std::vector<const Embedding*>> by_speaker;
  for (const auto& item : data) {
    require(item.embedding.dim() == static_cast<std::size_t>(d), ErrorCode::kDimensionMismatch,
            "estimate_plda: inconsistent embedding dimensions");
    require(item.embedding.all_finite(), ErrorCode::kNumeric,
            "estimate_plda: non-finite embedding");
    by_speaker[item.speaker_id].push_back(&item.embedding);
  }
  const auto n_speakers = static_cast<double>(by_speaker.size());
  const auto n_total = static_cast<double>(data.size());
  require(by_speaker.size() >= 2, ErrorCode::kInvalidArgument,
          "estimate_plda requires at least 2 speakers");
  require(data.size() > by_speaker.size(), ErrorCode::kInvalidArgument,
          "estimate_plda: every speaker has a single utterance; within-speaker "
          "covariance is undefined");

  Eigen::VectorXd global = Eigen::VectorXd::Zero(d);
  for (const auto& item : data) global += to_eigen(item.embedding);
  global /= n_total;

  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(d, d);
  for (const auto& [id, utts] : by_speaker) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    for (const auto* e : utts) mu += to_eigen(*e);
    mu /= static_cast<double>(utts.size());
    for (const auto* e : utts) {
      const Eigen::VectorXd r = to_eigen(*e) - mu;
      within.selfadjointView<Eigen::Lower>().rankUpdate(r);
    }
    between.selfadjointView<Eigen::Lower>().rankUpdate(mu - global);
  }
  within = within.selfadjointView<Eigen::Lower>();
  between = between.selfadjointView<Eigen::Lower>();
  within /= (n_total - n_speakers);
  between /= (n_speakers - 1.0);
  between -= within / (n_total / n_speakers);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(between);
  require(eig.info() == Eigen::Success, ErrorCode::kNumeric,
          "estimate_plda: eigendecomposition failed");
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  between = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  between = 0.5 * (between + between.transpose());

  double reg = 0.0;
  if (ridge) {
    require(*ridge > 0.0 && std::isfinite(*ridge), ErrorCode::kInvalidArgument,
            "estimate_plda: ridge must be > 0");
    reg = *ridge;
  } else {
    reg = 1e-6 * (within.trace() + between.trace()) / static_cast<double>(d);
    if (!(reg > 0.0)) reg = 1e-12;
  }
  within += reg * Eigen::MatrixXd::Identity(d, d);
  between += reg * Eigen::MatrixXd::Identity(d, d);
  return PldaModel(std::move(global), std::move(between), std::move(within));
}

double cosine_score(const Embedding& enroll, const Embedding& test) {
  return 1.0 - cosine_distance(enroll, test);
}

TrialList::TrialList(std::vector<TrialEntry> entries) : entries_(std::move(entries)) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : entries_) {
    require(e.is_mated == (e.enroll_speaker_id == e.trial_speaker_id),
            ErrorCode::kInvalidArgument,
            "trial (" + e.enroll_speaker_id + ", " + e.trial_utt_id +
                "): is_mated disagrees with speaker ids");
    require(seen.emplace(e.enroll_speaker_id, e.trial_utt_id).second,
            ErrorCode::kInvalidArgument,
            "duplicate trial (" + e.enroll_speaker_id + ", " + e.trial_utt_id + ")");
  }
}

TrialList full_cross_trials(const std::vector<std::string>& enroll_speakers,
                            const std::vector<TrialUtterance>& trials) {
  std::vector<TrialEntry> entries;
  entries.reserve(enroll_speakers.size() * trials.size());
  for (const auto& spk : enroll_speakers)
    for (const auto& t : trials)
      entries.push_back({spk, t.utt_id, t.speaker_id, spk == t.speaker_id});
  return TrialList(std::move(entries));
}

ScoreSet::ScoreSet(std::vector<ScoredTrial> scores) : scores_(std::move(scores)) {
  for (const auto& s : scores_)
    require(std::isfinite(s.score), ErrorCode::kNumeric,
            "non-finite score for trial (" + s.entry.enroll_speaker_id + ", " +
                s.entry.trial_utt_id + ")");
}

std::vector<double> ScoreSet::mated() const {
  std::vector<double> out;
  for (const auto& s : scores_)
    if (s.entry.is_mated) out.push_back(s.score);
  return out;
}

std::vector<double> ScoreSet::nonmated() const {
  std::vector<double> out;
  for (const auto& s : scores_)
    if (!s.entry.is_mated) out.push_back(s.score);
  return out;
}

std::map<std::string, std::vector<double>> ScoreSet::mated_by_speaker() const {
  std::map<std::string, std::vector<double>> out;
  for (const auto& s : scores_)
    if (s.entry.is_mated) out[s.entry.trial_speaker_id].push_back(s.score);
  return out;
}

std::vector<std::string> ScoreSet::trial_speakers() const {
  std::set<std::string> ids;
  for (const auto& s : scores_) ids.insert(s.entry.trial_speaker_id);
  return {ids.begin(), ids.end()};
}

ScoreSet score_trials(const AsvBackend& backend,
                      const std::map<std::string, std::vector<Embedding>>& enrollment,
                      const std::vector<TrialUtterance>& trials, const TrialList& trial_list) {
  std::map<std::string, Embedding> models;
  for (const auto& [spk, utts] : enrollment) {
    require(!utts.empty(), ErrorCode::kInvalidArgument,
            "enrollment speaker '" + spk + "' has no utterances");
    models.emplace(spk, mean_embedding(utts));
  }
  std::unordered_map<std::string, const TrialUtterance*> by_utt;
  for (const auto& t : trials) {
    require(by_utt.emplace(t.utt_id, &t).second, ErrorCode::kInvalidArgument,
            "duplicate trial utterance '" + t.utt_id + "'");
  }

  std::vector<ScoredTrial> out;
  out.reserve(trial_list.size());
  const auto* plda = std::get_if<PldaModel>(&backend);
  std::map<std::string, PldaModel::EnrollTerms> enroll_terms;
  std::unordered_map<std::string, double> test_quads;
  if (plda) {
    for (const auto& [spk, m] : models) enroll_terms.emplace(spk, plda->enroll_terms(m));
    for (const auto& t : trials) test_quads.emplace(t.utt_id, plda->test_quad(t.embedding));
  }

  for (const auto& e : trial_list.entries()) {
    const auto m = models.find(e.enroll_speaker_id);
    require(m != models.end(), ErrorCode::kInvalidArgument,
            "trial list references unknown enrollment speaker '" + e.enroll_speaker_id + "'");
    const auto t = by_utt.find(e.trial_utt_id);
    require(t != by_utt.end(), ErrorCode::kInvalidArgument,
            "trial list references unknown trial utterance '" + e.trial_utt_id + "'");
    require(t->second->speaker_id == e.trial_speaker_id, ErrorCode::kInvalidArgument,
            "trial utterance '" + e.trial_utt_id + "' belongs to '" + t->second->speaker_id +
                "', not '" + e.trial_speaker_id + "'");
    double s;
    if (plda)
      s = plda->score(enroll_terms.at(e.enroll_speaker_id), t->second->embedding,
                      test_quads.at(e.trial_utt_id));
    else
      s = cosine_score(m->second, t->second->embedding);
    out.push_back({e, s});
  }
  return ScoreSet(std::move(out));
}

}  // namespace anonbench
