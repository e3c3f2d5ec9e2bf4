#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "anonbench/asv.hpp"
#include "anonbench/simulation.hpp"

namespace anonbench {

// File layout of a dataset directory.
inline constexpr const char* kPoolFile = "pool.csv";
inline constexpr const char* kEmbeddingsFile = "embeddings.csv";
inline constexpr const char* kF0File = "f0.csv";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& context);

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// Pool: speaker_id,gender,f0_mean,f0_std,e0,...,e{dim-1}
std::string pool_to_csv(const Pool& pool);
Pool pool_from_csv(const std::string& text, std::optional<std::size_t> expected_dim = {});

// Utterances: partition,speaker_id,gender,utt_id,e0,...,e{dim-1}
std::string embeddings_to_csv(const EvalDataset& dataset);

// F0 contours: utt_id,f0_0,f0_1,... (no header, variable-length rows)
std::string f0_to_csv(const EvalDataset& dataset);
std::string f0_to_csv(const Partition& partition);

void write_dataset(const EvalDataset& dataset, const std::filesystem::path& dir);

/// Reads pool.csv + embeddings.csv (+ f0.csv when present) from `dir`.
/// Rejects duplicate ids, inconsistent dimensions, and a dimension that
/// differs from `expected_dim` when given.
EvalDataset import_embeddings(const std::filesystem::path& dir,
                              std::optional<std::size_t> expected_dim = {});

// Scores: enroll_speaker,trial_utt,trial_speaker,is_mated,score
std::string scores_to_csv(const ScoreSet& scores);
ScoreSet scores_from_csv(const std::string& text);

}  // namespace anonbench
