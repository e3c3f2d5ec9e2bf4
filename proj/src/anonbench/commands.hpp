#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "anonbench/config.hpp"
#include "anonbench/simulation.hpp"

namespace anonbench {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kLockFile = ".anonbench.lock";

struct CommandOptions {
  // Import pool/embeddings/f0 CSVs from here instead of generating a population.
  std::optional<std::filesystem::path> data_dir;
  std::size_t threads = 1;
};

enum class ReportFormat { kTable, kJson, kCsv };
ReportFormat parse_report_format(const std::string& name);

/// Writes pool.csv, embeddings.csv, f0.csv and config.json.
void cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir);

/// One scenario: scores.csv, report.json (with the original-speech baseline),
/// anonymized_f0.csv and config.json.
void cmd_run(const RunConfig& config, const std::filesystem::path& out_dir,
             const CommandOptions& options = {});

/// Constant-target sweep: sweep.json, radar.csv and config.json.
void cmd_sweep(const RunConfig& config, const std::filesystem::path& out_dir,
               const CommandOptions& options = {});

/// Summarizes a run or sweep directory as original vs anonymized rows by
/// gender. Writes summary.{txt,json,csv} and returns the same text.
std::string cmd_report(const std::filesystem::path& dir, ReportFormat format);

struct ManifestFile {
  std::string path;
  std::uintmax_t size = 0;
  std::string fnv1a64;
};

struct Manifest {
  std::string command;
  std::string config_hash;
  std::string tool_version;
  std::string started_at;
  std::string finished_at;
  std::vector<ManifestFile> files;
};

Manifest read_manifest(const std::filesystem::path& dir);
/// True iff every listed file exists with its recorded size.
bool validate_manifest(const std::filesystem::path& dir, std::string* problem = nullptr);

nlohmann::json report_to_json(const PrivacyReport& report,
                              const std::map<Gender, GenderMetrics>& by_gender);
nlohmann::json sweep_to_json(const SweepResult& sweep);
/// trial_speaker,target_speaker,d_sys,original_d_sys; speaker-major.
std::string radar_csv(const SweepResult& sweep);

/// Loads the dataset for a command: imported from options.data_dir or generated.
EvalDataset load_or_generate(const RunConfig& config, const CommandOptions& options);

}  // namespace anonbench
