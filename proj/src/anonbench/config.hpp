#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "anonbench/simulation.hpp"

namespace anonbench {

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kWhiteBox;
  // Unset fields resolve from `kind`: white -> constant/anonymized,
  // grey -> permanent/anonymized, black -> permanent/original.
  std::optional<StrategyKind> strategy;
  std::optional<AsvTraining> asv_training;
  // Pool speaker used by the constant strategy; empty selects one with K-Means.
  std::string constant_target;
  BackendKind backend = BackendKind::kPlda;
  DistanceMetric metric = DistanceMetric::kCosine;
  // 0 means "scale to the pool".
  std::size_t far_count = 0;
  std::size_t pick_count = 0;
  ConversionParams conversion;
  double leakage_jitter = 0.0;

  StrategyKind resolved_strategy() const;
  AsvTraining resolved_training() const;
};

struct SweepConfig {
  std::size_t per_gender = 20;
  ConversionParams conversion;
};

struct IoConfig {
  std::string output_dir = "anonbench_out";
  std::vector<std::string> formats{"json", "csv"};

  bool wants(const std::string& format) const;
};

struct RunConfig {
  PopulationConfig population;
  ScenarioConfig scenario;
  SweepConfig sweep;
  LinkabilityConfig metrics;
  IoConfig io;
  std::uint64_t master_seed = 1;

  /// Throws Error(kConfig) naming the violated field.
  void validate() const;
  /// Population config with the master seed applied.
  PopulationConfig population_config() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Strict: unknown keys and wrongly typed values are rejected.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON serialization, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Builds the scenario for a dataset; resolves the constant target from the pool.
ScenarioSpec make_scenario_spec(const RunConfig& config, const Pool& pool);

std::uint64_t scenario_seed(const RunConfig& config);
std::uint64_t sweep_seed(const RunConfig& config);

}  // namespace anonbench
