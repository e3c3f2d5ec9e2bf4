#include "anonbench/anonbench.h"

#include <cstring>
#include <new>
#include <string>

#include "anonbench/commands.hpp"
#include "anonbench/config.hpp"
#include "anonbench/dataset_io.hpp"
#include "anonbench/privacy_metrics.hpp"
#include "anonbench/simulation.hpp"

struct anb_config {
  anonbench::RunConfig value;
};

struct anb_dataset {
  anonbench::EvalDataset value;
};

struct anb_report {
  anonbench::ScenarioOutcome value;
};

namespace {

thread_local std::string g_last_error;

anb_status to_status(anonbench::ErrorCode code) {
  using anonbench::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return ANB_ERR_INVALID_ARGUMENT;
    case ErrorCode::kDimensionMismatch: return ANB_ERR_DIMENSION_MISMATCH;
    case ErrorCode::kConfig: return ANB_ERR_CONFIG;
    case ErrorCode::kIo: return ANB_ERR_IO;
    case ErrorCode::kParse: return ANB_ERR_PARSE;
    case ErrorCode::kNumeric: return ANB_ERR_NUMERIC;
    case ErrorCode::kState: return ANB_ERR_STATE;
  }
  return ANB_ERR_INTERNAL;
}

template <typename F>
anb_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return ANB_OK;
  } catch (const anonbench::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return ANB_ERR_INTERNAL;
}

void need(const void* p, const char* name) {
  if (p == nullptr)
    anonbench::fail(anonbench::ErrorCode::kInvalidArgument, std::string(name) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

anonbench::CommandOptions options_from(const char* data_dir, size_t threads) {
  anonbench::CommandOptions opts;
  if (data_dir != nullptr) opts.data_dir = data_dir;
  opts.threads = threads == 0 ? 1 : threads;
  return opts;
}

}  // namespace

extern "C" {

const char* anb_version(void) { return anonbench::kToolVersion; }

const char* anb_last_error(void) { return g_last_error.c_str(); }

const char* anb_status_name(anb_status status) {
  switch (status) {
    case ANB_OK: return "ok";
    case ANB_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case ANB_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case ANB_ERR_CONFIG: return "config_error";
    case ANB_ERR_IO: return "io_error";
    case ANB_ERR_PARSE: return "parse_error";
    case ANB_ERR_NUMERIC: return "numeric_error";
    case ANB_ERR_STATE: return "state_error";
    case ANB_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

void anb_string_free(char* s) { delete[] s; }

anb_status anb_config_default(anb_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new anb_config{};
  });
}

anb_status anb_config_parse(const char* json_text, anb_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = new anb_config{anonbench::parse_config(json_text)};
  });
}

anb_status anb_config_load(const char* path, anb_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new anb_config{anonbench::load_config(path)};
  });
}

anb_status anb_config_save(const anb_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    anonbench::save_config(config->value, path);
  });
}

anb_status anb_config_to_json(const anb_config* config, char** out_json) {
  return guarded([&] {
    need(config, "config");
    need(out_json, "out_json");
    *out_json = dup_string(anonbench::to_json(config->value).dump(2));
  });
}

anb_status anb_config_hash(const anb_config* config, char** out_hex) {
  return guarded([&] {
    need(config, "config");
    need(out_hex, "out_hex");
    *out_hex = dup_string(anonbench::config_hash(config->value));
  });
}

anb_status anb_config_validate(const anb_config* config) {
  return guarded([&] {
    need(config, "config");
    config->value.validate();
  });
}

void anb_config_free(anb_config* config) { delete config; }

anb_status anb_config_set_seed(anb_config* config, uint64_t seed) {
  return guarded([&] {
    need(config, "config");
    config->value.master_seed = seed;
  });
}

anb_status anb_config_set_scenario(anb_config* config, anb_scenario scenario) {
  return guarded([&] {
    need(config, "config");
    using anonbench::ScenarioKind;
    switch (scenario) {
      case ANB_SCENARIO_BLACK: config->value.scenario.kind = ScenarioKind::kBlackBox; return;
      case ANB_SCENARIO_GREY: config->value.scenario.kind = ScenarioKind::kGreyBox; return;
      case ANB_SCENARIO_WHITE: config->value.scenario.kind = ScenarioKind::kWhiteBox; return;
    }
    anonbench::fail(anonbench::ErrorCode::kInvalidArgument, "unknown scenario");
  });
}

anb_status anb_config_set_leakage_beta(anb_config* config, double beta) {
  return guarded([&] {
    need(config, "config");
    anonbench::ConversionParams probe = config->value.scenario.conversion;
    probe.leakage_beta = beta;
    probe.validate();
    config->value.scenario.conversion.leakage_beta = beta;
    config->value.sweep.conversion.leakage_beta = beta;
  });
}

anb_status anb_config_set_noise_sigma(anb_config* config, double sigma) {
  return guarded([&] {
    need(config, "config");
    anonbench::ConversionParams probe = config->value.scenario.conversion;
    probe.synthesis_noise_sigma = sigma;
    probe.validate();
    config->value.scenario.conversion.synthesis_noise_sigma = sigma;
    config->value.sweep.conversion.synthesis_noise_sigma = sigma;
  });
}

anb_status anb_config_set_per_gender(anb_config* config, size_t per_gender) {
  return guarded([&] {
    need(config, "config");
    anonbench::require(per_gender > 0, anonbench::ErrorCode::kInvalidArgument,
                       "per_gender must be positive");
    config->value.sweep.per_gender = per_gender;
  });
}

anb_status anb_config_set_output_dir(anb_config* config, const char* dir) {
  return guarded([&] {
    need(config, "config");
    need(dir, "dir");
    config->value.io.output_dir = dir;
  });
}

anb_status anb_config_get_output_dir(const anb_config* config, char** out_dir) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    *out_dir = dup_string(config->value.io.output_dir);
  });
}

anb_status anb_cmd_generate(const anb_config* config, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    anonbench::cmd_generate(config->value, out_dir);
  });
}

anb_status anb_cmd_run(const anb_config* config, const char* out_dir, const char* data_dir,
                       size_t threads) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    anonbench::cmd_run(config->value, out_dir, options_from(data_dir, threads));
  });
}

anb_status anb_cmd_sweep(const anb_config* config, const char* out_dir, const char* data_dir,
                         size_t threads) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    anonbench::cmd_sweep(config->value, out_dir, options_from(data_dir, threads));
  });
}

anb_status anb_cmd_report(const char* dir, anb_report_format format, char** out_text) {
  return guarded([&] {
    need(dir, "dir");
    anonbench::ReportFormat f = anonbench::ReportFormat::kTable;
    switch (format) {
      case ANB_REPORT_TABLE: f = anonbench::ReportFormat::kTable; break;
      case ANB_REPORT_JSON: f = anonbench::ReportFormat::kJson; break;
      case ANB_REPORT_CSV: f = anonbench::ReportFormat::kCsv; break;
      default: anonbench::fail(anonbench::ErrorCode::kInvalidArgument, "unknown report format");
    }
    const std::string text = anonbench::cmd_report(dir, f);
    if (out_text != nullptr) *out_text = dup_string(text);
  });
}

anb_status anb_dataset_generate(const anb_config* config, anb_dataset** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    config->value.validate();
    *out = new anb_dataset{anonbench::generate_population(config->value.population_config())};
  });
}

anb_status anb_dataset_import(const char* dir, size_t expected_dim, anb_dataset** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    std::optional<std::size_t> dim;
    if (expected_dim > 0) dim = expected_dim;
    *out = new anb_dataset{anonbench::import_embeddings(dir, dim)};
  });
}

anb_status anb_dataset_write(const anb_dataset* dataset, const char* dir) {
  return guarded([&] {
    need(dataset, "dataset");
    need(dir, "dir");
    anonbench::write_dataset(dataset->value, dir);
  });
}

size_t anb_dataset_dim(const anb_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->value.dim();
}

size_t anb_dataset_pool_size(const anb_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->value.pool.size();
}

void anb_dataset_free(anb_dataset* dataset) { delete dataset; }

anb_status anb_scenario_run(const anb_config* config, const anb_dataset* dataset,
                            anb_report** out) {
  return guarded([&] {
    need(config, "config");
    need(dataset, "dataset");
    need(out, "out");
    config->value.validate();
    const auto spec = anonbench::make_scenario_spec(config->value, dataset->value.pool);
    *out = new anb_report{anonbench::run_scenario(dataset->value, spec, config->value.metrics,
                                                  anonbench::scenario_seed(config->value))};
  });
}

double anb_report_eer_percent(const anb_report* report) {
  return report == nullptr ? 0.0 : report->value.report.eer_percent;
}

double anb_report_d_sys(const anb_report* report) {
  return report == nullptr ? 0.0 : report->value.report.d_sys;
}

size_t anb_report_n_mated(const anb_report* report) {
  return report == nullptr ? 0 : report->value.report.n_mated;
}

size_t anb_report_n_nonmated(const anb_report* report) {
  return report == nullptr ? 0 : report->value.report.n_nonmated;
}

anb_status anb_report_to_json(const anb_report* report, char** out_json) {
  return guarded([&] {
    need(report, "report");
    need(out_json, "out_json");
    *out_json = dup_string(
        anonbench::report_to_json(report->value.report, report->value.by_gender).dump(2));
  });
}

void anb_report_free(anb_report* report) { delete report; }

anb_status anb_compute_eer(const double* mated, size_t n_mated, const double* nonmated,
                           size_t n_nonmated, double* out_eer_percent) {
  return guarded([&] {
    need(out_eer_percent, "out_eer_percent");
    if (n_mated > 0) need(mated, "mated");
    if (n_nonmated > 0) need(nonmated, "nonmated");
    *out_eer_percent = anonbench::compute_eer({mated, n_mated}, {nonmated, n_nonmated});
  });
}

anb_status anb_linkability_global(const double* mated, size_t n_mated, const double* nonmated,
                                  size_t n_nonmated, size_t n_bins, double omega,
                                  double* out_d_sys) {
  return guarded([&] {
    need(out_d_sys, "out_d_sys");
    if (n_mated > 0) need(mated, "mated");
    if (n_nonmated > 0) need(nonmated, "nonmated");
    anonbench::LinkabilityConfig cfg;
    cfg.n_bins = n_bins;
    cfg.omega = omega;
    cfg.validate();
    *out_d_sys =
        anonbench::linkability_global({mated, n_mated}, {nonmated, n_nonmated}, cfg).value;
  });
}

}  // extern "C"
