#ifndef ANONBENCH_ANONBENCH_H
#define ANONBENCH_ANONBENCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ANB_BUILDING)
#    define ANB_API __declspec(dllexport)
#  else
#    define ANB_API __declspec(dllimport)
#  endif
#else
#  define ANB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum anb_status {
  ANB_OK = 0,
  ANB_ERR_INVALID_ARGUMENT = 1,
  ANB_ERR_DIMENSION_MISMATCH = 2,
  ANB_ERR_CONFIG = 3,
  ANB_ERR_IO = 4,
  ANB_ERR_PARSE = 5,
  ANB_ERR_NUMERIC = 6,
  ANB_ERR_STATE = 7,
  ANB_ERR_INTERNAL = 99
} anb_status;

typedef enum anb_scenario {
  ANB_SCENARIO_BLACK = 0,
  ANB_SCENARIO_GREY = 1,
  ANB_SCENARIO_WHITE = 2
} anb_scenario;

typedef enum anb_report_format {
  ANB_REPORT_TABLE = 0,
  ANB_REPORT_JSON = 1,
  ANB_REPORT_CSV = 2
} anb_report_format;

typedef struct anb_config anb_config;
typedef struct anb_dataset anb_dataset;
typedef struct anb_report anb_report;

ANB_API const char* anb_version(void);

/* Message of the last failed call on this thread; empty if none. */
ANB_API const char* anb_last_error(void);
ANB_API const char* anb_status_name(anb_status status);

/* Strings returned through char** out-parameters are released with this. */
ANB_API void anb_string_free(char* s);

/* ---- configuration ---- */

ANB_API anb_status anb_config_default(anb_config** out);
ANB_API anb_status anb_config_parse(const char* json_text, anb_config** out);
ANB_API anb_status anb_config_load(const char* path, anb_config** out);
ANB_API anb_status anb_config_save(const anb_config* config, const char* path);
ANB_API anb_status anb_config_to_json(const anb_config* config, char** out_json);
ANB_API anb_status anb_config_hash(const anb_config* config, char** out_hex);
ANB_API anb_status anb_config_validate(const anb_config* config);
ANB_API void anb_config_free(anb_config* config);

ANB_API anb_status anb_config_set_seed(anb_config* config, uint64_t seed);
ANB_API anb_status anb_config_set_scenario(anb_config* config, anb_scenario scenario);
/* Applies to both the single scenario and the sweep. */
ANB_API anb_status anb_config_set_leakage_beta(anb_config* config, double beta);
ANB_API anb_status anb_config_set_noise_sigma(anb_config* config, double sigma);
ANB_API anb_status anb_config_set_per_gender(anb_config* config, size_t per_gender);
ANB_API anb_status anb_config_set_output_dir(anb_config* config, const char* dir);
ANB_API anb_status anb_config_get_output_dir(const anb_config* config, char** out_dir);

/* ---- commands ---- */

/* data_dir may be NULL to generate the population from the config. */
ANB_API anb_status anb_cmd_generate(const anb_config* config, const char* out_dir);
ANB_API anb_status anb_cmd_run(const anb_config* config, const char* out_dir,
                               const char* data_dir, size_t threads);
ANB_API anb_status anb_cmd_sweep(const anb_config* config, const char* out_dir,
                                 const char* data_dir, size_t threads);
ANB_API anb_status anb_cmd_report(const char* dir, anb_report_format format, char** out_text);

/* ---- datasets ---- */

ANB_API anb_status anb_dataset_generate(const anb_config* config, anb_dataset** out);
ANB_API anb_status anb_dataset_import(const char* dir, size_t expected_dim, anb_dataset** out);
ANB_API anb_status anb_dataset_write(const anb_dataset* dataset, const char* dir);
ANB_API size_t anb_dataset_dim(const anb_dataset* dataset);
ANB_API size_t anb_dataset_pool_size(const anb_dataset* dataset);
ANB_API void anb_dataset_free(anb_dataset* dataset);

/* Runs the configured scenario on a dataset in memory. */
ANB_API anb_status anb_scenario_run(const anb_config* config, const anb_dataset* dataset,
                                    anb_report** out);
ANB_API double anb_report_eer_percent(const anb_report* report);
ANB_API double anb_report_d_sys(const anb_report* report);
ANB_API size_t anb_report_n_mated(const anb_report* report);
ANB_API size_t anb_report_n_nonmated(const anb_report* report);
ANB_API anb_status anb_report_to_json(const anb_report* report, char** out_json);
ANB_API void anb_report_free(anb_report* report);

/* ---- metrics on raw score arrays ---- */

ANB_API anb_status anb_compute_eer(const double* mated, size_t n_mated, const double* nonmated,
                                   size_t n_nonmated, double* out_eer_percent);
ANB_API anb_status anb_linkability_global(const double* mated, size_t n_mated,
                                          const double* nonmated, size_t n_nonmated,
                                          size_t n_bins, double omega, double* out_d_sys);

#ifdef __cplusplus
}
#endif

#endif
