#ifndef AUTOPREF_AUTOPREF_H
#define AUTOPREF_AUTOPREF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define AP_API __declspec(dllexport)
#else
#define AP_API __attribute__((visibility("default")))
#endif

typedef enum ap_status {
  AP_OK = 0,
  AP_ERR_INVALID_ARGUMENT = 1,
  AP_ERR_PARSE = 2,
  AP_ERR_IO = 3,
  AP_ERR_CONFIG = 4,
  AP_ERR_DIVERGED = 5,
  AP_ERR_INTERNAL = 6
} ap_status;

/* Opaque experiment configuration. */
typedef struct ap_config ap_config;

/* Message for the most recent failure on the calling thread; "" after success.
   The pointer stays valid until the next call on that thread. */
AP_API const char* ap_last_error(void);

/* Releases strings returned through char** out-parameters. NULL is ignored. */
AP_API void ap_string_free(char* s);

AP_API const char* ap_status_name(ap_status status);

/* Directory holding bundled layouts and automata. */
AP_API ap_status ap_set_data_dir(const char* path);

/* Newline-separated environment names. */
AP_API ap_status ap_list_envs(char** out);

AP_API ap_status ap_config_new(ap_config** out);
AP_API ap_status ap_config_parse(const char* text, ap_config** out);
AP_API ap_status ap_config_load(const char* path, ap_config** out);
AP_API void ap_config_free(ap_config* config);

/* Sets one key, written as "section.key" (for example "experiment.env").
   The configuration is left unchanged on failure. */
AP_API ap_status ap_config_set(ap_config* config, const char* key, const char* value);
AP_API ap_status ap_config_get(const ap_config* config, const char* key, char** out);
AP_API ap_status ap_config_set_seeds(ap_config* config, const uint64_t* seeds, size_t count);

/* Effective configuration as INI text. */
AP_API ap_status ap_config_format(const ap_config* config, char** out);

/* Runs every (method, seed) pair and writes CSVs, snapshots and summary.txt
   under experiment.output. *all_ok is 0 if any run diverged. */
AP_API ap_status ap_run_experiment(const ap_config* config, char** summary, int* all_ok);

/* Trains a teacher on experiment.env and writes its Q-table snapshot. */
AP_API ap_status ap_train_teacher(const ap_config* config, uint64_t seed, const char* qtable_path);

/* Collects experience from a saved teacher and writes distilled transition values. */
AP_API ap_status ap_distill(const ap_config* config, uint64_t seed, const char* teacher_path,
                            const char* values_path);

typedef struct ap_validation_summary {
  double pearson_reward;       /* NaN when undefined */
  double spearman_subgoals;    /* NaN when undefined */
  double above_median_success;
  double below_median_success;
} ap_validation_summary;

/* Scores a mixed trajectory pool with the given transition values.
   `summary` may be NULL. */
AP_API ap_status ap_validate(const ap_config* config, uint64_t seed, const char* values_path,
                             char** report, ap_validation_summary* summary);

/* Convergence check on experiment.env with the [theorem] settings. */
AP_API ap_status ap_theorem_check(const ap_config* config, uint64_t seed, char** report,
                                  int* passed);

#ifdef __cplusplus
}
#endif

#endif
