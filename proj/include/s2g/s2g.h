#ifndef S2G_S2G_H
#define S2G_S2G_H

/* C interface to the seq2grid library: dataset generation, training,
 * evaluation, gradient checks and grid visualization.
 *
 * Every function returning s2g_status stores a message retrievable with
 * s2g_last_error() on failure. The message is thread-local and stays valid
 * until the next failing call on the same thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define S2G_API __declspec(dllexport)
#else
#define S2G_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes of the command-line tool. */
typedef enum s2g_status {
  S2G_OK = 0,
  S2G_ERR_USAGE = 1,   /* bad argument, option or configuration */
  S2G_ERR_DATA = 2,    /* unreadable/invalid files, unknown tokens, refusing to overwrite */
  S2G_ERR_NUMERIC = 3, /* divergence or a failed gradient check */
  S2G_ERR_INTERNAL = 4
} s2g_status;

typedef struct s2g_config s2g_config;
typedef struct s2g_session s2g_session;
typedef struct s2g_report s2g_report;

S2G_API const char* s2g_version(void);
S2G_API const char* s2g_last_error(void);
S2G_API const char* s2g_status_name(s2g_status status);

/* ---- configuration: an ordered set of key=value settings ---- */

S2G_API s2g_status s2g_config_new(s2g_config** out);
S2G_API void s2g_config_free(s2g_config* config);
/* Later settings of the same key replace earlier ones. */
S2G_API s2g_status s2g_config_set(s2g_config* config, const char* key, const char* value);
/* Reads "key=value" lines; blank lines and lines starting with '#' are skipped. */
S2G_API s2g_status s2g_config_load(s2g_config* config, const char* path);
/* Returns NULL when the key is unset. */
S2G_API const char* s2g_config_get(const s2g_config* config, const char* key);

/* ---- reports: text produced by a command ---- */

S2G_API const char* s2g_report_text(const s2g_report* report);
/* Named numeric results, e.g. "id_accuracy", "ood_accuracy", "failed". */
S2G_API s2g_status s2g_report_value(const s2g_report* report, const char* name, double* out);
S2G_API void s2g_report_free(s2g_report* report);

/* Receives progress lines while training. */
typedef void (*s2g_log_fn)(const char* line, void* user);
S2G_API void s2g_set_log(s2g_log_fn fn, void* user);

/* ---- commands ---- */

/* Writes train.tsv, id_test.tsv, ood_test.tsv and dataset.meta into out_dir.
 * Keys: task, split_ranges, seed, layout, width, train_count, id_count,
 * ood_count, babi_dir, babi_task. */
S2G_API s2g_status s2g_generate(const s2g_config* config, const char* out_dir, int force, s2g_report** report);

/* Trains on the dataset directory. Keys: any training setting (grid,
 * hidden, layers, steps, batch, lr, schedule, seed, ...), plus seeds (number
 * of runs) and resume (continue from out_dir/checkpoint.s2g). */
S2G_API s2g_status s2g_train(const s2g_config* config, const char* data_dir, const char* out_dir, int force,
                             s2g_report** report);

/* Evaluates a checkpoint on the ID and OOD splits of a dataset directory. The
 * report is also written to out_file unless it is NULL. */
S2G_API s2g_status s2g_eval(const char* checkpoint, const char* data_dir, const char* out_file, s2g_report** report);

/* Runs the finite-difference suite. Keys: instances, seed, only (comma
 * separated case names), faulty (1 adds the negative-control case). Returns
 * S2G_ERR_NUMERIC, with the table still in *report, when any case fails. */
S2G_API s2g_status s2g_gradcheck(const s2g_config* config, s2g_report** report);

/* Encodes one raw input line and writes <out_prefix>.txt (nearest-token
 * table), <out_prefix>.ppm (slot-norm heatmap) and <out_prefix>.grid (grid
 * dump). Any of the files may be skipped by passing out_prefix NULL; the
 * table is always returned in *report. */
S2G_API s2g_status s2g_visualize(const char* checkpoint, const char* input_line, const char* out_prefix,
                                 s2g_report** report);

/* ---- sessions: a loaded checkpoint ---- */

S2G_API s2g_status s2g_session_load(const char* checkpoint, s2g_session** out);
S2G_API void s2g_session_free(s2g_session* session);
S2G_API uint64_t s2g_session_step(const s2g_session* session);
/* Predicted target (sequence tasks, including the trailing "$") or label
 * (bAbI) for one raw input line. */
S2G_API s2g_status s2g_session_predict(const s2g_session* session, const char* input_line, s2g_report** report);

#ifdef __cplusplus
}
#endif

#endif
