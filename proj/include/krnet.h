/* C interface to the krnet denoising engine.
 *
 * Every entry point returns a krn_status; on any failure a thread-local
 * message is available from krn_last_error(). Strings returned through
 * out-parameters are owned by the caller and must be released with
 * krn_string_free().
 */
#ifndef KRNET_H
#define KRNET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef KRN_API
#if defined(_WIN32)
#define KRN_API __declspec(dllimport)
#else
#define KRN_API __attribute__((visibility("default")))
#endif
#endif

typedef enum krn_status {
    KRN_OK = 0,
    KRN_ERR_INTERNAL = 1,   /* unexpected failure, bad arguments, I/O */
    KRN_ERR_CONFIG = 2,     /* invalid or unparseable configuration */
    KRN_ERR_DATA = 3,       /* image or manifest problems */
    KRN_ERR_CHECKPOINT = 4  /* unreadable or corrupt model file */
} krn_status;

/* Library version string; static storage, do not free. */
KRN_API const char* krn_version(void);

/* Message for the most recent failure on this thread; static storage. */
KRN_API const char* krn_last_error(void);

/* Worker threads for all following calls on any thread. n < 1 resets to the
 * hardware default. Results are bit-identical for every thread count. */
KRN_API krn_status krn_set_num_threads(int n);

KRN_API void krn_string_free(char* s);

/* ---- models ---------------------------------------------------------- */

typedef struct krn_model krn_model;

KRN_API krn_status krn_model_load(const char* path, krn_model** out_model);
KRN_API void krn_model_free(krn_model* model);
KRN_API krn_status krn_model_channels(const krn_model* model, int* out_channels);

/* Reads a PNM image, denoises it, writes the result as PNM. */
KRN_API krn_status krn_denoise_file(krn_model* model, const char* in_path, const char* out_path);

/* ---- training --------------------------------------------------------- */

typedef struct krn_train_options {
    const char* resume_checkpoint; /* NULL for a fresh run */
    int has_seed;
    uint64_t seed;
    int has_epochs;
    int epochs;
} krn_train_options;

/* Called after each epoch; return nonzero to abort the run. */
typedef int (*krn_epoch_fn)(int epoch, double lr, double mean_loss, void* user);

KRN_API krn_status krn_train_run(const char* config_json, const krn_train_options* options,
                                 krn_epoch_fn on_epoch, void* user);

/* ---- evaluation ------------------------------------------------------- */

typedef struct krn_eval_options {
    uint64_t seed;
    int timing;     /* nonzero appends wall-clock time to the report */
    int csv;        /* nonzero renders CSV instead of the text table */
} krn_eval_options;

KRN_API krn_status krn_eval_run(const char* model_path, const char* manifest_path,
                                const char* noise_json, const krn_eval_options* options,
                                char** out_report);

/* ---- gradient checking ------------------------------------------------ */

typedef struct krn_gradcheck_options {
    const char* config_json; /* NULL: built-in mini configuration */
    uint64_t seed;
    double tolerance;
    int rounds;
    const char* inject_error; /* NULL normally; class name to force a failure */
} krn_gradcheck_options;

/* out_pass receives 1 when every class is inside tolerance. A tolerance
 * exceedance is a successful check run (KRN_OK with *out_pass == 0), not an
 * error. */
KRN_API krn_status krn_gradcheck_run(const krn_gradcheck_options* options, char** out_report,
                                     int* out_pass);

/* ---- utilities -------------------------------------------------------- */

KRN_API krn_status krn_synth_data(const char* out_dir, int count, int height, int width,
                                  int channels, uint64_t seed);

/* Trains one model per (variant, block count) cell and writes one
 * validation-loss series (epoch,loss CSV) per cell into the config's out_dir.
 * variants is a comma-separated subset of kr7_3,kr3_3,kr7_7 (NULL: all three);
 * block_counts is comma-separated positive integers (NULL: the config's
 * num_blocks). out_report receives the comparison table. */
KRN_API krn_status krn_ablation_run(const char* config_json, const char* variants,
                                    const char* block_counts, char** out_report);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KRNET_H */
