/*
 * dira - few-sample domain-incremental adaptation of small classifiers.
 *
 * C interface to the core library: opaque handles, integer status codes,
 * thread-local error messages. All functions returning dira_status set the
 * last-error string on failure; handles created by load/make/build calls are
 * released with the matching free function.
 */
#ifndef DIRA_H
#define DIRA_H

#include <stdint.h>

#if defined(_WIN32)
#define DIRA_API __declspec(dllexport)
#else
#define DIRA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dira_status {
    DIRA_OK = 0,
    DIRA_ERR_INTERNAL = 1, /* unexpected failure */
    DIRA_ERR_CONFIG = 2,   /* bad arguments or configuration */
    DIRA_ERR_FORMAT = 3,   /* malformed data files, integrity failures */
    DIRA_ERR_NUMERIC = 4   /* non-finite values during computation */
} dira_status;

DIRA_API const char* dira_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
DIRA_API const char* dira_last_error(void);

typedef struct dira_dataset dira_dataset;
typedef struct dira_model dira_model;
typedef struct dira_fisher dira_fisher;
typedef struct dira_adapt_result dira_adapt_result;

/* --- datasets ---------------------------------------------------------- */

/* IDX image/label file pair; pixels scaled to [0,1]. */
DIRA_API dira_status dira_dataset_load_idx(const char* images_path, const char* labels_path,
                                           dira_dataset** out);

/* Gaussian blobs on a class simplex, mapped into [0,1]. */
DIRA_API dira_status dira_dataset_make_blobs(int num_classes, int n_per_class, int input_dim,
                                             double class_separation, uint64_t seed, dira_dataset** out);

/* Procedural glyph images (n_per_class per class, 1 channel). */
DIRA_API dira_status dira_dataset_make_glyphs(int num_classes, int n_per_class, int height, int width,
                                              uint64_t seed, dira_dataset** out);

DIRA_API dira_status dira_dataset_split(const dira_dataset* set, double fraction, uint64_t seed,
                                        dira_dataset** first_out, dira_dataset** second_out);

/* Uniform draw of n items without replacement. */
DIRA_API dira_status dira_dataset_sample(const dira_dataset* set, int64_t n, uint64_t seed,
                                         dira_dataset** out);

/* kind: gaussian_noise | shot_noise | impulse_noise | contrast | brightness |
 * pixelate | defocus_blur_boxapprox; severity in 1..5. */
DIRA_API dira_status dira_dataset_corrupt(const dira_dataset* set, const char* kind, int severity,
                                          uint64_t seed, dira_dataset** out);

DIRA_API int64_t dira_dataset_size(const dira_dataset* set);
DIRA_API int dira_dataset_num_classes(const dira_dataset* set);
DIRA_API void dira_dataset_free(dira_dataset* set);

/* --- models -------------------------------------------------------------- */

/* spec_text is the canonical "key=value" model description, e.g.
 *   arch=cnn-small\nclasses=10\nhidden=8,16\ninput=1,10,10\nseed=1\n        */
DIRA_API dira_status dira_model_build(const char* spec_text, dira_model** out);
DIRA_API dira_status dira_model_load(const char* path, dira_model** out);
DIRA_API dira_status dira_model_save(const dira_model* model, const char* path);

/* Top-1 accuracy in [0,1]; ties break toward the lowest class index. */
DIRA_API dira_status dira_model_evaluate(const dira_model* model, const dira_dataset* data, double* top1);

DIRA_API void dira_model_free(dira_model* model);

/* --- source training and Fisher estimation -------------------------------- */

/* Plain SGD with early stopping (loss improvement < 1e-4 over 3 epochs). */
DIRA_API dira_status dira_train_source(dira_model* model, const dira_dataset* train_set, double eta,
                                       int batch_size, int max_epochs, uint64_t seed,
                                       double* final_loss_out);

/* Diagonal empirical Fisher at the model's current parameters. */
DIRA_API dira_status dira_fisher_estimate(dira_model* model, const dira_dataset* data, int64_t n_samples,
                                          uint64_t seed, dira_fisher** out);

DIRA_API dira_status dira_fisher_save(const dira_fisher* fisher, const char* path);

/* companion may be NULL to skip the checkpoint-hash integrity check. */
DIRA_API dira_status dira_fisher_load(const char* path, const dira_model* companion, dira_fisher** out);

DIRA_API void dira_fisher_free(dira_fisher* fisher);

/* --- adaptation ------------------------------------------------------------ */

typedef struct dira_adapt_config {
    double eta;       /* learning rate, default 1e-5 */
    double lambda;    /* EWC penalty weight (lambda/2 convention), default 1 */
    int epochs;       /* default 10 */
    int batch_size;   /* <= 0 means min(32, sample count) */
    uint64_t seed;
} dira_adapt_config;

DIRA_API void dira_adapt_config_init(dira_adapt_config* cfg);

/* Restart-from-M0 adaptation: loads the checkpoint and its Fisher (with
 * integrity check) and minimizes task loss + EWC penalty on the samples. */
DIRA_API dira_status dira_adapt(const char* m0_path, const char* fisher_path,
                                const dira_dataset* target_samples, const dira_adapt_config* cfg,
                                dira_adapt_result** out);

/* Baseline: plain SGD from M0, no penalty. */
DIRA_API dira_status dira_sgd_adapt(const char* m0_path, const dira_dataset* target_samples, double eta,
                                    int epochs, int batch_size, uint64_t seed, dira_adapt_result** out);

DIRA_API int64_t dira_adapt_result_steps(const dira_adapt_result* result);
DIRA_API dira_status dira_adapt_result_loss(const dira_adapt_result* result, int64_t step,
                                            double* task_loss, double* penalty);

/* Materializes the adapted parameters as a standalone model. */
DIRA_API dira_status dira_adapt_result_model(const dira_adapt_result* result, dira_model** out);

DIRA_API void dira_adapt_result_free(dira_adapt_result* result);

/* --- experiment harness -------------------------------------------------- */

/* config_json: the canonical experiment configuration (see README). Each
 * command echoes the config into output_dir and writes its outputs there.
 * The environment variable DIRA_THREADS caps sweep parallelism. */
DIRA_API dira_status dira_cmd_train_source(const char* config_json);
DIRA_API dira_status dira_cmd_sweep(const char* config_json);
DIRA_API dira_status dira_cmd_dynamic(const char* config_json);

/* at_n <= 0 selects the largest sample count present in the CSV. */
DIRA_API dira_status dira_cmd_report(const char* results_csv_path, const char* output_dir, int64_t at_n);

DIRA_API dira_status dira_cmd_gen_data(const char* output_dir, int num_classes, int per_class_train,
                                       int per_class_test, int height, int width, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* DIRA_H */
